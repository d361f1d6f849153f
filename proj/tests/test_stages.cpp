#include <catch2/catch_amalgamated.hpp>

#include "slidereg/affine_stage.hpp"
#include "slidereg/deformable_stage.hpp"
#include "slidereg/rbf_stage.hpp"
#include "test_support.hpp"

using namespace slidereg;

namespace {

RegConfig stage_cfg() {
    RegConfig cfg;
    cfg.pyramid_min_dim = 32;
    cfg.epsilon = 0.05;
    cfg.max_iter_affine = 40;
    cfg.max_iter_deform = 60;
    cfg.grid_h = 8.0;
    cfg.deform_min_dim = 64;
    cfg.alpha = 0.3;
    return cfg;
}

double map_error(const CompositeTransform& recovered, const CompositeTransform& truth,
                 const Mask& mask, int stride = 7) {
    double sum = 0.0;
    int n = 0;
    for (int y = 0; y < mask.height; y += stride)
        for (int x = 0; x < mask.width; x += stride) {
            if (!mask.at(x, y)) continue;
            Vec2 p{double(x), double(y)};
            sum += distance(recovered.apply(p), truth.apply(p));
            ++n;
        }
    return n ? sum / n : 0.0;
}

} // namespace

TEST_CASE("affine stage started at the optimum stays there") {
    testsup::BlobScene scene = testsup::blob_scene(96, 96, 11);
    RegConfig cfg = stage_cfg();
    AffineStageResult r = affine_register_gn(scene.image, scene.image,
                                             AffineTransform::identity(), cfg);
    CHECK(std::abs(r.transform.a11 - 1.0) < 1e-6);
    CHECK(std::abs(r.transform.a12) < 1e-6);
    CHECK(std::abs(r.transform.tx) < 1e-6);
    CHECK(r.converged);
}

TEST_CASE("affine stage recovers a synthetic affine warp") {
    testsup::BlobScene scene = testsup::blob_scene(128, 128, 12, 3);
    // |rotation| <= 20 deg, scale in [0.9, 1.1], shear <= 0.1
    double phi = 15.0 * M_PI / 180.0;
    AffineTransform truth = AffineTransform::rigid(phi, {6, -4}, {63.5, 63.5});
    truth.a11 *= 1.06;
    truth.a21 *= 1.06;
    truth.a12 += 0.05;
    CompositeTransform truth_t = CompositeTransform::from_affine(truth);
    Image moving = testsup::synth_moving(scene.image, truth_t, 128, 128);

    RegConfig cfg = stage_cfg();
    AffineStageResult r = affine_register_gn(scene.image, moving, AffineTransform::identity(), cfg);
    double err = map_error(CompositeTransform::from_affine(r.transform), truth_t, scene.mask);
    CHECK(err < 1.0);
}

TEST_CASE("affine stage traces are non-increasing per level", "[property]") {
    for (std::uint64_t seed = 40; seed < 50; ++seed) {
        testsup::BlobScene scene = testsup::blob_scene(64, 64, seed, 2);
        PrngStream rng(seed, 23);
        AffineTransform truth = AffineTransform::rigid(rng.uniform(-0.3, 0.3),
                                                       {rng.uniform(-5, 5), rng.uniform(-5, 5)},
                                                       {31.5, 31.5});
        Image moving = testsup::synth_moving(scene.image, CompositeTransform::from_affine(truth),
                                             64, 64);
        RegConfig cfg = stage_cfg();
        cfg.max_iter_affine = 15;
        AffineStageResult r = affine_register_gn(scene.image, moving, AffineTransform::identity(), cfg);
        for (const auto& trace : r.level_traces)
            for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    }
}

TEST_CASE("deformable stage leaves identical images in place") {
    testsup::BlobScene scene = testsup::blob_scene(64, 64, 13);
    RegConfig cfg = stage_cfg();
    DeformableStageResult r = deformable_register_lbfgs(scene.image, scene.image,
                                                        AffineTransform::identity(), cfg);
    REQUIRE(r.transform.deform.has_value());
    CHECK(r.transform.deform->max_abs_displacement() < 0.1);
}

TEST_CASE("deformable stage recovers a sinusoidal warp") {
    testsup::BlobScene scene = testsup::blob_scene(128, 128, 14, 3);
    RegConfig cfg = stage_cfg();

    // amplitude 8 px, wavelength >= 8 * grid_h = 64
    CompositeTransform truth;
    DisplacementGrid tg = make_covering_grid(128, 128, 8.0);
    double lambda = 64.0;
    for (int iy = 0; iy < tg.gh; ++iy)
        for (int ix = 0; ix < tg.gw; ++ix) {
            Vec2 p = tg.node_pos(ix, iy);
            tg.u1[tg.node(ix, iy)] = 8.0 * std::sin(2 * M_PI * p.x / lambda);
            tg.u2[tg.node(ix, iy)] = 8.0 * std::sin(2 * M_PI * p.y / lambda);
        }
    truth.deform = tg;
    Image moving = testsup::synth_moving(scene.image, truth, 128, 128);

    DeformableStageResult r =
        deformable_register_lbfgs(scene.image, moving, AffineTransform::identity(), cfg);
    double before = map_error(CompositeTransform::identity(), truth, scene.mask);
    double err = map_error(r.transform, truth, scene.mask);
    CHECK(before > 4.0);
    CHECK(err < 1.5);
}

TEST_CASE("deformable stage with alpha zero minimizes bare NGF") {
    testsup::BlobScene scene = testsup::blob_scene(48, 48, 15);
    RegConfig cfg = stage_cfg();
    cfg.alpha = 0.0;
    cfg.max_iter_deform = 10;
    DeformableStageResult r = deformable_register_lbfgs(scene.image, scene.image,
                                                        AffineTransform::identity(), cfg);
    SimilarityConfig sim;
    sim.epsilon = cfg.epsilon;
    double ngf_final = ngf_value(scene.image, scene.image, r.transform, sim);
    CHECK(r.final_value == Catch::Approx(ngf_final).margin(1e-12));
}

TEST_CASE("deformable traces are non-increasing", "[property]") {
    testsup::BlobScene scene = testsup::blob_scene(64, 64, 16);
    CompositeTransform truth;
    truth.affine.tx = 2.0;
    Image moving = testsup::synth_moving(scene.image, truth, 64, 64);
    RegConfig cfg = stage_cfg();
    cfg.max_iter_deform = 25;
    DeformableStageResult r =
        deformable_register_lbfgs(scene.image, moving, AffineTransform::identity(), cfg);
    for (const auto& trace : r.level_traces)
        for (size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
}

TEST_CASE("tps interpolation is exact at its centers") {
    std::vector<Vec2> centers = {{0, 0}, {40, 0}, {0, 40}, {40, 40}};
    std::vector<Vec2> values = {{3.0, -1.5}, {0, 0}, {0, 0}, {0, 0}};
    TpsModel tps = fit_tps(centers, values);
    for (size_t i = 0; i < centers.size(); ++i) {
        Vec2 v = tps.evaluate(centers[i]);
        CHECK(v.x == Catch::Approx(values[i].x).margin(1e-9));
        CHECK(v.y == Catch::Approx(values[i].y).margin(1e-9));
    }
}

TEST_CASE("boundary keypoints lie on the mask boundary") {
    testsup::BlobScene scene = testsup::blob_scene(64, 64, 17, 2);
    std::vector<Vec2> pts = boundary_keypoints(scene.mask, 16);
    CHECK(pts.size() >= 4);
    for (Vec2 p : pts) {
        int x = int(p.x), y = int(p.y);
        REQUIRE(scene.mask.at(x, y));
        bool has_bg_neighbor = false;
        for (auto [dx, dy] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || nx >= 64 || ny < 0 || ny >= 64 || !scene.mask.at(nx, ny))
                has_bg_neighbor = true;
        }
        CHECK(has_bg_neighbor);
    }
}

TEST_CASE("rbf with an exactly shifted copy reduces to the rigid init") {
    testsup::BlobScene scene = testsup::blob_scene(96, 96, 18, 2, 0.35);
    CompositeTransform shift;
    shift.affine.tx = 7.0; // integer shift: conv corrections come out exactly zero
    shift.affine.ty = -4.0;
    Image moving = testsup::synth_moving(scene.image, shift, 96, 96);

    RegConfig cfg = stage_cfg();
    cfg.rbf_ref_patch = 32;
    cfg.rbf_mov_patch = 64;
    cfg.rbf_boundary_stride = 24;
    cfg.rbf_conv_downscale = 1;
    RbfStageResult r = rbf_deformable(scene.image, moving, shift.affine, scene.mask, cfg);
    REQUIRE_FALSE(r.rigid_fallback);
    REQUIRE(r.transform.deform.has_value());
    CHECK(r.transform.deform->max_abs_displacement() == 0.0);
}

TEST_CASE("rbf stage model reproduces measured corrections at keypoints", "[property]") {
    testsup::BlobScene scene = testsup::blob_scene(96, 96, 19, 2, 0.35);
    CompositeTransform truth;
    truth.affine.tx = 3.0;
    DisplacementGrid tg = make_covering_grid(96, 96, 8.0);
    for (int iy = 0; iy < tg.gh; ++iy)
        for (int ix = 0; ix < tg.gw; ++ix) {
            Vec2 p = tg.node_pos(ix, iy);
            tg.u1[tg.node(ix, iy)] = 4.0 * std::sin(2 * M_PI * p.x / 96.0);
            tg.u2[tg.node(ix, iy)] = -3.0 * std::cos(2 * M_PI * p.y / 96.0);
        }
    truth.deform = tg;
    Image moving = testsup::synth_moving(scene.image, truth, 96, 96);

    RegConfig cfg = stage_cfg();
    cfg.rbf_ref_patch = 32;
    cfg.rbf_mov_patch = 64;
    cfg.rbf_boundary_stride = 20;
    cfg.rbf_conv_downscale = 1;
    RbfStageResult r = rbf_deformable(scene.image, moving, truth.affine, scene.mask, cfg);
    REQUIRE_FALSE(r.rigid_fallback);
    for (size_t i = 0; i < r.keypoints.size(); ++i) {
        Vec2 v = r.tps.evaluate(r.keypoints[i]);
        CHECK(std::abs(v.x - r.corrections[i].x) < 1e-6);
        CHECK(std::abs(v.y - r.corrections[i].y) < 1e-6);
    }
}

TEST_CASE("rbf recovers a local bulge better than rigid-only") {
    testsup::BlobScene scene = testsup::blob_scene(128, 128, 23, 1, 0.35);
    Vec2 com = center_of_mass(scene.mask);

    // wide displacement bump (10 px) centered on the tissue
    CompositeTransform truth;
    DisplacementGrid tg = make_covering_grid(128, 128, 8.0);
    for (int iy = 0; iy < tg.gh; ++iy)
        for (int ix = 0; ix < tg.gw; ++ix) {
            Vec2 p = tg.node_pos(ix, iy);
            double d2 = (p.x - com.x) * (p.x - com.x) + (p.y - com.y) * (p.y - com.y);
            double amp = 10.0 * std::exp(-d2 / (2.0 * 40.0 * 40.0));
            tg.u1[tg.node(ix, iy)] = amp;
            tg.u2[tg.node(ix, iy)] = 0.6 * amp;
        }
    truth.deform = tg;
    Image moving = testsup::synth_moving(scene.image, truth, 128, 128);

    RegConfig cfg = stage_cfg();
    cfg.rbf_ref_patch = 32;
    cfg.rbf_mov_patch = 64;
    cfg.rbf_boundary_stride = 12;
    cfg.rbf_conv_downscale = 1;
    RbfStageResult r = rbf_deformable(scene.image, moving, AffineTransform::identity(),
                                      scene.mask, cfg);
    REQUIRE_FALSE(r.rigid_fallback);

    double rigid_err = map_error(CompositeTransform::identity(), truth, scene.mask, 5);
    double rbf_err = map_error(r.transform, truth, scene.mask, 5);
    CHECK(rbf_err < 0.4 * rigid_err); // >= 60% reduction
}
