#include <catch2/catch_amalgamated.hpp>

#include "slidereg/composite.hpp"
#include "slidereg/transform_io.hpp"
#include "test_support.hpp"

using namespace slidereg;

TEST_CASE("affine apply") {
    CHECK(CompositeTransform::identity().apply({3, 4}).x == 3);

    AffineTransform rot = AffineTransform::rigid(M_PI / 2, {0, 0});
    Vec2 p = rot.apply({1, 0});
    CHECK(p.x == Catch::Approx(0.0).margin(1e-15));
    CHECK(p.y == Catch::Approx(1.0));

    AffineTransform scale;
    scale.a11 = scale.a22 = 2.0;
    scale.tx = 1.0;
    Vec2 q = scale.apply({3, 4});
    CHECK(q.x == 7);
    CHECK(q.y == 8);
}

TEST_CASE("affine inverse round trips") {
    CHECK(AffineTransform::identity().inverse().is_identity());

    AffineTransform singular;
    singular.a11 = singular.a22 = 0.0;
    singular.a12 = singular.a21 = 0.0;
    CHECK_THROWS_AS(singular.inverse(), error);
    try {
        singular.inverse();
    } catch (const error& e) {
        CHECK(e.kind() == errc::singular);
        CHECK(std::string(e.what()).find("det") != std::string::npos);
    }

    PrngStream rng(1, 2);
    AffineTransform a;
    a.a11 = 1.0 + rng.uniform(-0.3, 0.3);
    a.a12 = rng.uniform(-0.3, 0.3);
    a.a21 = rng.uniform(-0.3, 0.3);
    a.a22 = 1.0 + rng.uniform(-0.3, 0.3);
    a.tx = rng.uniform(-20, 20);
    a.ty = rng.uniform(-20, 20);
    AffineTransform inv = a.inverse();
    for (int i = 0; i < 100; ++i) {
        Vec2 p{rng.uniform(0, 1), rng.uniform(0, 1)};
        Vec2 back = inv.apply(a.apply(p));
        CHECK(std::abs(back.x - p.x) < 1e-12);
        CHECK(std::abs(back.y - p.y) < 1e-12);
    }
}

TEST_CASE("grid interpolation") {
    DisplacementGrid g(3, 3, 10.0);
    SECTION("constant field everywhere inside support") {
        for (auto& v : g.u1) v = 2.5;
        for (auto& v : g.u2) v = -1.0;
        Vec2 u = g.interpolate({7.3, 12.9});
        CHECK(u.x == Catch::Approx(2.5));
        CHECK(u.y == Catch::Approx(-1.0));
    }
    SECTION("node query returns the node value") {
        g.u1[g.node(1, 2)] = 4.0;
        Vec2 u = g.interpolate(g.node_pos(1, 2));
        CHECK(u.x == Catch::Approx(4.0));
    }
    SECTION("cell center averages the four corners") {
        g.u1[g.node(0, 0)] = 1.0;
        g.u1[g.node(1, 0)] = 2.0;
        g.u1[g.node(0, 1)] = 3.0;
        g.u1[g.node(1, 1)] = 6.0;
        Vec2 u = g.interpolate({5.0, 5.0});
        CHECK(u.x == Catch::Approx(3.0));
    }
    SECTION("outside support is zero") {
        for (auto& v : g.u1) v = 9.0;
        CHECK(g.interpolate({-0.01, 5}).x == 0.0);
        CHECK(g.interpolate({20.01, 5}).x == 0.0);
        CHECK(g.interpolate({20.0, 20.0}).x == Catch::Approx(9.0)); // boundary included
    }
}

TEST_CASE("warp with identity transform is bit-identical") {
    Image img = testsup::random_quantized_image(13, 9, 4);
    Image out = warp_image({img.width, img.height, img.mpp}, CompositeTransform::identity(), img);
    CHECK(out.samples == img.samples);
}

TEST_CASE("warp of a constant image stays constant in-domain") {
    Image img = testsup::constant_image(16, 16, 77);
    CompositeTransform t;
    t.affine.tx = 1.5;
    t.affine.ty = 0.5;
    Image out = warp_image({12, 12, 1.0}, t, img);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) CHECK(out.at(x, y) == Catch::Approx(77 / 255.0));
}

TEST_CASE("warp interpolates a half-pixel translation on a ramp") {
    // ramp 0,10,20,... along x
    Image img(6, 3, 1);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 6; ++x) img.at(x, y) = 10.0 * x / 255.0;
    CompositeTransform t;
    t.affine.tx = 0.5;
    Image out = warp_image({6, 3, 1.0}, t, img);
    for (int x = 0; x + 1 < 6; ++x)
        CHECK(out.at(x, 1) == Catch::Approx((10.0 * x + 5.0) / 255.0));
}

TEST_CASE("warp agrees with apply at every in-domain pixel", "[property]") {
    Image img = testsup::smooth_random_image(20, 16, 8);
    CompositeTransform t;
    t.affine = AffineTransform::rigid(0.2, {1.0, -0.5}, {10, 8});
    DisplacementGrid g(5, 4, 6.0);
    PrngStream rng(5, 6);
    for (auto& v : g.u1) v = rng.uniform(-1, 1);
    for (auto& v : g.u2) v = rng.uniform(-1, 1);
    t.deform = g;

    Image out = warp_image({20, 16, 1.0}, t, img);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 20; ++x) {
            Vec2 q = t.apply({double(x), double(y)});
            double direct = sample_bilinear(img, q.x, q.y);
            CHECK(out.at(x, y) == Catch::Approx(direct).margin(1e-14));
        }
}

TEST_CASE("invert_point on affine-only composites is exact") {
    CompositeTransform t;
    t.affine = AffineTransform::rigid(0.4, {12, -3}, {5, 5});
    Vec2 p = t.apply({3.25, 4.5});
    InvertedPoint r = invert_point(t, p);
    CHECK(r.converged);
    CHECK(r.point.x == Catch::Approx(3.25).margin(1e-12));
    CHECK(r.point.y == Catch::Approx(4.5).margin(1e-12));
}

TEST_CASE("invert_point with a constant displacement field") {
    CompositeTransform t;
    t.affine.a11 = 1.2;
    t.affine.a22 = 0.9;
    t.affine.tx = 4.0;
    DisplacementGrid g(4, 4, 40.0); // support [0,120]^2
    for (auto& v : g.u1) v = 3.0;
    for (auto& v : g.u2) v = -2.0;
    t.deform = g;

    Vec2 q_true{30.0, 40.0};
    Vec2 p = t.apply(q_true);
    InvertedPoint r = invert_point(t, p, 1e-9, 200);
    CHECK(r.converged);
    CHECK(r.point.x == Catch::Approx(q_true.x).margin(1e-6));
    CHECK(r.point.y == Catch::Approx(q_true.y).margin(1e-6));
}

TEST_CASE("invert_point matches a dense-search oracle on a smooth field", "[property]") {
    // displacement slope <= ~0.3: contraction regime
    CompositeTransform t;
    t.affine = AffineTransform::rigid(0.1, {2.0, 1.0}, {16, 16});
    DisplacementGrid g(9, 9, 4.0); // support [0,32]^2
    for (int iy = 0; iy < 9; ++iy)
        for (int ix = 0; ix < 9; ++ix) {
            g.u1[g.node(ix, iy)] = 1.1 * std::sin(0.25 * ix) * std::cos(0.21 * iy);
            g.u2[g.node(ix, iy)] = 1.1 * std::cos(0.23 * ix) * std::sin(0.27 * iy);
        }
    t.deform = g;

    PrngStream rng(17, 8);
    for (int k = 0; k < 25; ++k) {
        Vec2 q{rng.uniform(4, 28), rng.uniform(4, 28)};
        Vec2 p = t.apply(q);
        InvertedPoint r = invert_point(t, p, 1e-3, 100);
        REQUIRE(r.converged);
        CHECK(distance(t.apply(r.point), p) < 1e-3);

        // brute-force oracle: best reference point on a fine subgrid
        Vec2 best{0, 0};
        double best_err = 1e30;
        for (double yy = 0; yy <= 32.0; yy += 0.25)
            for (double xx = 0; xx <= 32.0; xx += 0.25) {
                double err = distance(t.apply({xx, yy}), p);
                if (err < best_err) {
                    best_err = err;
                    best = {xx, yy};
                }
            }
        // fixed-point answer is at least as close as the subgrid oracle (up to its pitch)
        CHECK(distance(r.point, best) < 0.25 + 0.01);
    }
}

TEST_CASE("map_landmarks affine path equals invert-then-apply") {
    CompositeTransform t;
    t.affine = AffineTransform::rigid(-0.3, {5, 5}, {0, 0});
    std::vector<Vec2> pts = {{1, 2}, {10, 4}, {3.5, 8.25}};
    MappedLandmarks mapped = map_landmarks(t, pts);
    AffineTransform inv = t.affine.inverse();
    for (size_t i = 0; i < pts.size(); ++i) {
        Vec2 direct = inv.apply(pts[i]);
        CHECK(std::abs(mapped.points[i].x - direct.x) < 1e-9);
        CHECK(std::abs(mapped.points[i].y - direct.y) < 1e-9);
        CHECK(mapped.low_confidence[i] == 0);
    }

    MappedLandmarks ident = map_landmarks(CompositeTransform::identity(), pts);
    for (size_t i = 0; i < pts.size(); ++i) CHECK(ident.points[i].x == pts[i].x);

    CompositeTransform shift;
    shift.affine.tx = 7;
    shift.affine.ty = -2;
    MappedLandmarks back = map_landmarks(shift, pts);
    for (size_t i = 0; i < pts.size(); ++i) {
        CHECK(back.points[i].x == Catch::Approx(pts[i].x - 7));
        CHECK(back.points[i].y == Catch::Approx(pts[i].y + 2));
    }
}

TEST_CASE("landmark round trip in the contraction regime", "[property]") {
    CompositeTransform t;
    t.affine = AffineTransform::rigid(0.15, {-2, 3}, {10, 10});
    DisplacementGrid g(6, 6, 8.0);
    PrngStream rng(77, 9);
    for (auto& v : g.u1) v = rng.uniform(-1.5, 1.5);
    for (auto& v : g.u2) v = rng.uniform(-1.5, 1.5);
    t.deform = g;
    for (int k = 0; k < 50; ++k) {
        Vec2 p{rng.uniform(0, 40), rng.uniform(0, 40)};
        InvertedPoint r = invert_point(t, p, 1e-3, 100);
        if (r.converged) CHECK(distance(t.apply(r.point), p) < 1.5e-3);
    }
}

TEST_CASE("transform file round trip") {
    testsup::TempDir dir("tio");
    CompositeTransform t;
    t.affine = {1.25, -0.125, 0.06251, 0.98, 17.375, -2.5};
    DisplacementGrid g(3, 2, 16.0, {1.5, 2.5});
    g.u1 = {0.1, 0.2, 0.3, -0.4, 1e-17, 4.6};
    g.u2 = {0, 0.5, -0.25, 0.75, 2.0, -3.0};
    t.deform = g;

    std::string path = dir.str("t.txt");
    write_transform(t, path);
    CompositeTransform back = read_transform(path);
    CHECK(back.affine.a11 == t.affine.a11);
    CHECK(back.affine.ty == t.affine.ty);
    REQUIRE(back.deform.has_value());
    CHECK(back.deform->gw == 3);
    CHECK(back.deform->origin.x == 1.5);
    CHECK(back.deform->u1 == g.u1);
    CHECK(back.deform->u2 == g.u2);

    // affine-only file has one line
    CompositeTransform plain = CompositeTransform::from_affine(t.affine);
    std::string p2 = dir.str("plain.txt");
    write_transform(plain, p2);
    CompositeTransform back2 = read_transform(p2);
    CHECK_FALSE(back2.deform.has_value());
    CHECK(back2.affine.tx == t.affine.tx);
}

TEST_CASE("transform file errors carry context") {
    testsup::TempDir dir("tio_err");
    std::string path = dir.str("bad.txt");
    {
        std::ofstream out(path);
        out << "affine 1 0 0 1 0\n"; // 5 values
    }
    CHECK_THROWS_AS(read_transform(path), error);
    CHECK_THROWS_AS(read_transform(dir.str("missing.txt")), error);
}
