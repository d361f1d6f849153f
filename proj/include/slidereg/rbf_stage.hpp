#pragma once

#include <Eigen/Dense>
#include <vector>

#include "slidereg/components.hpp"
#include "slidereg/conv_score.hpp"
#include "slidereg/preprocess.hpp"
#include "slidereg/reg_config.hpp"

namespace slidereg {

// Ordered outer contour of each connected component (Moore-neighbor tracing,
// clockwise, 8-connected walk around 4-connected components).
inline std::vector<std::vector<Vec2>> trace_boundaries(const Mask& m) {
    ComponentLabels comp = label_components(m);
    std::vector<std::vector<Vec2>> contours;
    if (comp.count == 0) return contours;

    // clockwise 8-neighborhood in image coordinates (y grows downward)
    const int dx8[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    const int dy8[8] = {0, -1, -1, -1, 0, 1, 1, 1};
    auto inside = [&](int x, int y) { return x >= 0 && x < m.width && y >= 0 && y < m.height; };

    std::vector<char> started(size_t(comp.count), 0);
    for (int y = 0; y < m.height && contours.size() < size_t(comp.count); ++y) {
        for (int x = 0; x < m.width; ++x) {
            if (!m.at(x, y)) continue;
            int id = comp.labels[size_t(y) * m.width + x];
            if (started[size_t(id)]) continue;
            started[size_t(id)] = 1;

            std::vector<Vec2> contour;
            int sx = x, sy = y;        // scan order guarantees the W neighbor is background
            int cx = sx, cy = sy;
            int backtrack = 0;         // direction index pointing at the previous background
            contour.push_back({double(sx), double(sy)});
            size_t cap = 4 * comp.areas[size_t(id)] + 8;
            while (contour.size() < cap) {
                int found = -1;
                for (int k = 1; k <= 8; ++k) {
                    int dir = (backtrack + k) % 8;
                    int nx = cx + dx8[dir], ny = cy + dy8[dir];
                    if (inside(nx, ny) && m.at(nx, ny) &&
                        comp.labels[size_t(ny) * m.width + nx] == id) {
                        found = dir;
                        break;
                    }
                }
                if (found < 0) break; // isolated pixel
                // next backtrack points from the new pixel toward the last
                // background examined (one step counterclockwise of `found`)
                cx += dx8[found];
                cy += dy8[found];
                backtrack = (found + 5) % 8;
                if (cx == sx && cy == sy) break;
                contour.push_back({double(cx), double(cy)});
            }
            contours.push_back(std::move(contour));
        }
    }
    return contours;
}

// K points spread uniformly by arc position, one per `stride` boundary px and
// at least `min_total` across all contours.
inline std::vector<Vec2> boundary_keypoints(const Mask& m, int stride, int min_total = 4) {
    std::vector<std::vector<Vec2>> contours = trace_boundaries(m);
    if (contours.empty()) fail(errc::empty_mask, "no boundary to sample keypoints from");

    size_t longest = 0;
    for (size_t i = 1; i < contours.size(); ++i)
        if (contours[i].size() > contours[longest].size()) longest = i;

    std::vector<size_t> counts(contours.size());
    size_t total = 0;
    for (size_t i = 0; i < contours.size(); ++i) {
        counts[i] = std::max<size_t>(1, contours[i].size() / size_t(stride));
        total += counts[i];
    }
    if (total < size_t(min_total))
        counts[longest] += size_t(min_total) - total;

    std::vector<Vec2> points;
    for (size_t i = 0; i < contours.size(); ++i) {
        const auto& c = contours[i];
        size_t k = std::min(counts[i], c.size());
        for (size_t j = 0; j < k; ++j) points.push_back(c[j * c.size() / k]);
    }
    return points;
}

// Thin-plate spline interpolant with kernel r² log r and an affine polynomial
// term; exact at the centers.
struct TpsModel {
    std::vector<Vec2> centers;
    std::vector<double> w1, w2; // kernel weights per component
    double a1[3] = {0, 0, 0};   // affine term: a[0] + a[1] x + a[2] y
    double a2[3] = {0, 0, 0};

    static double kernel(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

    Vec2 evaluate(Vec2 p) const {
        double v1 = a1[0] + a1[1] * p.x + a1[2] * p.y;
        double v2 = a2[0] + a2[1] * p.x + a2[2] * p.y;
        for (size_t i = 0; i < centers.size(); ++i) {
            double k = kernel(distance(p, centers[i]));
            v1 += w1[i] * k;
            v2 += w2[i] * k;
        }
        return {v1, v2};
    }
};

// Exact-interpolation TPS through (centers[i] -> values[i]).
inline TpsModel fit_tps(const std::vector<Vec2>& centers, const std::vector<Vec2>& values) {
    require(centers.size() >= 3 && centers.size() == values.size(), errc::argument,
            "TPS needs >= 3 centers with matching values");
    const int n = int(centers.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 3, n + 3);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 3, 2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j)
            A(i, j) = TpsModel::kernel(distance(centers[size_t(i)], centers[size_t(j)]));
        A(i, n) = 1.0;
        A(i, n + 1) = centers[size_t(i)].x;
        A(i, n + 2) = centers[size_t(i)].y;
        A(n, i) = 1.0;
        A(n + 1, i) = centers[size_t(i)].x;
        A(n + 2, i) = centers[size_t(i)].y;
        rhs(i, 0) = values[size_t(i)].x;
        rhs(i, 1) = values[size_t(i)].y;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) fail(errc::degenerate, "TPS system is singular (collinear keypoints?)");
    Eigen::MatrixXd sol = lu.solve(rhs);

    TpsModel model;
    model.centers = centers;
    model.w1.resize(size_t(n));
    model.w2.resize(size_t(n));
    for (int i = 0; i < n; ++i) {
        model.w1[size_t(i)] = sol(i, 0);
        model.w2[size_t(i)] = sol(i, 1);
    }
    for (int k = 0; k < 3; ++k) {
        model.a1[k] = sol(n + k, 0);
        model.a2[k] = sol(n + k, 1);
    }
    return model;
}

namespace rbf_detail {

// Zero-filled patch of side `size` whose top-left corner sits at (cx, cy) -
// size/2 in the source image.
inline Image extract_patch(const Image& img, Vec2 center, int size) {
    Image out(size, size, 1, img.mpp);
    int x0 = int(std::lround(center.x)) - size / 2;
    int y0 = int(std::lround(center.y)) - size / 2;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            int sx = x0 + x, sy = y0 + y;
            if (sx >= 0 && sx < img.width && sy >= 0 && sy < img.height)
                out.at(x, y) = img.at(sx, sy);
        }
    return out;
}

inline bool all_zero(const Image& img) {
    for (double v : img.samples)
        if (v != 0.0) return false;
    return true;
}

} // namespace rbf_detail

struct RbfStageResult {
    CompositeTransform transform;
    TpsModel tps;                    // the exact interpolant behind the emitted grid
    std::vector<Vec2> keypoints;     // surviving keypoints (reference frame)
    std::vector<Vec2> corrections;   // measured local corrections (moving-frame px)
    bool rigid_fallback = false;     // too few usable keypoints
};

// Local-correction deformable stage: keypoints sampled along the reference
// tissue boundary, a reference patch matched by integer convolution inside a
// larger rigidly-aligned moving patch, and the resulting corrections spread
// over the reference domain by thin-plate-spline interpolation, emitted as a
// dense control grid on top of the rigid initialization.
inline RbfStageResult rbf_deformable(const Image& reference, const Image& moving,
                                     const AffineTransform& rigid_init, const Mask& ref_mask,
                                     const RegConfig& cfg) {
    cfg.validate();
    if (ref_mask.empty_foreground()) fail(errc::empty_mask, "RBF stage needs a reference mask");

    std::vector<Vec2> candidates = boundary_keypoints(ref_mask, cfg.rbf_boundary_stride);

    int ds = cfg.rbf_conv_downscale;
    std::vector<Vec2> keypoints, corrections;
    for (Vec2 kp : candidates) {
        Image ref_patch = rbf_detail::extract_patch(reference, kp, cfg.rbf_ref_patch);
        Image mov_patch = rbf_detail::extract_patch(moving, rigid_init.apply(kp), cfg.rbf_mov_patch);
        if (rbf_detail::all_zero(ref_patch) || rbf_detail::all_zero(mov_patch)) continue;
        if (ds > 1) {
            ref_patch = downsample(ref_patch, ds);
            mov_patch = downsample(mov_patch, ds);
        }
        ScoreMap map = conv_score_map(mov_patch, ref_patch);
        double center_place = double((cfg.rbf_mov_patch - cfg.rbf_ref_patch) / 2 / ds);
        Vec2 corr{(map.argmax_dx - center_place) * ds, (map.argmax_dy - center_place) * ds};
        keypoints.push_back(kp);
        corrections.push_back(corr);
    }

    RbfStageResult out;
    if (keypoints.size() < 4) {
        out.transform = CompositeTransform::from_affine(rigid_init);
        out.rigid_fallback = true;
        return out;
    }

    out.tps = fit_tps(keypoints, corrections);
    out.keypoints = std::move(keypoints);
    out.corrections = std::move(corrections);

    DisplacementGrid grid = make_covering_grid(reference.width, reference.height, cfg.grid_h);
    for (int iy = 0; iy < grid.gh; ++iy)
        for (int ix = 0; ix < grid.gw; ++ix) {
            Vec2 u = out.tps.evaluate(grid.node_pos(ix, iy));
            grid.u1[grid.node(ix, iy)] = u.x;
            grid.u2[grid.node(ix, iy)] = u.y;
        }
    out.transform = CompositeTransform{rigid_init, std::move(grid)};
    return out;
}

} // namespace slidereg
