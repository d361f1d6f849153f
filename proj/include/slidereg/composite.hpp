#pragma once

#include <optional>
#include <vector>

#include "slidereg/affine.hpp"
#include "slidereg/grid.hpp"
#include "slidereg/image.hpp"

namespace slidereg {

// Total map y(x) = A·x + t + u(x): affine part plus an optional displacement
// lattice (u in moving-frame px, zero outside lattice support). y pulls
// reference coordinates into the moving image.
struct CompositeTransform {
    AffineTransform affine;
    std::optional<DisplacementGrid> deform;

    Vec2 apply(Vec2 p) const {
        Vec2 q = affine.apply(p);
        if (deform) q += deform->interpolate(p);
        return q;
    }

    static CompositeTransform identity() { return {}; }
    static CompositeTransform from_affine(const AffineTransform& a) { return {a, std::nullopt}; }
};

// Bilinear sample with the closed-domain convention: positions in
// [0, w-1] × [0, h-1] are in-domain, everything else reads as `outside`.
inline double sample_bilinear(const Image& img, double x, double y, int c = 0,
                              double outside = 0.0) {
    if (x < 0.0 || x > img.width - 1 || y < 0.0 || y > img.height - 1) return outside;
    int x0 = std::min(static_cast<int>(std::floor(x)), img.width - 2);
    int y0 = std::min(static_cast<int>(std::floor(y)), img.height - 2);
    if (img.width == 1) x0 = 0;
    if (img.height == 1) y0 = 0;
    double fx = x - x0, fy = y - y0;
    int x1 = std::min(x0 + 1, img.width - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    double v00 = img.at(x0, y0, c), v10 = img.at(x1, y0, c);
    double v01 = img.at(x0, y1, c), v11 = img.at(x1, y1, c);
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

struct ReferenceGeometry {
    int width = 0;
    int height = 0;
    double mpp = 1.0;
};

// Pull-back warp: for every reference pixel center x, sample the moving image
// at y(x). Out-of-domain samples read as `outside` (0 for registration
// inputs, 1 for white-background visualization).
inline Image warp_image(const ReferenceGeometry& geom, const CompositeTransform& t,
                        const Image& moving, double outside = 0.0) {
    Image out(geom.width, geom.height, moving.channels, geom.mpp);
    for (int y = 0; y < geom.height; ++y)
        for (int x = 0; x < geom.width; ++x) {
            Vec2 q = t.apply({double(x), double(y)});
            for (int c = 0; c < moving.channels; ++c)
                out.at(x, y, c) = sample_bilinear(moving, q.x, q.y, c, outside);
        }
    return out;
}

struct InvertedPoint {
    Vec2 point;
    bool converged = true; // false when the dense-search fallback was used
};

// Solves y(q) = p for q. Fixed-point iteration
//   q_{k+1} = A^{-1}(p - t - u(q_k)),  q_0 = A^{-1}(p - t),
// which contracts whenever the displacement slope is < 1. On non-convergence
// the reference pixel centers of `domain` are searched exhaustively and the
// result is flagged low-confidence.
inline InvertedPoint invert_point(const CompositeTransform& t, Vec2 p, double tol = 1e-3,
                                  int max_iter = 100,
                                  std::optional<ReferenceGeometry> domain = std::nullopt) {
    AffineTransform inv = t.affine.inverse();
    Vec2 q = inv.apply(p);
    if (!t.deform) return {q, true};

    for (int k = 0; k < max_iter; ++k) {
        Vec2 u = t.deform->interpolate(q);
        Vec2 next = inv.apply({p.x - u.x, p.y - u.y});
        double step = distance(next, q);
        q = next;
        if (step < tol) return {q, true};
    }

    if (domain) {
        Vec2 best = q;
        double best_err = distance(t.apply(q), p);
        for (int yy = 0; yy < domain->height; ++yy)
            for (int xx = 0; xx < domain->width; ++xx) {
                Vec2 cand{double(xx), double(yy)};
                double err = distance(t.apply(cand), p);
                if (err < best_err) {
                    best_err = err;
                    best = cand;
                }
            }
        return {best, false};
    }
    return {q, false};
}

struct MappedLandmarks {
    std::vector<Vec2> points;
    std::vector<std::uint8_t> low_confidence;
};

// Maps moving-frame (IHC) landmarks into the reference (H&E) frame by
// inverting the pull-back transform per point.
inline MappedLandmarks map_landmarks(const CompositeTransform& t, const std::vector<Vec2>& moving_pts,
                                     double tol = 1e-3, int max_iter = 100,
                                     std::optional<ReferenceGeometry> domain = std::nullopt) {
    MappedLandmarks out;
    out.points.reserve(moving_pts.size());
    out.low_confidence.reserve(moving_pts.size());
    for (Vec2 p : moving_pts) {
        InvertedPoint r = invert_point(t, p, tol, max_iter, domain);
        out.points.push_back(r.point);
        out.low_confidence.push_back(r.converged ? 0 : 1);
    }
    return out;
}

} // namespace slidereg
