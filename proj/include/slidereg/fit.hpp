#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "slidereg/affine.hpp"
#include "slidereg/prng.hpp"

namespace slidereg {

// A correspondence: a point in the moving frame matched to a point in the
// reference frame. Fits return the transform mapping reference -> moving
// (the pull-back direction), i.e. moving ≈ T(reference).
struct PointPair {
    Vec2 moving;
    Vec2 reference;
};

struct SimilarityFit {
    AffineTransform transform;
    double rms = 0.0;
};

// Closed-form least-squares similarity (rotation + isotropic scale +
// translation) via the centered complex cross-covariance.
inline SimilarityFit fit_similarity_ls(const std::vector<PointPair>& pairs) {
    require(pairs.size() >= 2, errc::argument, "similarity fit needs >= 2 pairs");
    Vec2 rc{0, 0}, mc{0, 0};
    for (const auto& p : pairs) {
        rc += p.reference;
        mc += p.moving;
    }
    double n = double(pairs.size());
    rc = rc * (1.0 / n);
    mc = mc * (1.0 / n);

    // alpha = sum(m' * conj(r')) / sum(|r'|^2), treating points as complex.
    double num_re = 0.0, num_im = 0.0, den = 0.0;
    for (const auto& p : pairs) {
        Vec2 r = p.reference - rc, m = p.moving - mc;
        num_re += m.x * r.x + m.y * r.y;
        num_im += m.y * r.x - m.x * r.y;
        den += r.dot(r);
    }
    require(den > 0.0, errc::argument, "similarity fit needs non-coincident reference points");

    AffineTransform t;
    t.a11 = num_re / den;
    t.a12 = -num_im / den;
    t.a21 = num_im / den;
    t.a22 = num_re / den;
    Vec2 shift = mc - t.apply_linear(rc);
    t.tx = shift.x;
    t.ty = shift.y;

    double ss = 0.0;
    for (const auto& p : pairs) {
        Vec2 e = t.apply(p.reference) - p.moving;
        ss += e.dot(e);
    }
    return {t, std::sqrt(ss / n)};
}

struct RansacFit {
    AffineTransform transform;
    std::vector<std::uint8_t> inliers; // parallel to the input pairs
    double rms = 0.0;
    size_t inlier_count = 0;
};

// Seeded minimal-sample (2-pair) RANSAC maximizing the inlier count, followed
// by a least-squares refit on the winning inlier set. Pairs are canonically
// sorted before sampling so the result is invariant to input ordering.
inline RansacFit fit_similarity_ransac(const std::vector<PointPair>& pairs, double inlier_px,
                                       int iters, std::uint64_t seed) {
    require(pairs.size() >= 2, errc::argument, "RANSAC needs >= 2 pairs");
    require(inlier_px > 0.0, errc::argument, "inlier threshold must be positive");
    require(iters >= 1, errc::argument, "iteration count must be >= 1");

    std::vector<size_t> canon(pairs.size());
    std::iota(canon.begin(), canon.end(), size_t{0});
    std::sort(canon.begin(), canon.end(), [&](size_t a, size_t b) {
        const auto& pa = pairs[a];
        const auto& pb = pairs[b];
        if (pa.moving.x != pb.moving.x) return pa.moving.x < pb.moving.x;
        if (pa.moving.y != pb.moving.y) return pa.moving.y < pb.moving.y;
        if (pa.reference.x != pb.reference.x) return pa.reference.x < pb.reference.x;
        return pa.reference.y < pb.reference.y;
    });

    PrngStream rng(seed, stream::ransac);
    size_t n = pairs.size();
    std::vector<std::uint8_t> best_inliers;
    size_t best_count = 0;

    for (int it = 0; it < iters; ++it) {
        size_t i = canon[rng.uniform_int(static_cast<std::uint32_t>(n))];
        size_t j = canon[rng.uniform_int(static_cast<std::uint32_t>(n))];
        if (i == j) continue;
        const auto& a = pairs[i];
        const auto& b = pairs[j];
        if (distance(a.reference, b.reference) == 0.0) continue;

        SimilarityFit model = fit_similarity_ls({a, b});
        std::vector<std::uint8_t> inl(n, 0);
        size_t count = 0;
        for (size_t k = 0; k < n; ++k) {
            double err = distance(model.transform.apply(pairs[k].reference), pairs[k].moving);
            if (err <= inlier_px) {
                inl[k] = 1;
                ++count;
            }
        }
        if (count > best_count) {
            best_count = count;
            best_inliers = std::move(inl);
        }
    }

    if (best_count < 2) fail(errc::fit_failure, "RANSAC found no model with >= 2 inliers");

    std::vector<PointPair> kept;
    kept.reserve(best_count);
    for (size_t k = 0; k < n; ++k)
        if (best_inliers[k]) kept.push_back(pairs[k]);
    SimilarityFit refit = fit_similarity_ls(kept);
    return {refit.transform, std::move(best_inliers), refit.rms, best_count};
}

} // namespace slidereg
