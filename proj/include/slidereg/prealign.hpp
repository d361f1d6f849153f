#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "slidereg/conv_score.hpp"
#include "slidereg/ngf.hpp"
#include "slidereg/optimize.hpp"
#include "slidereg/preprocess.hpp"
#include "slidereg/reg_config.hpp"

namespace slidereg {

struct RotatedImage {
    Image image;
    Vec2 origin; // input-frame position of output pixel (0,0)
};

// Rotates about `center` into a canvas covering the bounding box of the
// rotated rectangle; background fills with zero (inverted-intensity
// convention).
inline RotatedImage rotate_image_bbox(const Image& img, double phi, Vec2 center) {
    require(img.channels == 1, errc::argument, "rotation expects a grayscale image");
    double c = std::cos(phi), s = std::sin(phi);
    auto fwd = [&](double x, double y) {
        double dx = x - center.x, dy = y - center.y;
        return Vec2{c * dx - s * dy + center.x, s * dx + c * dy + center.y};
    };
    Vec2 corners[4] = {fwd(0, 0), fwd(img.width - 1, 0), fwd(0, img.height - 1),
                       fwd(img.width - 1, img.height - 1)};
    double minx = corners[0].x, maxx = corners[0].x, miny = corners[0].y, maxy = corners[0].y;
    for (const Vec2& p : corners) {
        minx = std::min(minx, p.x);
        maxx = std::max(maxx, p.x);
        miny = std::min(miny, p.y);
        maxy = std::max(maxy, p.y);
    }
    Vec2 origin{std::floor(minx), std::floor(miny)};
    int ow = static_cast<int>(std::ceil(maxx) - origin.x) + 1;
    int oh = static_cast<int>(std::ceil(maxy) - origin.y) + 1;

    RotatedImage out{Image(ow, oh, 1, img.mpp), origin};
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            // inverse map back into the source frame
            double qx = x + origin.x - center.x, qy = y + origin.y - center.y;
            double sx = c * qx + s * qy + center.x;
            double sy = -s * qx + c * qy + center.y;
            out.image.at(x, y) = sample_bilinear(img, sx, sy);
        }
    return out;
}

struct AraResult {
    RigidParams best;
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<double> angle_scores; // refined NGF per sampled angle
    std::vector<double> angles;       // radians
};

// Automatic rotation alignment: centers of mass give the translation guess;
// n equidistant angles each get a short Gauss-Newton rigid refinement on the
// (masked) NGF, and the smallest refined distance wins.
inline AraResult ara_prealign(const Image& reference, const Image& moving, const Mask& ref_mask,
                              const Mask& mov_mask, const RegConfig& cfg) {
    cfg.validate();
    if (ref_mask.empty_foreground() || mov_mask.empty_foreground())
        fail(errc::empty_mask, "ARA needs non-empty tissue masks");

    Image ref_use = cfg.masked_prealign ? apply_mask(reference, ref_mask) : reference;
    Image mov_use = cfg.masked_prealign ? apply_mask(moving, mov_mask) : moving;
    Vec2 c_ref = center_of_mass(ref_use);
    Vec2 c_mov = center_of_mass(mov_use);
    Vec2 tau0 = c_mov - c_ref;

    SimilarityConfig sim;
    sim.epsilon = cfg.epsilon;

    OptimizeOptions opts;
    opts.max_iter = cfg.ara_refine_iters;
    opts.armijo_c = cfg.armijo_c;
    opts.grad_tol = cfg.grad_tol;
    opts.step_tol = cfg.step_tol;

    AraResult out;
    const double inf = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.n_rotations; ++k) {
        double phi = 2.0 * M_PI * k / cfg.n_rotations;
        out.angles.push_back(phi);

        Eigen::Matrix<double, 3, 1> x;
        x << phi, tau0.x, tau0.y;
        auto make_params = [&](const Eigen::Matrix<double, 3, 1>& p) {
            RigidParams r;
            r.phi = p[0];
            r.t1 = p[1];
            r.t2 = p[2];
            r.center = c_ref;
            return r;
        };
        auto value_only = [&](const Eigen::Matrix<double, 3, 1>& p) {
            try {
                return ngf_value(ref_use, mov_use,
                                 CompositeTransform::from_affine(make_params(p).to_affine()), sim);
            } catch (const error&) {
                return inf;
            }
        };
        double score = inf;
        try {
            auto eval = [&](const Eigen::Matrix<double, 3, 1>& p) {
                NgfGaussNewton<3> gn = ngf_gauss_newton_rigid(ref_use, mov_use, make_params(p), sim);
                GaussNewtonEval<3> e;
                e.value = gn.value;
                for (int i = 0; i < 3; ++i) {
                    e.grad[i] = gn.grad[size_t(i)];
                    for (int j = 0; j < 3; ++j) e.jtj(i, j) = gn.jtj[size_t(i) * 3 + size_t(j)];
                }
                return e;
            };
            OptimizeReport rep = gauss_newton<3>(eval, value_only, x, opts);
            score = rep.trace.back();
        } catch (const error&) {
            // zero overlap at this angle; leave the score infinite
        }
        out.angle_scores.push_back(score);
        if (score < out.best_score) {
            out.best_score = score;
            out.best = make_params(x);
        }
    }
    if (!std::isfinite(out.best_score))
        fail(errc::overlap, "ARA found no angle with image overlap");
    return out;
}

struct TemplateMatchResult {
    double angle_deg = 0.0;
    Vec2 offset{0.0, 0.0};       // moving-origin position in fixed coordinates
    AffineTransform ref_to_moving;
    double score = -std::numeric_limits<double>::infinity();
};

// Rotational template matching: the moving image is rotated about its mask
// center of mass and slid over the (zero-padded) fixed image at every integer
// offset. conv_full scans 0..360 degrees at the configured stride with the
// integer convolution score; ncc_binary checks 0 and 180 degrees with the
// NCC criterion.
inline TemplateMatchResult template_match_rotational(const Image& fixed, const Image& moving,
                                                     const Mask& mov_mask, const RegConfig& cfg) {
    cfg.validate();
    require(fixed.channels == 1 && moving.channels == 1, errc::argument,
            "template matching expects grayscale images");
    if (mov_mask.empty_foreground()) fail(errc::empty_mask, "template matching needs a tissue mask");

    std::vector<double> angles_deg;
    if (cfg.prealign_mode == PrealignMode::ncc_binary) {
        angles_deg = {0.0, 180.0};
    } else {
        for (double a = 0.0; a < 360.0; a += cfg.rotation_stride_deg) angles_deg.push_back(a);
    }
    Vec2 c_mov = center_of_mass(mov_mask);

    TemplateMatchResult best;
    for (double angle : angles_deg) {
        double phi = angle * M_PI / 180.0;
        RotatedImage rot = rotate_image_bbox(moving, phi, c_mov);
        const Image& tpl = rot.image;

        // pad the fixed image so every template placement exists
        int px = tpl.width - 1, py = tpl.height - 1;
        Image padded(fixed.width + 2 * px, fixed.height + 2 * py, 1, fixed.mpp);
        for (int y = 0; y < fixed.height; ++y)
            for (int x = 0; x < fixed.width; ++x) padded.at(x + px, y + py) = fixed.at(x, y);

        ScoreMap map = cfg.prealign_mode == PrealignMode::ncc_binary ? ncc_score_map(padded, tpl)
                                                                     : conv_score_map(padded, tpl);
        if (map.max_value > best.score) {
            best.score = map.max_value;
            best.angle_deg = angle;
            // template origin in fixed coordinates
            Vec2 place{double(map.argmax_dx - px), double(map.argmax_dy - py)};
            // forward map moving -> fixed: rotate about c_mov, shift into the
            // template frame, then to the matched placement
            double c = std::cos(phi), s = std::sin(phi);
            AffineTransform fwd;
            fwd.a11 = c;
            fwd.a12 = -s;
            fwd.a21 = s;
            fwd.a22 = c;
            fwd.tx = c_mov.x - (c * c_mov.x - s * c_mov.y) - rot.origin.x + place.x;
            fwd.ty = c_mov.y - (s * c_mov.x + c * c_mov.y) - rot.origin.y + place.y;
            best.ref_to_moving = fwd.inverse();
            best.offset = place;
        }
    }
    return best;
}

} // namespace slidereg
