#pragma once

#include <limits>

#include "slidereg/ngf.hpp"
#include "slidereg/optimize.hpp"
#include "slidereg/preprocess.hpp"
#include "slidereg/reg_config.hpp"

namespace slidereg {

struct AffineStageResult {
    AffineTransform transform;
    std::vector<std::vector<double>> level_traces; // coarse to fine, accepted steps
    bool converged = false;
    bool damped = false;
    double final_value = 0.0;
};

// NGF-driven Gauss-Newton over the 6 affine parameters, coarse to fine over a
// shared pyramid. Translations scale by the pyramid factor between levels;
// the images are used as given (unmasked).
inline AffineStageResult affine_register_gn(const Image& reference, const Image& moving,
                                            const AffineTransform& init, const RegConfig& cfg) {
    cfg.validate();
    Pyramid ref_pyr = build_pyramid(reference, cfg.pyramid_factor, cfg.pyramid_min_dim);
    Pyramid mov_pyr = build_pyramid(moving, cfg.pyramid_factor, cfg.pyramid_min_dim);
    size_t levels = std::min(ref_pyr.count(), mov_pyr.count());

    SimilarityConfig sim;
    sim.epsilon = cfg.epsilon;

    OptimizeOptions opts;
    opts.max_iter = cfg.max_iter_affine;
    opts.armijo_c = cfg.armijo_c;
    opts.grad_tol = cfg.grad_tol;
    opts.step_tol = cfg.step_tol;

    // start at the coarsest level: translation shrinks by factor^(levels-1)
    double shrink = std::pow(double(cfg.pyramid_factor), double(levels - 1));
    Eigen::Matrix<double, 6, 1> x;
    x << init.a11, init.a12, init.a21, init.a22, init.tx / shrink, init.ty / shrink;

    AffineStageResult out;
    const double inf = std::numeric_limits<double>::infinity();
    for (size_t li = levels; li-- > 0;) {
        const Image& ref = ref_pyr.level(li);
        const Image& mov = mov_pyr.level(li);

        auto to_affine = [](const Eigen::Matrix<double, 6, 1>& p) {
            return AffineTransform{p[0], p[1], p[2], p[3], p[4], p[5]};
        };
        auto eval = [&](const Eigen::Matrix<double, 6, 1>& p) {
            NgfGaussNewton<6> gn = ngf_gauss_newton_affine(ref, mov, to_affine(p), sim);
            GaussNewtonEval<6> e;
            e.value = gn.value;
            for (int i = 0; i < 6; ++i) {
                e.grad[i] = gn.grad[size_t(i)];
                for (int j = 0; j < 6; ++j) e.jtj(i, j) = gn.jtj[size_t(i) * 6 + size_t(j)];
            }
            return e;
        };
        auto value_only = [&](const Eigen::Matrix<double, 6, 1>& p) {
            try {
                return ngf_value(ref, mov, CompositeTransform::from_affine(to_affine(p)), sim);
            } catch (const error&) {
                return inf;
            }
        };

        OptimizeReport rep = gauss_newton<6>(eval, value_only, x, opts);
        out.level_traces.push_back(rep.trace);
        out.converged = rep.converged;
        out.damped = out.damped || rep.damped;
        out.final_value = rep.trace.back();

        if (li > 0) { // prolong to the next finer level
            x[4] *= cfg.pyramid_factor;
            x[5] *= cfg.pyramid_factor;
        }
    }
    out.transform = {x[0], x[1], x[2], x[3], x[4], x[5]};
    return out;
}

} // namespace slidereg
