#pragma once

#include <limits>

#include "slidereg/ngf.hpp"
#include "slidereg/optimize.hpp"
#include "slidereg/preprocess.hpp"
#include "slidereg/reg_config.hpp"
#include "slidereg/regularizer.hpp"

namespace slidereg {

struct DeformableStageResult {
    CompositeTransform transform;
    std::vector<std::vector<double>> level_traces; // J = NGF + alpha CURV, accepted steps
    bool converged = false;
    bool low_overlap = false;
    double final_value = 0.0;
};

// Curvature-regularized deformable registration: minimize
//   J(u) = NGF(R, T, A + u) + alpha · CURV(u)
// by L-BFGS over the control-point displacements, multilevel. The affine part
// stays frozen; u is prolonged between levels by bilinear resampling with the
// px rescaling of the pyramid factor.
inline DeformableStageResult deformable_register_lbfgs(const Image& reference, const Image& moving,
                                                       const AffineTransform& init,
                                                       const RegConfig& cfg) {
    cfg.validate();
    int min_dim = std::max(cfg.deform_min_dim, 4 * int(cfg.grid_h));
    Pyramid ref_pyr = build_pyramid(reference, cfg.pyramid_factor, std::max(min_dim, 8));
    Pyramid mov_pyr = build_pyramid(moving, cfg.pyramid_factor, std::max(min_dim, 8));
    size_t levels = std::min(ref_pyr.count(), mov_pyr.count());

    SimilarityConfig sim;
    sim.epsilon = cfg.epsilon;

    LbfgsOptions opts;
    opts.max_iter = cfg.max_iter_deform;
    opts.memory = cfg.lbfgs_memory;
    opts.armijo_c = cfg.armijo_c;
    opts.grad_tol = cfg.grad_tol;
    opts.step_tol = cfg.step_tol;

    DeformableStageResult out;
    DisplacementGrid grid;
    const double inf = std::numeric_limits<double>::infinity();

    for (size_t li = levels; li-- > 0;) {
        const Image& ref = ref_pyr.level(li);
        const Image& mov = mov_pyr.level(li);
        double shrink = std::pow(double(cfg.pyramid_factor), double(li));
        AffineTransform a = init;
        a.tx /= shrink;
        a.ty /= shrink;

        DisplacementGrid level_grid = make_covering_grid(ref.width, ref.height, cfg.grid_h);
        if (li + 1 < levels) {
            // prolong: sample the coarser field and rescale px units
            for (int iy = 0; iy < level_grid.gh; ++iy)
                for (int ix = 0; ix < level_grid.gw; ++ix) {
                    Vec2 p = level_grid.node_pos(ix, iy);
                    Vec2 u = grid.interpolate(p * (1.0 / cfg.pyramid_factor));
                    level_grid.u1[level_grid.node(ix, iy)] = u.x * cfg.pyramid_factor;
                    level_grid.u2[level_grid.node(ix, iy)] = u.y * cfg.pyramid_factor;
                }
        }

        size_t nn = level_grid.node_count();
        auto fill_grid = [&](const std::vector<double>& x, DisplacementGrid& g) {
            std::copy(x.begin(), x.begin() + long(nn), g.u1.begin());
            std::copy(x.begin() + long(nn), x.end(), g.u2.begin());
        };
        auto fg = [&](const std::vector<double>& x, std::vector<double>* grad) -> double {
            DisplacementGrid g = level_grid;
            fill_grid(x, g);
            if (!grad) {
                double v;
                try {
                    v = ngf_value(ref, mov, CompositeTransform{a, g}, sim);
                } catch (const error&) {
                    return inf;
                }
                if (cfg.alpha > 0.0) v += cfg.alpha * curv(g).value;
                return v;
            }
            NgfValueGrad ng = ngf_gradient_grid(ref, mov, a, g, sim);
            double v = ng.value;
            grad->assign(2 * nn, 0.0);
            for (size_t i = 0; i < 2 * nn; ++i) (*grad)[i] = ng.grad[i];
            if (cfg.alpha > 0.0) {
                CurvResult cr = curv(g);
                v += cfg.alpha * cr.value;
                for (size_t i = 0; i < nn; ++i) {
                    (*grad)[i] += cfg.alpha * cr.grad_u1[i];
                    (*grad)[nn + i] += cfg.alpha * cr.grad_u2[i];
                }
            }
            return v;
        };

        std::vector<double> x(level_grid.u1.begin(), level_grid.u1.end());
        x.insert(x.end(), level_grid.u2.begin(), level_grid.u2.end());
        OptimizeReport rep = lbfgs(fg, x, opts);
        fill_grid(x, level_grid);
        grid = std::move(level_grid);

        out.level_traces.push_back(rep.trace);
        out.converged = rep.converged;
        out.final_value = rep.trace.back();
    }

    NgfTerms final_terms = ngf_distance(ref_pyr.level(0), mov_pyr.level(0),
                                        CompositeTransform{init, grid}, sim);
    out.low_overlap = double(final_terms.n_in) < 0.10 * double(final_terms.n_total);
    out.transform = CompositeTransform{init, std::move(grid)};
    return out;
}

} // namespace slidereg
