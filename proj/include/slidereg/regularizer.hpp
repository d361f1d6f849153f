#pragma once

#include <vector>

#include "slidereg/grid.hpp"

namespace slidereg {

namespace detail {

// 5-point discrete Laplacian with Neumann boundary handling via ghost-node
// replication (ghost = nearest boundary node). Symmetric, and exactly zero on
// constant fields.
inline void laplacian(const DisplacementGrid& g, const std::vector<double>& u,
                      std::vector<double>& out) {
    out.assign(u.size(), 0.0);
    double inv_h2 = 1.0 / (g.h * g.h);
    for (int iy = 0; iy < g.gh; ++iy)
        for (int ix = 0; ix < g.gw; ++ix) {
            size_t i = g.node(ix, iy);
            double c = u[i];
            double left = ix > 0 ? u[g.node(ix - 1, iy)] : c;
            double right = ix < g.gw - 1 ? u[g.node(ix + 1, iy)] : c;
            double up = iy > 0 ? u[g.node(ix, iy - 1)] : c;
            double down = iy < g.gh - 1 ? u[g.node(ix, iy + 1)] : c;
            out[i] = (left + right + up + down - 4.0 * c) * inv_h2;
        }
}

} // namespace detail

struct CurvResult {
    double value = 0.0;
    std::vector<double> grad_u1;
    std::vector<double> grad_u2;
};

// Curvature penalty (h²/2) Σ |Δu1|² + |Δu2|² over the lattice nodes, Δ the
// 5-point Laplacian above. The gradient is h²·Δ(Δu) per component, exact by
// the symmetry of the replicated-ghost operator.
inline CurvResult curv(const DisplacementGrid& g) {
    CurvResult r;
    std::vector<double> lap1, lap2, bilap;
    detail::laplacian(g, g.u1, lap1);
    detail::laplacian(g, g.u2, lap2);
    double w = g.h * g.h / 2.0;
    for (size_t i = 0; i < lap1.size(); ++i)
        r.value += w * (lap1[i] * lap1[i] + lap2[i] * lap2[i]);

    detail::laplacian(g, lap1, bilap);
    r.grad_u1.resize(bilap.size());
    for (size_t i = 0; i < bilap.size(); ++i) r.grad_u1[i] = g.h * g.h * bilap[i];
    detail::laplacian(g, lap2, bilap);
    r.grad_u2.resize(bilap.size());
    for (size_t i = 0; i < bilap.size(); ++i) r.grad_u2[i] = g.h * g.h * bilap[i];
    return r;
}

// Diffusive penalty (h²/2) Σ ‖∇u1‖² + ‖∇u2‖² with forward differences,
// falling back to the backward difference on the max boundary so every node
// contributes.
inline double diffusive(const DisplacementGrid& g) {
    auto dx = [&](const std::vector<double>& u, int ix, int iy) {
        if (ix < g.gw - 1) return (u[g.node(ix + 1, iy)] - u[g.node(ix, iy)]) / g.h;
        return (u[g.node(ix, iy)] - u[g.node(ix - 1, iy)]) / g.h;
    };
    auto dy = [&](const std::vector<double>& u, int ix, int iy) {
        if (iy < g.gh - 1) return (u[g.node(ix, iy + 1)] - u[g.node(ix, iy)]) / g.h;
        return (u[g.node(ix, iy)] - u[g.node(ix, iy - 1)]) / g.h;
    };
    double sum = 0.0;
    for (int iy = 0; iy < g.gh; ++iy)
        for (int ix = 0; ix < g.gw; ++ix) {
            double g1x = dx(g.u1, ix, iy), g1y = dy(g.u1, ix, iy);
            double g2x = dx(g.u2, ix, iy), g2y = dy(g.u2, ix, iy);
            sum += g1x * g1x + g1y * g1y + g2x * g2x + g2y * g2y;
        }
    return g.h * g.h / 2.0 * sum;
}

} // namespace slidereg
