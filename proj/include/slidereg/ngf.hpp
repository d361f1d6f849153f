#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "slidereg/composite.hpp"
#include "slidereg/similarity.hpp"

namespace slidereg {

// Normalized gradient fields distance
//
//   NGF(R, T, y) = h²/2 · Σ_i  1 − ( ⟨∇T(y(x_i)), ∇R(x_i)⟩_ε /
//                                    (‖∇T(y(x_i))‖_ε ‖∇R(x_i)‖_ε) )²
//   ⟨a, b⟩_ε = aᵀb + ε²,   ‖a‖_ε = sqrt(⟨a, a⟩_ε)
//
// evaluated over reference pixel centers whose pull-back sample lands inside
// the moving image. ∇T(y(x)) is the discrete gradient of the warped image
// (central differences, one-sided at the borders); each per-pixel term lies
// in [0, 1] by Cauchy-Schwarz on the ε-augmented vectors.

namespace ngf_detail {

// Discrete gradient of a scalar field on the reference lattice.
inline void discrete_gradient(const std::vector<double>& f, int W, int H, std::vector<double>& gx,
                              std::vector<double>& gy) {
    gx.assign(f.size(), 0.0);
    gy.assign(f.size(), 0.0);
    for (int y = 0; y < H; ++y) {
        const size_t row = static_cast<size_t>(y) * W;
        for (int x = 0; x < W; ++x) {
            size_t i = row + x;
            if (W > 1) {
                if (x == 0) gx[i] = f[i + 1] - f[i];
                else if (x == W - 1) gx[i] = f[i] - f[i - 1];
                else gx[i] = (f[i + 1] - f[i - 1]) / 2.0;
            }
            if (H > 1) {
                if (y == 0) gy[i] = f[i + W] - f[i];
                else if (y == H - 1) gy[i] = f[i] - f[i - W];
                else gy[i] = (f[i + W] - f[i - W]) / 2.0;
            }
        }
    }
}

struct Fields {
    int W = 0, H = 0;
    std::vector<double> Tw;          // warped moving image
    std::vector<double> dTx, dTy;    // derivative of the bilinear sample wrt position
    std::vector<std::uint8_t> in;    // pull-back in-domain flag
    std::vector<double> gTx, gTy;    // discrete gradient of Tw
    std::vector<double> gRx, gRy;    // discrete gradient of the reference
    std::vector<double> D;           // per-pixel NGF term
    std::vector<double> pdx, pdy;    // ∂D/∂gTx, ∂D/∂gTy
    size_t n_in = 0;
    double value = 0.0;              // h²/2 · Σ D
};

inline Fields compute_fields(const Image& ref, const Image& mov, const CompositeTransform& t,
                             const SimilarityConfig& cfg, bool need_partials) {
    cfg.validate();
    require(ref.channels == 1 && mov.channels == 1, errc::argument,
            "NGF needs grayscale images");
    Fields f;
    f.W = ref.width;
    f.H = ref.height;
    size_t N = ref.pixel_count();
    f.Tw.assign(N, 0.0);
    f.dTx.assign(N, 0.0);
    f.dTy.assign(N, 0.0);
    f.in.assign(N, 0);

    for (int y = 0; y < f.H; ++y)
        for (int x = 0; x < f.W; ++x) {
            size_t i = static_cast<size_t>(y) * f.W + x;
            Vec2 q = t.apply({double(x), double(y)});
            if (q.x < 0.0 || q.x > mov.width - 1 || q.y < 0.0 || q.y > mov.height - 1) continue;
            int x0 = std::min(static_cast<int>(std::floor(q.x)), mov.width - 2);
            int y0 = std::min(static_cast<int>(std::floor(q.y)), mov.height - 2);
            if (mov.width == 1) x0 = 0;
            if (mov.height == 1) y0 = 0;
            double fx = q.x - x0, fy = q.y - y0;
            int x1 = std::min(x0 + 1, mov.width - 1);
            int y1 = std::min(y0 + 1, mov.height - 1);
            double v00 = mov.at(x0, y0), v10 = mov.at(x1, y0);
            double v01 = mov.at(x0, y1), v11 = mov.at(x1, y1);
            f.Tw[i] = (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
            f.dTx[i] = (1 - fy) * (v10 - v00) + fy * (v11 - v01);
            f.dTy[i] = (1 - fx) * (v01 - v00) + fx * (v11 - v10);
            f.in[i] = 1;
            ++f.n_in;
        }
    if (f.n_in == 0) fail(errc::overlap, "NGF: no reference pixel maps into the moving domain");

    discrete_gradient(f.Tw, f.W, f.H, f.gTx, f.gTy);
    {
        // reference gradient from the raw samples
        std::vector<double> rs(ref.samples.begin(), ref.samples.end());
        discrete_gradient(rs, f.W, f.H, f.gRx, f.gRy);
    }

    double eps2 = cfg.epsilon * cfg.epsilon;
    f.D.assign(N, 0.0);
    if (need_partials) {
        f.pdx.assign(N, 0.0);
        f.pdy.assign(N, 0.0);
    }
    double sum = 0.0;
    for (size_t i = 0; i < N; ++i) {
        if (!f.in[i]) continue;
        double tx = f.gTx[i], ty = f.gTy[i];
        double rx = f.gRx[i], ry = f.gRy[i];
        double ip = tx * rx + ty * ry + eps2;
        double nt2 = tx * tx + ty * ty + eps2;
        double nr2 = rx * rx + ry * ry + eps2;
        double r2 = ip * ip / (nt2 * nr2);
        double d = 1.0 - r2;
        if (d < 0.0) d = 0.0; // roundoff guard; true terms are in [0, 1]
        f.D[i] = d;
        sum += d;
        if (need_partials) {
            // ∂D/∂gT = (2·ip/(nt²·nr²)) · ((ip/nt²)·gT − gR)
            double c = 2.0 * ip / (nt2 * nr2);
            double s = ip / nt2;
            f.pdx[i] = c * (s * tx - rx);
            f.pdy[i] = c * (s * ty - ry);
        }
    }
    f.value = cfg.h * cfg.h / 2.0 * sum;
    return f;
}

// Scatters the per-pixel term partials back through the discrete-gradient
// stencils, producing the adjoint of the warped image. `scale` multiplies
// every contribution (h²/2 for the plain gradient).
inline void scatter_stencil_adjoint(const Fields& f, double scale, std::vector<double>& adj) {
    adj.assign(f.Tw.size(), 0.0);
    for (int y = 0; y < f.H; ++y) {
        const size_t row = static_cast<size_t>(y) * f.W;
        for (int x = 0; x < f.W; ++x) {
            size_t i = row + x;
            if (!f.in[i]) continue;
            double px = f.pdx[i] * scale, py = f.pdy[i] * scale;
            if (f.W > 1) {
                if (x == 0) {
                    adj[i + 1] += px;
                    adj[i] -= px;
                } else if (x == f.W - 1) {
                    adj[i] += px;
                    adj[i - 1] -= px;
                } else {
                    adj[i + 1] += px / 2.0;
                    adj[i - 1] -= px / 2.0;
                }
            }
            if (f.H > 1) {
                if (y == 0) {
                    adj[i + f.W] += py;
                    adj[i] -= py;
                } else if (y == f.H - 1) {
                    adj[i] += py;
                    adj[i - f.W] -= py;
                } else {
                    adj[i + f.W] += py / 2.0;
                    adj[i - f.W] -= py / 2.0;
                }
            }
        }
    }
}

} // namespace ngf_detail

struct NgfTerms {
    double value = 0.0;
    size_t n_in = 0;
    size_t n_total = 0;
    std::vector<double> terms; // per reference pixel, 0 where out-of-domain
};

inline NgfTerms ngf_distance(const Image& ref, const Image& mov, const CompositeTransform& t,
                             const SimilarityConfig& cfg) {
    ngf_detail::Fields f = ngf_detail::compute_fields(ref, mov, t, cfg, false);
    return {f.value, f.n_in, f.Tw.size(), std::move(f.D)};
}

inline double ngf_value(const Image& ref, const Image& mov, const CompositeTransform& t,
                        const SimilarityConfig& cfg) {
    return ngf_detail::compute_fields(ref, mov, t, cfg, false).value;
}

struct NgfValueGrad {
    double value = 0.0;
    std::vector<double> grad;
    size_t n_in = 0;
    size_t n_total = 0;
};

// Gradient wrt the 6 affine parameters (a11, a12, a21, a22, tx, ty).
inline NgfValueGrad ngf_gradient_affine(const Image& ref, const Image& mov,
                                        const AffineTransform& a, const SimilarityConfig& cfg) {
    ngf_detail::Fields f =
        ngf_detail::compute_fields(ref, mov, CompositeTransform::from_affine(a), cfg, true);
    std::vector<double> adj;
    ngf_detail::scatter_stencil_adjoint(f, cfg.h * cfg.h / 2.0, adj);

    NgfValueGrad out;
    out.value = f.value;
    out.n_in = f.n_in;
    out.n_total = f.Tw.size();
    out.grad.assign(6, 0.0);
    for (int y = 0; y < f.H; ++y)
        for (int x = 0; x < f.W; ++x) {
            size_t i = static_cast<size_t>(y) * f.W + x;
            if (!f.in[i] || adj[i] == 0.0) continue;
            double vx = adj[i] * f.dTx[i], vy = adj[i] * f.dTy[i];
            out.grad[0] += vx * x;
            out.grad[1] += vx * y;
            out.grad[2] += vy * x;
            out.grad[3] += vy * y;
            out.grad[4] += vx;
            out.grad[5] += vy;
        }
    return out;
}

// Gradient wrt the lattice displacements, u1 block then u2 block. The affine
// part is frozen.
inline NgfValueGrad ngf_gradient_grid(const Image& ref, const Image& mov,
                                      const AffineTransform& a, const DisplacementGrid& g,
                                      const SimilarityConfig& cfg) {
    CompositeTransform t{a, g};
    ngf_detail::Fields f = ngf_detail::compute_fields(ref, mov, t, cfg, true);
    std::vector<double> adj;
    ngf_detail::scatter_stencil_adjoint(f, cfg.h * cfg.h / 2.0, adj);

    NgfValueGrad out;
    out.value = f.value;
    out.n_in = f.n_in;
    out.n_total = f.Tw.size();
    size_t nn = g.node_count();
    out.grad.assign(2 * nn, 0.0);
    for (int y = 0; y < f.H; ++y)
        for (int x = 0; x < f.W; ++x) {
            size_t i = static_cast<size_t>(y) * f.W + x;
            if (!f.in[i] || adj[i] == 0.0) continue;
            int cx, cy;
            double fx, fy;
            if (!g.locate({double(x), double(y)}, &cx, &cy, &fx, &fy)) continue;
            double vx = adj[i] * f.dTx[i], vy = adj[i] * f.dTy[i];
            const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
            const size_t n[4] = {g.node(cx, cy), g.node(cx + 1, cy), g.node(cx, cy + 1),
                                 g.node(cx + 1, cy + 1)};
            for (int k = 0; k < 4; ++k) {
                out.grad[n[k]] += vx * w[k];
                out.grad[nn + n[k]] += vy * w[k];
            }
        }
    return out;
}

// Gauss-Newton data for a P-parameter transform family. NGF is embedded as a
// least-squares objective via ρ_i = h·sqrt(D_i), so NGF = ½ Σ ρ_i² and the
// normal-equation pieces are JᵀJ and the exact gradient Jᵀρ.
template <int P>
struct NgfGaussNewton {
    double value = 0.0;
    std::array<double, P> grad{};
    std::array<double, P * P> jtj{};
    size_t n_in = 0;
    size_t n_total = 0;
};

// ParamJac: callable (x, y) -> std::array<Vec2, P> giving ∂y(x)/∂θ_p.
template <int P, typename ParamJac>
inline NgfGaussNewton<P> ngf_gauss_newton(const Image& ref, const Image& mov,
                                          const CompositeTransform& t, const SimilarityConfig& cfg,
                                          ParamJac&& param_jac) {
    ngf_detail::Fields f = ngf_detail::compute_fields(ref, mov, t, cfg, true);

    // q[j][p] = ∂Tw[j]/∂θ_p (zero where the pull-back is out of domain)
    size_t N = f.Tw.size();
    std::vector<double> q(N * P, 0.0);
    for (int y = 0; y < f.H; ++y)
        for (int x = 0; x < f.W; ++x) {
            size_t i = static_cast<size_t>(y) * f.W + x;
            if (!f.in[i]) continue;
            std::array<Vec2, P> dy = param_jac(x, y);
            for (int p = 0; p < P; ++p)
                q[i * P + p] = f.dTx[i] * dy[p].x + f.dTy[i] * dy[p].y;
        }

    NgfGaussNewton<P> out;
    out.value = f.value;
    out.n_in = f.n_in;
    out.n_total = N;
    const double w = cfg.h * cfg.h / 2.0;

    auto stencil_row = [&](size_t i, int x, int y, int axis, std::array<double, P>& row) {
        // d(g[i])/dθ through the discrete-gradient stencil along `axis`.
        int extent = axis == 0 ? f.W : f.H;
        int coord = axis == 0 ? x : y;
        size_t stride = axis == 0 ? 1 : static_cast<size_t>(f.W);
        if (extent == 1) {
            row.fill(0.0);
            return;
        }
        const double* qi = q.data() + i * P;
        if (coord == 0) {
            const double* qn = q.data() + (i + stride) * P;
            for (int p = 0; p < P; ++p) row[p] = qn[p] - qi[p];
        } else if (coord == extent - 1) {
            const double* qn = q.data() + (i - stride) * P;
            for (int p = 0; p < P; ++p) row[p] = qi[p] - qn[p];
        } else {
            const double* qa = q.data() + (i + stride) * P;
            const double* qb = q.data() + (i - stride) * P;
            for (int p = 0; p < P; ++p) row[p] = (qa[p] - qb[p]) / 2.0;
        }
    };

    std::array<double, P> rx, ry, dD;
    for (int y = 0; y < f.H; ++y)
        for (int x = 0; x < f.W; ++x) {
            size_t i = static_cast<size_t>(y) * f.W + x;
            if (!f.in[i]) continue;
            stencil_row(i, x, y, 0, rx);
            stencil_row(i, x, y, 1, ry);
            for (int p = 0; p < P; ++p) dD[p] = f.pdx[i] * rx[p] + f.pdy[i] * ry[p];

            for (int p = 0; p < P; ++p) out.grad[p] += w * dD[p];

            // J row: (h / (2 sqrt(D))) · dD, with the denominator clamped. The
            // gradient above stays exact — the clamp only shapes JᵀJ.
            double sigma = std::sqrt(std::max(f.D[i], 1e-12));
            double scale = cfg.h / (2.0 * sigma);
            for (int p = 0; p < P; ++p)
                for (int r = p; r < P; ++r)
                    out.jtj[p * P + r] += (scale * dD[p]) * (scale * dD[r]);
        }
    for (int p = 0; p < P; ++p)
        for (int r = 0; r < p; ++r) out.jtj[p * P + r] = out.jtj[r * P + p];
    return out;
}

inline NgfGaussNewton<6> ngf_gauss_newton_affine(const Image& ref, const Image& mov,
                                                 const AffineTransform& a,
                                                 const SimilarityConfig& cfg) {
    return ngf_gauss_newton<6>(ref, mov, CompositeTransform::from_affine(a), cfg,
                               [](int x, int y) {
                                   return std::array<Vec2, 6>{Vec2{double(x), 0.0}, Vec2{double(y), 0.0},
                                                              Vec2{0.0, double(x)}, Vec2{0.0, double(y)},
                                                              Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
                               });
}

// Rigid parameters (phi, t1, t2) about a fixed rotation center.
inline NgfGaussNewton<3> ngf_gauss_newton_rigid(const Image& ref, const Image& mov,
                                                const RigidParams& r, const SimilarityConfig& cfg) {
    double c = std::cos(r.phi), s = std::sin(r.phi);
    Vec2 ctr = r.center;
    return ngf_gauss_newton<3>(ref, mov, CompositeTransform::from_affine(r.to_affine()), cfg,
                               [c, s, ctr](int x, int y) {
                                   double dx = x - ctr.x, dy = y - ctr.y;
                                   // d/dphi Rot(phi)·(p − c) = Rot'(phi)·(p − c)
                                   return std::array<Vec2, 3>{Vec2{-s * dx - c * dy, c * dx - s * dy},
                                                              Vec2{1.0, 0.0}, Vec2{0.0, 1.0}};
                               });
}

} // namespace slidereg
