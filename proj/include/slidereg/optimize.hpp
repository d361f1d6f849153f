#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "slidereg/errors.hpp"

namespace slidereg {

struct OptimizeOptions {
    int max_iter = 50;
    double grad_tol = 1e-6;
    double step_tol = 1e-8;
    double armijo_c = 1e-4;
    int max_backtracks = 30;
};

struct OptimizeReport {
    std::vector<double> trace; // objective at accepted iterates, trace[0] = initial
    bool converged = false;    // grad/step tolerance met (vs. iteration cap)
    bool damped = false;       // Gauss-Newton needed extra Levenberg damping
    int iterations = 0;
};

namespace detail {

// Armijo backtracking from unit step: halve until
// f(x + t d) <= f0 + c·t·(g·d). Returns t = 0 when no decrease was found.
template <typename ValueFn>
double armijo_backtrack(ValueFn&& value_at, double f0, double slope, double c, int max_backtracks,
                        double* f_out) {
    double t = 1.0;
    for (int k = 0; k <= max_backtracks; ++k) {
        double f = value_at(t);
        if (std::isfinite(f) && f <= f0 + c * t * slope) {
            *f_out = f;
            return t;
        }
        t /= 2.0;
    }
    return 0.0;
}

} // namespace detail

// Gauss-Newton with Armijo backtracking and Levenberg fallback. `eval` fills
// value/gradient/JtJ at x; `value_only` evaluates the objective alone.
//
// The normal equations (JᵀJ + λI)·d = −g start at λ = 1e−8; λ grows ×10 when
// the solve fails, the direction is not a descent direction, or the line
// search cannot find a decrease.
template <int P>
struct GaussNewtonEval {
    double value = 0.0;
    Eigen::Matrix<double, P, 1> grad;
    Eigen::Matrix<double, P, P> jtj;
};

template <int P, typename EvalFn, typename ValueFn>
OptimizeReport gauss_newton(EvalFn&& eval, ValueFn&& value_only,
                            Eigen::Matrix<double, P, 1>& x, const OptimizeOptions& opts) {
    OptimizeReport rep;
    GaussNewtonEval<P> e = eval(x);
    require(std::isfinite(e.value), errc::argument, "objective not finite at the initial point");
    rep.trace.push_back(e.value);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (e.grad.norm() < opts.grad_tol) {
            rep.converged = true;
            break;
        }

        double lambda = 1e-8;
        bool stepped = false;
        for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
            Eigen::Matrix<double, P, P> m = e.jtj;
            for (int i = 0; i < P; ++i) m(i, i) += lambda;
            Eigen::Matrix<double, P, 1> d = m.ldlt().solve(-e.grad);
            double slope = e.grad.dot(d);
            if (!d.allFinite() || slope >= 0.0) {
                lambda *= 10.0;
                rep.damped = true;
                continue;
            }
            double f_new = 0.0;
            double t = detail::armijo_backtrack(
                [&](double tt) { return value_only(x + tt * d); }, e.value, slope, opts.armijo_c,
                opts.max_backtracks, &f_new);
            if (t == 0.0) {
                lambda *= 10.0;
                rep.damped = true;
                continue;
            }
            Eigen::Matrix<double, P, 1> step = t * d;
            x += step;
            e = eval(x);
            rep.trace.push_back(e.value);
            ++rep.iterations;
            stepped = true;
            if (step.template lpNorm<Eigen::Infinity>() < opts.step_tol) {
                rep.converged = true;
                return rep;
            }
        }
        if (!stepped) { // no descent possible from here
            rep.converged = true;
            break;
        }
    }
    return rep;
}

// Limited-memory BFGS (two-loop recursion) with Armijo backtracking. `fg`
// returns the objective value and fills the gradient when the pointer is
// non-null; line-search probes are value-only.
struct LbfgsOptions : OptimizeOptions {
    int memory = 10;
};

template <typename FnValueGrad>
OptimizeReport lbfgs(FnValueGrad&& fg, std::vector<double>& x, const LbfgsOptions& opts) {
    using Vec = Eigen::VectorXd;
    const auto n = static_cast<Eigen::Index>(x.size());
    Vec xv = Eigen::Map<const Vec>(x.data(), n);

    Vec g(n);
    auto eval = [&](const Vec& p, Vec* grad_out) {
        std::vector<double> px(p.data(), p.data() + n);
        std::vector<double> gr;
        double v = fg(px, grad_out ? &gr : nullptr);
        if (grad_out) *grad_out = Eigen::Map<const Vec>(gr.data(), n);
        return v;
    };

    OptimizeReport rep;
    double f = eval(xv, &g);
    require(std::isfinite(f), errc::argument, "objective not finite at the initial point");
    rep.trace.push_back(f);

    std::vector<Vec> s_hist, y_hist;
    std::vector<double> rho_hist;

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (g.norm() < opts.grad_tol) {
            rep.converged = true;
            break;
        }

        // Two-loop recursion for d = −H·g.
        Vec d = -g;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> alpha(static_cast<size_t>(m));
        for (int i = m - 1; i >= 0; --i) {
            alpha[static_cast<size_t>(i)] = rho_hist[static_cast<size_t>(i)] * s_hist[static_cast<size_t>(i)].dot(d);
            d -= alpha[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)];
        }
        if (m > 0) {
            const Vec& slast = s_hist.back();
            const Vec& ylast = y_hist.back();
            double gamma = slast.dot(ylast) / ylast.dot(ylast);
            d *= gamma;
        }
        for (int i = 0; i < m; ++i) {
            double beta = rho_hist[static_cast<size_t>(i)] * y_hist[static_cast<size_t>(i)].dot(d);
            d += (alpha[static_cast<size_t>(i)] - beta) * s_hist[static_cast<size_t>(i)];
        }

        double slope = g.dot(d);
        if (slope >= 0.0) { // fall back to steepest descent
            d = -g;
            slope = g.dot(d);
        }

        Vec g_new(n);
        double f_new = 0.0;
        double t = detail::armijo_backtrack(
            [&](double tt) {
                Vec probe = xv + tt * d;
                return eval(probe, nullptr);
            },
            f, slope, opts.armijo_c, opts.max_backtracks, &f_new);
        if (t == 0.0) {
            rep.converged = true;
            break;
        }

        Vec x_new = xv + t * d;
        f_new = eval(x_new, &g_new);

        Vec s = x_new - xv;
        Vec yv = g_new - g;
        double sy = s.dot(yv);
        if (sy > 1e-12) {
            s_hist.push_back(s);
            y_hist.push_back(yv);
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.erase(s_hist.begin());
                y_hist.erase(y_hist.begin());
                rho_hist.erase(rho_hist.begin());
            }
        }

        xv = x_new;
        f = f_new;
        g = g_new;
        rep.trace.push_back(f);
        ++rep.iterations;
        if (s.lpNorm<Eigen::Infinity>() < opts.step_tol) {
            rep.converged = true;
            break;
        }
    }

    Eigen::Map<Vec>(x.data(), n) = xv;
    return rep;
}

} // namespace slidereg
