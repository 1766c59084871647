#pragma once

#include <chrono>
#include <utility>
#include <vector>

#include "lpnorm/homotopy.hpp"
#include "lpnorm/problem.hpp"

namespace lpnorm {

struct IrlsStep {
    Vector delta;
    double k_ratio = 1.0;
    double alpha0 = 0.5;
    double kappa = 0.0;  // 2^13 p^2 / alpha0
    double s = 0.0;      // padding added to the reweighting diagonal
};

// Alg. 11: padded weighted least-squares residual step.  Maximizes
// g^T N D - D^T N^T (R + s I) N D over A D = 0 with g = Diag(|Nx|^{p-2}) Nx,
// R = 2 Diag(|Nx|^{p-2}), s = (nu/m)^{(p-2)/p}.
inline IrlsStep irls_residual(const Vector& x, const Matrix& n, const Matrix& a, double nu,
                              double p) {
    if (!(nu > 0.0)) throw SolverError("irls_residual: nu must be positive");
    const double m = static_cast<double>(n.rows());
    const Vector nx = n * x;
    const Vector wp = abs_pow_weights(nx, p - 2.0);
    const Vector g = wp.cwiseProduct(nx);

    IrlsStep step;
    step.s = std::pow(nu / m, (p - 2.0) / p);
    // Q = N^T (R + s I) N as a factor stack, R + s I = Diag(2 wp + s).
    const Vector diag = (2.0 * wp).array() + step.s;
    QuadraticForm q(n.cols());
    q.add_block(diag.cwiseSqrt().asDiagonal() * n, 1.0);
    const Vector lin = -(n.transpose() * g);
    step.delta = min_quadratic_linear_under_constraints(
        q, lin, a, Vector(Vector::Zero(a.rows())));

    const double quad = q.quad(step.delta);
    const double np_pp = lp_norm_pow(n * step.delta, p);
    if (quad <= 0.0 || step.delta.cwiseAbs().maxCoeff() <= 1e-300) {
        step.delta.setZero();
        step.k_ratio = 1.0;
        step.alpha0 = 0.5;
        step.kappa = std::pow(2.0, 13) * p * p / step.alpha0;
        throw DegenerateStep("irls_residual: zero step");
    }
    step.k_ratio = np_pp / quad;
    step.alpha0 = std::min(0.5, 1.0 / (2.0 * std::pow(step.k_ratio, 1.0 / (p - 1.0))));
    step.kappa = std::pow(2.0, 13) * p * p / step.alpha0;
    return step;
}

// argmin_beta ||N(x - beta D)||_p^p by exponential bracketing from [0,1]
// followed by golden-section; the 1-D function is strictly convex.
inline double line_search(const Matrix& n, const Vector& x, const Vector& delta, double p) {
    const Vector nx = n * x;
    const Vector nd = n * delta;
    const auto h = [&](double beta) { return lp_norm_pow(nx - beta * nd, p); };

    const double cap = 4.0 * p;
    double hi = 1.0;
    while (hi < cap && h(2.0 * hi) < h(hi)) hi *= 2.0;
    hi = std::min(2.0 * hi, cap);

    double lo = 0.0;
    const double inv_phi = 0.6180339887498949;
    double b1 = hi - inv_phi * (hi - lo);
    double b2 = lo + inv_phi * (hi - lo);
    double h1 = h(b1), h2 = h(b2);
    while (hi - lo > 1e-12 * (1.0 + hi)) {
        if (h1 <= h2) {
            hi = b2;
            b2 = b1;
            h2 = h1;
            b1 = hi - inv_phi * (hi - lo);
            h1 = h(b1);
        } else {
            lo = b1;
            b1 = b2;
            h1 = h2;
            b2 = lo + inv_phi * (hi - lo);
            h2 = h(b2);
        }
    }
    return 0.5 * (lo + hi);
}

// Alg. 10: convergent IRLS for min ||Nx||_p^p over Ax = b.
inline std::pair<Vector, SolverReport> irls_solve(const Matrix& a, const Matrix& n,
                                                  const Vector& b, double p, double eps) {
    const auto t0 = std::chrono::steady_clock::now();
    Vector x = l2_minimizer(a, n, b);
    double f = lp_norm_pow(n * x, p);
    double nu = f;

    ProblemInstance inst;
    inst.A = a;
    inst.M = Matrix(0, a.cols());
    inst.N = n;
    inst.d_vec = Vector();
    inst.b = b;
    inst.p = p;

    SolverReport rep;
    rep.objective_trace.push_back(f);
    rep.nu_trace.push_back(nu);

    constexpr long kMaxIters = 200000;
    long iters = 0;
    while (nu > 0.5 * eps * f) {
        if (f == 0.0) break;
        if (++iters > kMaxIters) throw NoConvergence("irls_solve: iteration cap exceeded");
        IrlsStep step;
        bool degenerate = false;
        try {
            step = irls_residual(x, n, a, nu, p);
        } catch (const DegenerateStep&) {
            degenerate = true;
        }
        ++rep.linear_solves;
        if (degenerate) {
            nu /= 2.0;
            ++rep.nu_halvings;
            rep.nu_trace.push_back(nu);
            continue;
        }
        const double alpha = line_search(n, x, step.delta, p);
        const ResidualProblem rp = build_residual(inst, x);
        const double resv = eval_residual(rp, Vector(alpha * step.delta));
        x -= (alpha / p) * step.delta;
        f = lp_norm_pow(n * x, p);
        ++rep.accepted_steps;
        rep.objective_trace.push_back(f);
        rep.kappa_eff = step.kappa;
        rep.kappa_trace.push_back(step.kappa);
        if (resv < nu / (32.0 * p * step.kappa)) {
            nu /= 2.0;
            ++rep.nu_halvings;
            rep.nu_trace.push_back(nu);
        }
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(x), std::move(rep)};
}

// Classical fixed-point IRLS, kept as the divergence baseline.  Weights are
// floored at 1e-12 of their maximum; the objective trace is the output.
inline std::pair<Vector, std::vector<double>> classic_irls(const Matrix& a, const Matrix& n,
                                                           const Vector& b, double p,
                                                           long max_iters) {
    Vector x = l2_minimizer(a, n, b);
    std::vector<double> trace;
    trace.push_back(lp_norm_pow(n * x, p));
    for (long t = 0; t < max_iters; ++t) {
        const Vector nx = n * x;
        Vector w = abs_pow_weights(nx, p - 2.0);
        const double wmax = w.size() ? w.maxCoeff() : 0.0;
        if (wmax <= 0.0) break;  // Nx = 0 exactly; fixed point reached
        w = w.cwiseMax(1e-12 * wmax);
        // x^{t+1} = argmin_{Ax=b} sum_e w_e (Nx)_e^2
        x = constrained_least_squares(Matrix(w.cwiseSqrt().asDiagonal() * n),
                                      Vector(Vector::Zero(n.rows())), a, b);
        trace.push_back(lp_norm_pow(n * x, p));
    }
    return {std::move(x), std::move(trace)};
}

}  // namespace lpnorm
