#pragma once

#include <chrono>
#include <functional>
#include <optional>

#include "lpnorm/problem.hpp"

namespace lpnorm {

struct ResidualSolution {
    Vector delta;
    double kappa_eff = 1.0;  // measured quality of the returned step
};

// Residual solver plugged into the refinement driver: gets the residual
// problem at the current iterate x and the current gap bound nu.
using ResidualSolverFn =
    std::function<ResidualSolution(const ResidualProblem&, double nu, const Vector& x)>;

// f_lb from dropping the ||Nx||_p^p term (which is >= 0) and minimizing the
// remaining constrained quadratic.
inline double objective_lower_bound(const ProblemInstance& inst) {
    if (inst.pure()) return 0.0;
    QuadraticForm q(inst.n());
    if (inst.M.rows()) q.add_block(inst.M, 1.0);
    const Vector d =
        inst.d_vec.size() ? inst.d_vec : Vector(Vector::Zero(inst.n()));
    const Vector x = min_quadratic_linear_under_constraints(q, d, inst.A, inst.b);
    double f = d.dot(x);
    if (inst.M.rows()) f += (inst.M * x).squaredNorm();
    return f;
}

inline double default_nu0(const ProblemInstance& inst, const Vector& x0) {
    const double f0 = objective(inst, x0);
    if (inst.pure()) return f0;  // f(x*) >= 0
    return f0 - objective_lower_bound(inst);
}

// Alg. 1: turn a kappa-approximate residual solver into a high-accuracy
// solver.  kappa_override <= 0 means "trust the solver's measured quality";
// nu0 <= 0 requests the default gap bound.
inline std::pair<Vector, SolverReport> iterative_refinement(const ProblemInstance& inst,
                                                            const Vector& x0,
                                                            const ResidualSolverFn& solver,
                                                            double kappa_override, double eps,
                                                            double nu0 = 0.0) {
    const auto t0 = std::chrono::steady_clock::now();
    inst.validate();
    const double p = inst.p;
    Vector x = x0;
    double f = objective(inst, x);
    double nu = nu0 > 0.0 ? nu0 : default_nu0(inst, x0);

    SolverReport rep;
    rep.objective_trace.push_back(f);
    rep.nu_trace.push_back(nu);

    constexpr long kMaxIters = 500000;
    long iters = 0;
    // Accepted steps satisfy A delta = 0 only to solver precision; over many
    // small steps the drift accumulates, so snap back onto Ax = b whenever it
    // grows past a tight floor.
    std::optional<Eigen::CompleteOrthogonalDecomposition<Matrix>> a_cod;
    const double b_scale = 1.0 + (inst.b.size() ? inst.b.cwiseAbs().maxCoeff() : 0.0);
    const auto reproject = [&](Vector& xx) {
        if (inst.A.rows() == 0) return;
        const Vector gap_vec = inst.b - inst.A * xx;
        if (gap_vec.cwiseAbs().maxCoeff() <= 1e-13 * b_scale) return;
        if (!a_cod) a_cod.emplace(inst.A);
        xx += a_cod->solve(gap_vec);
    };
    while (nu > eps) {
        if (++iters > kMaxIters)
            throw NoConvergence("iterative_refinement: iteration cap exceeded");
        const ResidualProblem rp = build_residual(inst, x);
        ResidualSolution sol;
        bool probe_failed = false;
        try {
            sol = solver(rp, nu, x);
        } catch (const AllProbesFailed&) {
            probe_failed = true;  // nu is far off; halving will recalibrate
        }
        const double kappa =
            kappa_override > 0.0 ? kappa_override : std::max(sol.kappa_eff, 1.0);
        const double resv = probe_failed ? 0.0 : eval_residual(rp, sol.delta);
        if (!probe_failed && resv >= nu / (32.0 * p * kappa)) {
            Vector x_new = x - sol.delta / p;
            reproject(x_new);
            const double f_new = objective(inst, x_new);
            if (f_new > f + 1e-12 * (1.0 + std::abs(f)))
                throw SolverContractViolation("iterative_refinement: accepted step increased f");
            x = x_new;
            f = f_new;
            ++rep.accepted_steps;
            rep.objective_trace.push_back(f);
            rep.kappa_eff = kappa;
            rep.kappa_trace.push_back(kappa);
        } else {
            nu /= 2.0;
            ++rep.nu_halvings;
            rep.nu_trace.push_back(nu);
        }
    }
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(x), std::move(rep)};
}

}  // namespace lpnorm
