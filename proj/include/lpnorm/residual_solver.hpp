#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lpnorm/mwu.hpp"
#include "lpnorm/refinement.hpp"

namespace lpnorm {

struct ZetaProbe {
    double zeta = 0.0;
    Vector delta;  // already scaled per Lemma binary
    bool ok = false;
    double kappa_eff = 0.0;
    double picked_objective = 0.0;  // selection score (lower is better)
};

// Lemma binary: if D^T R D <= a^2 zeta and ||N D||_p^p <= a^p zeta then
// D / (5 a^2) is a 100 a^2-approximate residual solution.
inline std::pair<Vector, double> scale_per_lemma_binary(const Vector& delta,
                                                        const ResidualProblem& rp, double zeta) {
    const double rq = rp.R.quad(delta);
    const double npp = rp.N.rows() ? lp_norm_pow(rp.N * delta, rp.p) : 0.0;
    const double a = std::max({std::sqrt(std::max(rq, 0.0) / zeta),
                               std::pow(std::max(npp, 0.0) / zeta, 1.0 / rp.p), 1.0});
    return {delta / (5.0 * a * a), 100.0 * a * a};
}

// Objective evaluator for probe selection, f(x - D/p); when absent the
// residual value itself breaks ties.
using ProgressEval = std::function<double(const Vector& delta)>;

namespace detail {

// g restricted to the null space of A; the probe constraint g^T D = zeta/2
// is infeasible iff this vanishes.
inline bool gradient_infeasible(const ResidualProblem& rp) {
    const double gn = rp.g.norm();
    if (gn == 0.0) return true;
    if (rp.A.rows() == 0) return false;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(
        Matrix(rp.A.transpose()));
    const Vector y = cod.solve(rp.g);
    return (rp.g - rp.A.transpose() * y).norm() <= 1e-10 * gn;
}

inline Matrix augment_constraints(const ResidualProblem& rp) {
    Matrix a_aug(rp.A.rows() + 1, rp.g.size());
    if (rp.A.rows()) a_aug.topRows(rp.A.rows()) = rp.A;
    a_aug.row(rp.A.rows()) = rp.g.transpose();
    return a_aug;
}

}  // namespace detail

struct ProbeSweep {
    ResidualSolution best;
    double best_score = 0.0;
    std::vector<ZetaProbe> probes;
};

// Alg. 3: probe zeta = nu, nu/2, ... down to nu/(32p); each probe runs the
// decision solver on [A; g^T] D = [0; zeta/2] and the Lemma-binary-scaled
// winner (argmin of the progress score, lowest zeta on ties) is returned.
inline ProbeSweep residual_solve(const ResidualProblem& rp, double nu, OracleBackend& backend,
                                 const ProgressEval& progress = nullptr) {
    if (!(nu > 0.0)) throw SolverError("residual_solve: nu must be positive");
    const double p = rp.p;
    ProbeSweep sweep;
    if (detail::gradient_infeasible(rp)) {
        sweep.best = {Vector::Zero(rp.g.size()), 1.0};
        return sweep;
    }

    if (p == 2.0) {
        // The p = 2 residual is a concave quadratic; one KKT solve maximizes
        // it exactly, so the probe loop degenerates.
        QuadraticForm q = rp.R;
        if (rp.N.rows()) q.add_block(rp.N, 1.0);
        Vector delta = min_quadratic_linear_under_constraints(
            q, Vector(-rp.g), rp.A, Vector(Vector::Zero(rp.A.rows())));
        sweep.best = {std::move(delta), 1.0};
        sweep.probes.push_back({nu, sweep.best.delta, true, 1.0, 0.0});
        return sweep;
    }

    const Matrix a_aug = detail::augment_constraints(rp);
    const Matrix r_half = rp.R.stacked_factor();
    bool have_best = false;
    for (double zeta = nu; zeta > nu / (32.0 * p); zeta /= 2.0) {
        ZetaProbe probe;
        probe.zeta = zeta;
        Vector c_aug = Vector::Zero(a_aug.rows());
        c_aug[a_aug.rows() - 1] = zeta / 2.0;
        try {
            auto [delta_raw, st] = mwu_solve(a_aug, r_half, rp.N, c_aug, zeta, p, backend);
            auto [delta, kappa] = scale_per_lemma_binary(delta_raw, rp, zeta);
            probe.ok = true;
            probe.kappa_eff = kappa;
            probe.picked_objective = progress ? progress(delta) : -eval_residual(rp, delta);
            probe.delta = std::move(delta);
        } catch (const WidthBudgetExceeded&) {
            probe.ok = false;
        } catch (const SingularSystem&) {
            probe.ok = false;  // numerically degenerate probe constraint
        }
        if (probe.ok && (!have_best || probe.picked_objective <= sweep.best_score)) {
            sweep.best = {probe.delta, probe.kappa_eff};
            sweep.best_score = probe.picked_objective;
            have_best = true;
        }
        sweep.probes.push_back(std::move(probe));
    }
    if (!have_best) throw AllProbesFailed("residual_solve: every zeta probe hit the width budget");
    return sweep;
}

// Even MWU exponent for the q-norm reduction: ceil(ln m) rounded up to an
// even integer, at least 4.
inline double logm_exponent(Eigen::Index m) {
    double q = std::ceil(std::log(std::max<double>(static_cast<double>(m), 2.0)));
    q = std::max(q, 4.0);
    if (static_cast<long>(q) % 2 != 0) q += 1.0;
    return q;
}

// Thm. p2q: the q-norm surrogate of the residual problem at threshold zeta;
// the coefficient (1/4) zeta^{1-q/p} m^{min{q/p-1,0}} is folded into N.
inline ResidualProblem p_to_q_residual(const ResidualProblem& rp, double q, double zeta) {
    const double p = rp.p;
    const double m = static_cast<double>(rp.N.rows());
    const double scale = std::pow(4.0, -1.0 / q) * std::pow(zeta, 1.0 / q - 1.0 / p) *
                         std::pow(m, std::min(1.0 / p - 1.0 / q, 0.0));
    ResidualProblem out;
    out.g = rp.g;
    out.R = rp.R;
    out.A = rp.A;
    out.N = scale * rp.N;
    out.p = q;
    return out;
}

// Back-scaling of a beta-approximate q-norm residual solution into a
// p-norm one (Thm. p2q).
inline double p_to_q_back_scale(double p, double q, double m, double beta) {
    return 1.0 / (256.0 * beta) * std::pow(m, -(p / (p - 1.0)) * std::abs(1.0 / p - 1.0 / q));
}

// Alg. 7: residual solver through the log m-norm, for p >= ln m.  Scales the
// q-norm probe winner by m^{-1/(p-1)}.
inline ProbeSweep logm_residual_solve(const ResidualProblem& rp, double nu, OracleBackend& backend,
                                      const ProgressEval& progress = nullptr) {
    if (!(nu > 0.0)) throw SolverError("logm_residual_solve: nu must be positive");
    const double p = rp.p;
    const double m = static_cast<double>(rp.N.rows());
    const double q = logm_exponent(rp.N.rows());
    const double alpha_back = std::pow(m, -1.0 / (p - 1.0));

    ProbeSweep sweep;
    if (detail::gradient_infeasible(rp)) {
        sweep.best = {Vector::Zero(rp.g.size()), 1.0};
        return sweep;
    }
    const Matrix a_aug = detail::augment_constraints(rp);
    const Matrix r_half = rp.R.stacked_factor();
    bool have_best = false;
    for (double zeta = nu; zeta > nu / (32.0 * p); zeta /= 2.0) {
        ZetaProbe probe;
        probe.zeta = zeta;
        Vector c_aug = Vector::Zero(a_aug.rows());
        c_aug[a_aug.rows() - 1] = zeta / 2.0;
        const ResidualProblem rp_q = p_to_q_residual(rp, q, zeta);
        try {
            auto [delta_raw, st] = mwu_solve(a_aug, r_half, rp_q.N, c_aug, zeta, q, backend);
            auto [delta_q, kappa_q] = scale_per_lemma_binary(delta_raw, rp_q, zeta);
            probe.ok = true;
            probe.kappa_eff = kappa_q * std::pow(m, 1.0 / (p - 1.0));
            probe.delta = alpha_back * delta_q;
            probe.picked_objective =
                progress ? progress(probe.delta) : -eval_residual(rp, probe.delta);
        } catch (const WidthBudgetExceeded&) {
            probe.ok = false;
        } catch (const SingularSystem&) {
            probe.ok = false;  // numerically degenerate probe constraint
        }
        if (probe.ok && (!have_best || probe.picked_objective <= sweep.best_score)) {
            sweep.best = {probe.delta, probe.kappa_eff};
            sweep.best_score = probe.picked_objective;
            have_best = true;
        }
        sweep.probes.push_back(std::move(probe));
    }
    if (!have_best)
        throw AllProbesFailed("logm_residual_solve: every zeta probe hit the width budget");
    return sweep;
}

// Alg. 6: iterative refinement with the residual solver picked by the
// dispatch rule p >= ln m.
inline std::pair<Vector, SolverReport> complete_solve(const ProblemInstance& inst,
                                                      const Vector& x0, double eps,
                                                      OracleBackend& backend) {
    const bool use_logm =
        inst.p > 2.0 && inst.p >= std::log(std::max<double>(static_cast<double>(inst.m()), 2.0));
    ResidualSolverFn solver = [&](const ResidualProblem& rp, double nu,
                                  const Vector& x) -> ResidualSolution {
        ProgressEval progress = [&](const Vector& delta) {
            return objective(inst, Vector(x - delta / inst.p));
        };
        ProbeSweep sweep = use_logm ? logm_residual_solve(rp, nu, backend, progress)
                                    : residual_solve(rp, nu, backend, progress);
        return sweep.best;
    };
    auto [x, rep] = iterative_refinement(inst, x0, solver, 0.0, eps);
    rep.linear_solves = backend.linear_solves();
    rep.woodbury_updates = backend.woodbury_updates();
    rep.full_refreshes = backend.full_refreshes();
    return {std::move(x), std::move(rep)};
}

}  // namespace lpnorm
