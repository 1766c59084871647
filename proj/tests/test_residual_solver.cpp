#include <doctest.h>

#include "lpnorm/residual_solver.hpp"
#include "lpnorm/rng.hpp"
#include "reference.hpp"

using namespace lpnorm;

namespace {

ProblemInstance random_instance(std::uint64_t seed, double p, Eigen::Index n = 7,
                                Eigen::Index m2 = 12) {
    SplitMix64 rng(seed);
    ProblemInstance inst;
    inst.A = rng.matrix(2, n);
    inst.N = rng.matrix(m2, n);
    inst.M = Matrix(0, n);
    inst.d_vec = Vector();
    inst.b = inst.A * rng.vector(n);
    inst.p = p;
    return inst;
}

Vector min_norm_feasible(const ProblemInstance& inst) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(inst.A);
    return cod.solve(inst.b);
}

// Exact residual optimum via the independent Newton solver.
double residual_opt(const ResidualProblem& rp, Vector* delta_out = nullptr) {
    refsolve::RefProblem neg;
    neg.h = -rp.g;
    neg.Q = rp.R.assemble();
    neg.N = rp.N;
    neg.p = rp.p;
    neg.A = rp.A;
    neg.b = Vector::Zero(rp.A.rows());
    const auto ref = refsolve::projected_newton(neg, 1e-12, 1000);
    if (delta_out) *delta_out = ref.x;
    return -ref.objective;
}

}  // namespace

TEST_CASE("scale_per_lemma_binary: both binding branches and the trivial one") {
    const ProblemInstance inst = random_instance(81, 4.0);
    const Vector x = min_norm_feasible(inst);
    const ResidualProblem rp = build_residual(inst, x);
    SplitMix64 rng(82);
    const Vector d = rng.vector(inst.n());
    const double rq = rp.R.quad(d);
    const double npp = lp_norm_pow(Vector(rp.N * d), 4.0);

    // zeta large: a = 1, delta untouched up to the 1/5 factor.
    {
        const double zeta = 10.0 * std::max(rq, npp);
        auto [scaled, kappa] = scale_per_lemma_binary(d, rp, zeta);
        CHECK(kappa == doctest::Approx(100.0));
        CHECK((scaled - d / 5.0).cwiseAbs().maxCoeff() < 1e-12);
    }
    // zeta small: a driven by the quadratic term.
    {
        const double zeta = rq / 9.0;  // sqrt branch gives a = 3 if it dominates
        auto [scaled, kappa] = scale_per_lemma_binary(d, rp, zeta);
        const double a = std::max({std::sqrt(rq / zeta), std::pow(npp / zeta, 0.25), 1.0});
        CHECK(kappa == doctest::Approx(100.0 * a * a));
        CHECK((scaled - d / (5.0 * a * a)).cwiseAbs().maxCoeff() < 1e-12);
        // Scaled point passes the lemma's feasibility requirements.
        CHECK(rp.R.quad(scaled) <= zeta * (1.0 + 1e-9));
        CHECK(lp_norm_pow(Vector(rp.N * scaled), 4.0) <= zeta * (1.0 + 1e-9));
    }
}

TEST_CASE("logm_exponent: even ceiling of ln m, floored at 4") {
    CHECK(logm_exponent(2) == 4.0);
    CHECK(logm_exponent(16) == 4.0);    // ln 16 = 2.77 -> 3 -> 4
    CHECK(logm_exponent(64) == 6.0);    // ln 64 = 4.16 -> 5 -> 6
    CHECK(logm_exponent(1000) == 8.0);  // ln 1000 = 6.91 -> 7 -> 8
    CHECK(logm_exponent(8104) == 10.0); // ln 8104 = 9.0002 -> 10
}

TEST_CASE("p_to_q_back_scale: frozen value") {
    CHECK(p_to_q_back_scale(4.0, 2.0, 16.0, 1.0) ==
          doctest::Approx(0.0015501963398126948).epsilon(1e-13));
}

TEST_CASE("p_to_q_residual folds the documented coefficient into N") {
    const ProblemInstance inst = random_instance(83, 12.0, 6, 16);
    const Vector x = min_norm_feasible(inst);
    const ResidualProblem rp = build_residual(inst, x);
    const double zeta = 0.37;
    const double q = 4.0;
    const ResidualProblem rq = p_to_q_residual(rp, q, zeta);
    const double scale = std::pow(4.0, -0.25) * std::pow(zeta, 0.25 - 1.0 / 12.0) *
                         std::pow(16.0, std::min(1.0 / 12.0 - 0.25, 0.0));
    CHECK((rq.N - scale * rp.N).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(rq.p == q);
}

TEST_CASE("residual_solve: p = 2 is one exact concave-quadratic maximization") {
    const ProblemInstance inst = random_instance(84, 2.0);
    SplitMix64 rng(85);
    // Move off the optimum so g != 0.
    Eigen::FullPivLU<Matrix> lu(inst.A);
    const Matrix kern = lu.kernel();
    const Vector x = min_norm_feasible(inst) + kern * rng.vector(kern.cols());
    const ResidualProblem rp = build_residual(inst, x);
    DirectBackend be;
    const ProbeSweep sweep = residual_solve(rp, 1.0, be);
    CHECK(sweep.best.kappa_eff == 1.0);
    CHECK(sweep.probes.size() == 1);
    const double got = eval_residual(rp, sweep.best.delta);
    const double opt = residual_opt(rp);
    CHECK(got == doctest::Approx(opt).epsilon(1e-8));
}

TEST_CASE("residual_solve returns zero when g lies in the row span of A") {
    SplitMix64 rng(86);
    ResidualProblem rp;
    rp.A = rng.matrix(2, 6);
    rp.N = rng.matrix(9, 6);
    rp.p = 4.0;
    rp.R = QuadraticForm(6);
    rp.R.add_block(rp.N, 2.0);
    rp.g = rp.A.transpose() * rng.vector(2);  // stationary: no feasible ascent
    DirectBackend be;
    const ProbeSweep sweep = residual_solve(rp, 1.0, be);
    CHECK(sweep.best.delta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sweep.best.kappa_eff == 1.0);
    rp.g.setZero();
    const ProbeSweep zero = residual_solve(rp, 1.0, be);
    CHECK(zero.best.delta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("residual_solve: kappa contract against the exact residual optimum") {
    for (std::uint64_t seed : {87ULL, 88ULL}) {
        const ProblemInstance inst = random_instance(seed, 4.0);
        SplitMix64 rng(seed + 1000);
        Eigen::FullPivLU<Matrix> lu(inst.A);
        const Matrix kern = lu.kernel();
        const Vector x = min_norm_feasible(inst) + 0.5 * (kern * rng.vector(kern.cols()));
        const ResidualProblem rp = build_residual(inst, x);
        const double opt = residual_opt(rp);
        REQUIRE(opt > 0.0);
        DirectBackend be;
        // nu within [opt, 16 opt] as the refinement loop maintains.
        const ProbeSweep sweep = residual_solve(rp, 4.0 * opt, be);
        const double got = eval_residual(rp, sweep.best.delta);
        CHECK(got >= opt / sweep.best.kappa_eff * (1.0 - 1e-9));
        CHECK((rp.A * sweep.best.delta).cwiseAbs().maxCoeff() < 1e-7);
    }
}

TEST_CASE("logm_residual_solve: scaled q-solution clears the p2q floor") {
    const double p = 12.0;
    const ProblemInstance inst = random_instance(89, p, 6, 16);
    SplitMix64 rng(90);
    Eigen::FullPivLU<Matrix> lu(inst.A);
    const Matrix kern = lu.kernel();
    const Vector x = min_norm_feasible(inst) + 0.5 * (kern * rng.vector(kern.cols()));
    const ResidualProblem rp = build_residual(inst, x);
    Vector dstar;
    const double opt = residual_opt(rp, &dstar);
    REQUIRE(opt > 0.0);
    DirectBackend be;
    const ProbeSweep sweep = logm_residual_solve(rp, opt, be);
    const double got = eval_residual(rp, sweep.best.delta);
    const double m = static_cast<double>(inst.m2());
    CHECK(got >= opt * std::pow(m, -1.0 / (p - 1.0)) / 16384.0);
    CHECK(got >= opt / sweep.best.kappa_eff * (1.0 - 1e-9));
}

TEST_CASE("complete_solve dispatches large p through the q-norm reduction") {
    const double p = 16.0;  // >= ln m for any desk-size m
    const ProblemInstance inst = random_instance(91, p, 6, 12);
    DirectBackend be;
    auto [x, rep] = complete_solve(inst, min_norm_feasible(inst), 1e-8, be);
    refsolve::RefProblem rpr;
    rpr.N = inst.N;
    rpr.p = p;
    rpr.A = inst.A;
    rpr.b = inst.b;
    const auto ref = refsolve::projected_newton(rpr);
    CHECK(objective(inst, x) <= ref.objective + 1e-6 * (1.0 + ref.objective) + 1e-8);
    CHECK(rep.linear_solves > 0);
}
