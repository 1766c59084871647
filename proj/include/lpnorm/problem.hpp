#pragma once

#include <cmath>
#include <vector>

#include "lpnorm/linalg.hpp"

namespace lpnorm {

// sum_e |v_e|^p
inline double lp_norm_pow(const Vector& v, double p) {
    double s = 0.0;
    for (Eigen::Index e = 0; e < v.size(); ++e) s += std::pow(std::abs(v[e]), p);
    return s;
}

// min d^T x + ||Mx||_2^2 + ||Nx||_p^p  subject to  Ax = b.
// The pure case has d = 0 and M with zero rows.
struct ProblemInstance {
    Matrix A;      // d x n
    Matrix M;      // m1 x n
    Matrix N;      // m2 x n
    Vector d_vec;  // n
    Vector b;      // d
    double p = 2.0;

    Eigen::Index n() const { return A.cols(); }
    Eigen::Index m1() const { return M.rows(); }
    Eigen::Index m2() const { return N.rows(); }
    Eigen::Index m() const { return std::max(M.rows(), N.rows()); }

    bool pure() const {
        return (d_vec.size() == 0 || d_vec.isZero(0.0)) && (M.rows() == 0 || M.isZero(0.0));
    }

    void validate() const {
        const Eigen::Index nn = n();
        if (M.cols() != 0 && M.cols() != nn) throw DimensionMismatch("ProblemInstance: M cols");
        if (N.cols() != nn) throw DimensionMismatch("ProblemInstance: N cols");
        if (d_vec.size() != 0 && d_vec.size() != nn)
            throw DimensionMismatch("ProblemInstance: d size");
        if (b.size() != A.rows()) throw DimensionMismatch("ProblemInstance: b size");
        if (!(p >= 2.0)) throw UnsupportedExponent("ProblemInstance: p < 2");
        if (A.rows() > 0) {
            // b must lie in the range of A
            Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
            const Vector x = cod.solve(b);
            const double tol = 1e-7 * (1.0 + (b.size() ? b.cwiseAbs().maxCoeff() : 0.0));
            if ((A * x - b).cwiseAbs().maxCoeff() > tol)
                throw InfeasibleConstraint("ProblemInstance: b not in range of A");
        }
    }
};

inline double objective(const ProblemInstance& inst, const Vector& x) {
    if (x.size() != inst.n()) throw DimensionMismatch("objective: x size");
    double f = 0.0;
    if (inst.d_vec.size()) f += inst.d_vec.dot(x);
    if (inst.M.rows()) f += (inst.M * x).squaredNorm();
    if (inst.N.rows()) f += lp_norm_pow(inst.N * x, inst.p);
    return f;
}

// Local model at x: res_p(D) = g^T D - D^T R D - ||N D||_p^p over A D = 0,
// with g = (1/p) d + (2/p) M^T M x + N^T Diag(|Nx|^{p-2}) N x and
// R = (2/p^2) M^T M + 2 N^T Diag(|Nx|^{p-2}) N kept as a factor stack.
struct ResidualProblem {
    Vector g;
    QuadraticForm R;
    Matrix N;
    Matrix A;
    double p = 2.0;
};

// |t|^{p-2} with the zero-weight convention at t = 0 (also for p = 2, where
// nonzero entries carry weight 1).
inline Vector abs_pow_weights(const Vector& v, double expo) {
    Vector w(v.size());
    for (Eigen::Index e = 0; e < v.size(); ++e) {
        const double a = std::abs(v[e]);
        w[e] = (a == 0.0) ? 0.0 : std::pow(a, expo);
    }
    return w;
}

inline ResidualProblem build_residual(const ProblemInstance& inst, const Vector& x) {
    if (x.size() != inst.n()) throw DimensionMismatch("build_residual: x size");
    if (inst.A.rows()) {
        const double tol = 1e-7 * (1.0 + (inst.b.size() ? inst.b.cwiseAbs().maxCoeff() : 0.0));
        if ((inst.A * x - inst.b).cwiseAbs().maxCoeff() > tol)
            throw InfeasiblePoint("build_residual: Ax != b");
    }
    const double p = inst.p;
    ResidualProblem rp;
    rp.N = inst.N;
    rp.A = inst.A;
    rp.p = p;

    Vector g = Vector::Zero(inst.n());
    if (inst.d_vec.size()) g += (1.0 / p) * inst.d_vec;
    if (inst.M.rows()) g.noalias() += (2.0 / p) * (inst.M.transpose() * (inst.M * x));

    rp.R = QuadraticForm(inst.n());
    if (inst.M.rows()) rp.R.add_block(inst.M, 2.0 / (p * p));
    if (inst.N.rows()) {
        const Vector nx = inst.N * x;
        const Vector w = abs_pow_weights(nx, p - 2.0);
        g.noalias() += inst.N.transpose() * (w.cwiseProduct(nx));
        rp.R.add_block(w.cwiseSqrt().asDiagonal() * inst.N, 2.0);
    }
    rp.g = std::move(g);
    return rp;
}

inline double eval_residual(const ResidualProblem& rp, const Vector& delta) {
    if (delta.size() != rp.g.size()) throw DimensionMismatch("eval_residual: delta size");
    double v = rp.g.dot(delta) - rp.R.quad(delta);
    if (rp.N.rows()) v -= lp_norm_pow(rp.N * delta, rp.p);
    return v;
}

// Smoothed scalar l_p proxy for p in (1,2): quadratic near zero, pure power
// in the tail, continuous at |x| = t.
inline double gamma_p(double t, double x, double p) {
    const double ax = std::abs(x);
    if (ax == 0.0) return 0.0;
    if (ax <= t) return 0.5 * p * std::pow(t, p - 2.0) * x * x;
    return std::pow(ax, p) - (1.0 - 0.5 * p) * std::pow(t, p);
}

struct SolverReport {
    std::vector<double> objective_trace;
    std::vector<double> nu_trace;
    long linear_solves = 0;
    long primal_steps = 0;
    long width_steps = 0;
    double wall_seconds = 0.0;
    long accepted_steps = 0;
    long nu_halvings = 0;
    double kappa_eff = 0.0;  // last measured residual-solver quality
    std::vector<double> kappa_trace;  // one entry per accepted step
    long woodbury_updates = 0;
    long full_refreshes = 0;
};

}  // namespace lpnorm
