#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "lpnorm/errors.hpp"

namespace lpnorm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sum of scaled Gram blocks, Q = sum_i c_i F_i^T F_i.  PSD by construction;
// no symmetric square root is ever formed.
class QuadraticForm {
  public:
    QuadraticForm() = default;

    explicit QuadraticForm(Eigen::Index dim) : dim_(dim) {}

    void add_block(Matrix factor, double coeff) {
        if (coeff < 0.0) throw SolverError("QuadraticForm: negative block coefficient");
        if (dim_ == 0) dim_ = factor.cols();
        if (factor.cols() != dim_)
            throw DimensionMismatch("QuadraticForm: block column count mismatch");
        blocks_.emplace_back(std::move(factor), coeff);
    }

    Eigen::Index dim() const { return dim_; }

    const std::vector<std::pair<Matrix, double>>& blocks() const { return blocks_; }

    Matrix assemble() const {
        Matrix q = Matrix::Zero(dim_, dim_);
        for (const auto& [f, c] : blocks_)
            if (c > 0.0) q.selfadjointView<Eigen::Lower>().rankUpdate(f.transpose(), c);
        return q.selfadjointView<Eigen::Lower>();
    }

    // Vertical stack of sqrt(c_i) F_i, so Q = S^T S for the returned S.
    Matrix stacked_factor() const {
        Eigen::Index rows = 0;
        for (const auto& [f, c] : blocks_)
            if (c > 0.0) rows += f.rows();
        Matrix s(rows, dim_);
        Eigen::Index at = 0;
        for (const auto& [f, c] : blocks_) {
            if (c <= 0.0) continue;
            s.middleRows(at, f.rows()) = std::sqrt(c) * f;
            at += f.rows();
        }
        return s;
    }

    Vector apply(const Vector& x) const {
        if (x.size() != dim_) throw DimensionMismatch("QuadraticForm::apply");
        Vector y = Vector::Zero(dim_);
        for (const auto& [f, c] : blocks_)
            if (c > 0.0) y.noalias() += c * (f.transpose() * (f * x));
        return y;
    }

    double quad(const Vector& x) const {
        double v = 0.0;
        for (const auto& [f, c] : blocks_)
            if (c > 0.0) v += c * (f * x).squaredNorm();
        return v;
    }

  private:
    Eigen::Index dim_ = 0;
    std::vector<std::pair<Matrix, double>> blocks_;
};

namespace detail {

constexpr double kCondLimit = 1e14;

inline double tikhonov(const Matrix& q) {
    const double tr = q.trace();
    return 1e-12 * (tr > 0.0 ? tr : 1.0) / static_cast<double>(q.rows());
}

// Cheap conditioning proxy from the LDLT pivot magnitudes.
inline void check_ldlt(const Eigen::LDLT<Matrix>& ldlt, const char* what) {
    const Vector d = ldlt.vectorD().cwiseAbs();
    const double dmax = d.maxCoeff();
    const double dmin = d.minCoeff();
    if (!(dmax > 0.0) || !std::isfinite(dmax) || dmin <= dmax / kCondLimit)
        throw SingularSystem(what);
}

// Least-squares feasibility test for Cx = d.
inline void require_feasible(const Matrix& c_mat, const Vector& d, const char* what) {
    if (c_mat.rows() == 0) return;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(c_mat);
    const Vector x = cod.solve(d);
    const double tol = 1e-8 * (1.0 + d.cwiseAbs().maxCoeff());
    if ((c_mat * x - d).cwiseAbs().maxCoeff() > tol) throw InfeasibleConstraint(what);
}

}  // namespace detail

// min ||Ax - b||_2 subject to Cx = d, via the normal-equation closed form
// with a Lagrangian capacitance solve.  C may contain duplicated rows as
// long as d is consistent.
inline Vector constrained_least_squares(const Matrix& a, const Vector& b, const Matrix& c_mat,
                                        const Vector& d) {
    if (a.rows() != b.size() || (c_mat.rows() != d.size()) || (c_mat.rows() > 0 && c_mat.cols() != a.cols()))
        throw DimensionMismatch("constrained_least_squares");

    Matrix gram = a.transpose() * a;
    gram.diagonal().array() += detail::tikhonov(gram);
    Eigen::LDLT<Matrix> ldlt(gram);
    detail::check_ldlt(ldlt, "constrained_least_squares: normal matrix");

    const Vector atb = a.transpose() * b;
    Vector x = ldlt.solve(atb);
    if (c_mat.rows() == 0) return x;

    detail::require_feasible(c_mat, d, "constrained_least_squares: Cx=d infeasible");

    const Matrix g = ldlt.solve(c_mat.transpose());
    const Matrix cap = c_mat * g;
    const Vector rhs = d - c_mat * x;
    // COD handles duplicate constraint rows (consistent d) gracefully.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cap);
    const Vector mult = cod.solve(rhs);
    x += g * mult;

    const double ctol = 1e-9 * (1.0 + (d.size() ? d.cwiseAbs().maxCoeff() : 0.0));
    if ((c_mat * x - d).cwiseAbs().maxCoeff() > ctol)
        throw SingularSystem("constrained_least_squares: constraint residual");
    return x;
}

struct ConstrainedQuadSolution {
    Vector delta;
    double energy = 0.0;  // delta^T Q delta at the minimizer
};

// min x^T Q x subject to Ax = c.  Also reports the optimal value, which is
// the energy c^T (A Q^{-1} A^T)^{-1} c.
inline ConstrainedQuadSolution min_quadratic_with_energy(const QuadraticForm& q_form,
                                                         const Matrix& a, const Vector& c) {
    if (a.cols() != q_form.dim() || a.rows() != c.size())
        throw DimensionMismatch("min_quadratic_under_constraints");

    Matrix q = q_form.assemble();
    q.diagonal().array() += detail::tikhonov(q);
    Eigen::LDLT<Matrix> ldlt(q);
    detail::check_ldlt(ldlt, "min_quadratic: Q factorization");

    const Matrix g = ldlt.solve(a.transpose());
    const Matrix cap = a * g;
    Eigen::LDLT<Matrix> cap_ldlt(cap);
    Vector y = cap_ldlt.solve(c);
    Vector delta = g * y;

    // Scale-aware feasibility: near-dependent constraint rows make the
    // capacitance system ill-conditioned, and the achievable residual is
    // then proportional to the row-times-solution magnitude, not to |c|.
    const auto feas_tol = [&](const Vector& dd) {
        const double row_scale =
            a.rows() ? a.cwiseAbs().rowwise().sum().maxCoeff() * dd.cwiseAbs().maxCoeff() : 0.0;
        return 1e-9 * (1.0 + (c.size() ? c.cwiseAbs().maxCoeff() : 0.0) + row_scale);
    };
    if (c.size() && (a * delta - c).cwiseAbs().maxCoeff() > feas_tol(delta)) {
        // Rank-deficient capacitance; retry with a rank-revealing solve.
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cap);
        y = cod.solve(c);
        delta = g * y;
        if ((a * delta - c).cwiseAbs().maxCoeff() > feas_tol(delta)) {
            // Q singular on a direction the constraints pin down: the
            // capacitance route breaks even though the minimizer exists.
            // The indefinite KKT saddle system stays well-posed there.
            const Eigen::Index n = q.rows();
            const Eigen::Index k = a.rows();
            Matrix kkt = Matrix::Zero(n + k, n + k);
            kkt.topLeftCorner(n, n) = 2.0 * q;
            kkt.topRightCorner(n, k) = a.transpose();
            kkt.bottomLeftCorner(k, n) = a;
            Vector rhs = Vector::Zero(n + k);
            rhs.tail(k) = c;
            Eigen::FullPivLU<Matrix> lu(kkt);
            if (lu.isInvertible()) {
                delta = lu.solve(rhs).head(n);
            } else {
                Eigen::CompleteOrthogonalDecomposition<Matrix> kcod(kkt);
                delta = kcod.solve(rhs).head(n);
            }
            if ((a * delta - c).cwiseAbs().maxCoeff() > feas_tol(delta)) {
                detail::require_feasible(a, c, "min_quadratic: A delta = c infeasible");
                throw SingularSystem("min_quadratic: capacitance system");
            }
            const double en = q_form.quad(delta);
            return {std::move(delta), en};
        }
    }
    return {std::move(delta), c.dot(y)};
}

inline Vector min_quadratic_under_constraints(const QuadraticForm& q, const Matrix& a,
                                              const Vector& c) {
    return min_quadratic_with_energy(q, a, c).delta;
}

// Psi(r)-style energy: value of min x^T Q x over Ax = c.
inline double energy(const QuadraticForm& q, const Matrix& a, const Vector& c) {
    return min_quadratic_with_energy(q, a, c).energy;
}

// min x^T Q x + d^T x  subject to  A x = b, via the (indefinite) KKT system
// [2Q A^T; A 0] [x; y] = [-d; b].
inline Vector min_quadratic_linear_under_constraints(const QuadraticForm& qf, const Vector& d,
                                                     const Matrix& a, const Vector& b) {
    const Eigen::Index n = qf.dim();
    const Eigen::Index k = a.rows();
    if (d.size() != n || (k > 0 && a.cols() != n) || b.size() != k)
        throw DimensionMismatch("min_quadratic_linear_under_constraints");
    Matrix q = qf.assemble();
    q.diagonal().array() += detail::tikhonov(q);
    Matrix kkt = Matrix::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = 2.0 * q;
    if (k > 0) {
        kkt.topRightCorner(n, k) = a.transpose();
        kkt.bottomLeftCorner(k, n) = a;
    }
    Vector rhs(n + k);
    rhs.head(n) = -d;
    rhs.tail(k) = b;
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible()) {
        // Rank-deficient KKT (duplicated constraints, etc.); fall back to a
        // minimum-norm solve and verify the residual.
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(kkt);
        const Vector z = cod.solve(rhs);
        const double tol = 1e-7 * (1.0 + rhs.cwiseAbs().maxCoeff());
        if ((kkt * z - rhs).cwiseAbs().maxCoeff() > tol)
            throw SingularSystem("min_quadratic_linear_under_constraints: KKT system");
        return z.head(n);
    }
    return lu.solve(rhs).head(n);
}

using InverseApplier = std::function<Vector(const Vector&)>;

// Preconditioned Richardson iteration x <- x - Zhat^{-1}(Qx - b).
// The caller guarantees Zhat is spectrally within a constant factor of Q;
// exceeding the iteration budget signals a stale preconditioner.
inline Vector preconditioned_solve(const InverseApplier& apply_zhat_inv, const QuadraticForm& q,
                                   const Vector& b, double tol, int* iters_out = nullptr) {
    const double bnorm = b.norm();
    Vector x = Vector::Zero(q.dim());
    if (bnorm == 0.0) {
        if (iters_out) *iters_out = 0;
        return x;
    }
    const int budget = static_cast<int>(100.0 * std::log(1.0 / tol)) + 10;
    for (int it = 0; it < budget; ++it) {
        const Vector resid = q.apply(x) - b;
        if (resid.norm() <= tol * bnorm) {
            if (iters_out) *iters_out = it;
            return x;
        }
        x -= apply_zhat_inv(resid);
    }
    if ((q.apply(x) - b).norm() <= tol * bnorm) {
        if (iters_out) *iters_out = budget;
        return x;
    }
    throw NoConvergence("preconditioned_solve: iteration budget exhausted");
}

}  // namespace lpnorm
