#include <doctest.h>

#include "lpnorm/backend.hpp"
#include "lpnorm/rng.hpp"

using namespace lpnorm;

TEST_CASE("QuadraticForm assemble, stacked factor, apply, quad agree") {
    SplitMix64 rng(7);
    QuadraticForm q(5);
    q.add_block(rng.matrix(3, 5), 2.0);
    q.add_block(rng.matrix(4, 5), 0.5);
    q.add_block(rng.matrix(2, 5), 0.0);  // dropped
    const Matrix full = q.assemble();
    const Matrix s = q.stacked_factor();
    CHECK(s.rows() == 7);
    CHECK((s.transpose() * s - full).cwiseAbs().maxCoeff() < 1e-12);
    for (int t = 0; t < 5; ++t) {
        const Vector x = rng.vector(5);
        CHECK((q.apply(x) - full * x).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(q.quad(x) == doctest::Approx(x.dot(full * x)).epsilon(1e-12));
    }
}

TEST_CASE("QuadraticForm rejects negative coefficients and mismatched blocks") {
    QuadraticForm q(3);
    CHECK_THROWS_AS(q.add_block(Matrix::Ones(2, 3), -1.0), SolverError);
    CHECK_THROWS_AS(q.add_block(Matrix::Ones(2, 4), 1.0), DimensionMismatch);
}

TEST_CASE("constrained_least_squares matches the unconstrained solve without constraints") {
    SplitMix64 rng(11);
    const Matrix a = rng.matrix(9, 4);
    const Vector b = rng.vector(9);
    const Vector x = constrained_least_squares(a, b, Matrix(0, 4), Vector());
    // Normal equations hold.
    CHECK((a.transpose() * (a * x - b)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constrained_least_squares: KKT stationarity under equality constraints") {
    SplitMix64 rng(12);
    const Matrix a = rng.matrix(10, 5);
    const Vector b = rng.vector(10);
    const Matrix c_mat = rng.matrix(2, 5);
    const Vector d = c_mat * rng.vector(5);
    const Vector x = constrained_least_squares(a, b, c_mat, d);
    CHECK((c_mat * x - d).cwiseAbs().maxCoeff() < 1e-9);
    // Gradient of ||ax-b||^2 lies in the row span of the constraints.
    const Vector g = a.transpose() * (a * x - b);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Matrix(c_mat.transpose()));
    const Vector lam = cod.solve(g);
    CHECK((g - c_mat.transpose() * lam).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("constrained_least_squares: duplicated constraint rows with consistent rhs") {
    SplitMix64 rng(13);
    const Matrix a = rng.matrix(8, 4);
    const Vector b = rng.vector(8);
    Matrix c_mat(2, 4);
    c_mat.row(0) = rng.vector(4).transpose();
    c_mat.row(1) = c_mat.row(0);
    Vector d(2);
    d[0] = 0.3;
    d[1] = 0.3;
    const Vector x = constrained_least_squares(a, b, c_mat, d);
    CHECK((c_mat * x - d).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("constrained_least_squares: inconsistent duplicated constraints throw") {
    SplitMix64 rng(14);
    const Matrix a = rng.matrix(8, 4);
    const Vector b = rng.vector(8);
    Matrix c_mat(2, 4);
    c_mat.row(0) = rng.vector(4).transpose();
    c_mat.row(1) = c_mat.row(0);
    Vector d(2);
    d[0] = 0.3;
    d[1] = 0.9;
    CHECK_THROWS_AS(constrained_least_squares(a, b, c_mat, d), InfeasibleConstraint);
}

TEST_CASE("min_quadratic_with_energy: constraint satisfied, energy matches, KKT holds") {
    SplitMix64 rng(15);
    QuadraticForm qf(6);
    qf.add_block(rng.matrix(8, 6), 1.0);
    const Matrix a = rng.matrix(2, 6);
    const Vector c = rng.vector(2);
    const auto sol = min_quadratic_with_energy(qf, a, c);
    CHECK((a * sol.delta - c).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(sol.energy == doctest::Approx(qf.quad(sol.delta)).epsilon(1e-8));
    // Stationarity: Q delta in row span of A.
    const Vector g = qf.apply(sol.delta);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(Matrix(a.transpose()));
    CHECK((g - a.transpose() * Vector(cod.solve(g))).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(energy(qf, a, c) == doctest::Approx(sol.energy));
}

TEST_CASE("min_quadratic_linear_under_constraints agrees with the pure quadratic route") {
    SplitMix64 rng(16);
    QuadraticForm qf(5);
    qf.add_block(rng.matrix(7, 5), 1.0);
    const Matrix a = rng.matrix(2, 5);
    const Vector c = rng.vector(2);
    const Vector viaq = min_quadratic_under_constraints(qf, a, c);
    const Vector viakkt =
        min_quadratic_linear_under_constraints(qf, Vector(Vector::Zero(5)), a, c);
    CHECK((viaq - viakkt).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("min_quadratic_linear_under_constraints: unconstrained minimum of x^T Q x + d^T x") {
    SplitMix64 rng(17);
    const Matrix f = rng.matrix(6, 4);
    QuadraticForm qf(4);
    qf.add_block(f, 1.0);
    const Vector d = rng.vector(4);
    const Vector x = min_quadratic_linear_under_constraints(qf, d, Matrix(0, 4), Vector());
    // 2 Q x + d = 0
    CHECK((2.0 * qf.apply(x) + d).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("preconditioned_solve: exact preconditioner converges in one iteration") {
    SplitMix64 rng(18);
    const Matrix f = rng.matrix(6, 4);
    QuadraticForm qf(4);
    qf.add_block(f, 1.0);
    const Matrix qinv = qf.assemble().inverse();
    const Vector b = rng.vector(4);
    int iters = -1;
    const Vector x = preconditioned_solve([&](const Vector& v) { return Vector(qinv * v); }, qf,
                                          b, 1e-12, &iters);
    CHECK(iters <= 1);
    CHECK((qf.apply(x) - b).norm() < 1e-10 * b.norm());
}

TEST_CASE("preconditioned_solve: scaled preconditioner converges geometrically") {
    SplitMix64 rng(19);
    const Matrix f = rng.matrix(6, 4);
    QuadraticForm qf(4);
    qf.add_block(f, 1.0);
    Matrix q = qf.assemble();
    q.diagonal().array() += 1e-9;
    const Matrix half_qinv = 0.5 * q.inverse();  // Zhat = 2Q, contraction 1/2
    const Vector b = rng.vector(4);
    int iters = -1;
    preconditioned_solve([&](const Vector& v) { return Vector(half_qinv * v); }, qf, b, 1e-10,
                         &iters);
    CHECK(iters >= 2);
    CHECK(iters <= 60);  // ~ log2(1e10) plus slack
}

TEST_CASE("preconditioned_solve: stale preconditioner raises NoConvergence") {
    SplitMix64 rng(20);
    const Matrix f = rng.matrix(6, 4);
    QuadraticForm qf(4);
    qf.add_block(f, 1.0);
    // A divergent 'inverse': wrong sign.
    CHECK_THROWS_AS(preconditioned_solve([&](const Vector& v) { return Vector(-v); }, qf,
                                         Vector(rng.vector(4)), 1e-10),
                    NoConvergence);
}

TEST_CASE("DirectBackend solves the weighted oracle system") {
    SplitMix64 rng(21);
    const Matrix a = rng.matrix(2, 5);
    const Matrix m = rng.matrix(3, 5);
    const Matrix n = rng.matrix(6, 5);
    const Vector r = rng.vector(6).cwiseAbs();
    const Vector c = rng.vector(2);
    DirectBackend be;
    const auto sol = be.solve(a, m, 1.5, n, r, 0.25, c);
    CHECK(be.linear_solves() == 1);
    CHECK((a * sol.delta - c).cwiseAbs().maxCoeff() < 1e-9);
    QuadraticForm qf(5);
    qf.add_block(m, 1.5);
    qf.add_block(r.cwiseSqrt().asDiagonal() * n, 0.25);
    CHECK(sol.energy == doctest::Approx(qf.quad(sol.delta)).epsilon(1e-8));
}
