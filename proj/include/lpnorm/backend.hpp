#pragma once

#include "lpnorm/linalg.hpp"

namespace lpnorm {

// Solver for the weighted oracle system
//   min D^T (cm M^T M + cn N^T Diag(r) N) D   s.t.  A D = c.
// The direct backend refactorizes per call; the inverse-maintenance backend
// (inverse_maintenance.hpp) reuses a lazily updated cached inverse.
class OracleBackend {
  public:
    virtual ~OracleBackend() = default;

    virtual ConstrainedQuadSolution solve(const Matrix& a, const Matrix& m, double cm,
                                          const Matrix& n, const Vector& r, double cn,
                                          const Vector& c) = 0;

    long linear_solves() const { return solves_; }
    virtual long woodbury_updates() const { return 0; }
    virtual long full_refreshes() const { return 0; }

    // A new mwu_solve run begins; maintenance state must not leak across runs.
    virtual void reset() {}

  protected:
    long solves_ = 0;
};

class DirectBackend final : public OracleBackend {
  public:
    ConstrainedQuadSolution solve(const Matrix& a, const Matrix& m, double cm, const Matrix& n,
                                  const Vector& r, double cn, const Vector& c) override {
        if (r.size() != n.rows()) throw DimensionMismatch("DirectBackend: r size");
        QuadraticForm q(n.cols());
        if (m.rows() && cm > 0.0) q.add_block(m, cm);
        if (n.rows() && cn > 0.0) q.add_block(r.cwiseMax(0.0).cwiseSqrt().asDiagonal() * n, cn);
        ++solves_;
        return min_quadratic_with_energy(q, a, c);
    }
};

}  // namespace lpnorm
