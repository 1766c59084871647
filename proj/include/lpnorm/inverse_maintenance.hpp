#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "lpnorm/backend.hpp"

namespace lpnorm {

// Alg. 8-9 state: reference resistances r_hat, per-bucket lazy counters, and
// the cached explicit inverse of M^T M + N^T Diag(r_hat) N.
struct InverseState {
    Vector r_hat;
    Matrix counters;  // (bucket eta, entry e); eta in 0..ceil(log2 m)
    Matrix z_hat;
    long step_index = 0;
    long woodbury_updates = 0;
    long full_refreshes = 0;
    long eta_max = 0;
    // Sum over update calls of |E_changed|, the lazy-update economy counter.
    long total_changed = 0;
    std::vector<long> changed_per_bucket;  // indexed by firing bucket
};

namespace detail {

inline Matrix maintained_matrix(const Matrix& m, const Matrix& n, const Vector& r) {
    Matrix q = Matrix::Zero(n.cols(), n.cols());
    if (m.rows()) q.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose(), 1.0);
    if (n.rows()) {
        const Matrix sn = r.cwiseMax(0.0).cwiseSqrt().asDiagonal() * n;
        q.selfadjointView<Eigen::Lower>().rankUpdate(sn.transpose(), 1.0);
    }
    Matrix full = q.selfadjointView<Eigen::Lower>();
    full.diagonal().array() += tikhonov(full);
    return full;
}

inline Matrix invert_spd(const Matrix& q, const char* what) {
    Eigen::LDLT<Matrix> ldlt(q);
    check_ldlt(ldlt, what);
    return ldlt.solve(Matrix::Identity(q.rows(), q.cols()));
}

}  // namespace detail

inline InverseState inverse_init(const Matrix& m, const Matrix& n, const Vector& r0) {
    if (r0.size() != n.rows()) throw DimensionMismatch("inverse_init: r0 size");
    if (r0.minCoeff() < 0.0) throw SolverError("inverse_init: negative resistance");
    InverseState st;
    st.r_hat = r0;
    st.eta_max = static_cast<long>(
        std::ceil(std::log2(std::max<double>(static_cast<double>(n.rows()), 2.0))));
    st.counters = Matrix::Zero(st.eta_max + 1, n.rows());
    st.changed_per_bucket.assign(st.eta_max + 1, 0);
    st.z_hat = detail::invert_spd(detail::maintained_matrix(m, n, r0), "inverse_init");
    return st;
}

// Alg. 9: bucketed counter update followed by a Woodbury refresh of z_hat on
// the entries that fired.  r must be elementwise nondecreasing over calls.
inline void update_inverse(InverseState& st, const Matrix& m, const Matrix& n,
                           const Vector& r_prev, const Vector& r_cur) {
    if (r_cur.size() != st.r_hat.size() || r_prev.size() != st.r_hat.size())
        throw DimensionMismatch("update_inverse: resistance size");
    ++st.step_index;

    for (Eigen::Index e = 0; e < r_cur.size(); ++e) {
        const double change = r_cur[e] - r_prev[e];
        if (change < 0.0) throw SolverError("update_inverse: resistance decreased");
        if (change == 0.0 || st.r_hat[e] <= 0.0) continue;  // no finite bucket
        const double ratio = change / st.r_hat[e];
        long eta = 0;
        if (ratio < 1.0) eta = static_cast<long>(std::ceil(-std::log2(ratio)));
        if (eta > st.eta_max) continue;  // negligible change
        st.counters(eta, e) += 1.0;
    }

    std::vector<Eigen::Index> changed;
    for (Eigen::Index e = 0; e < r_cur.size(); ++e) {
        for (long eta = 0; eta <= st.eta_max; ++eta) {
            const long period = 1L << eta;
            if (st.step_index % period != 0) continue;
            if (st.counters(eta, e) >= static_cast<double>(period)) {
                changed.push_back(e);
                ++st.changed_per_bucket[static_cast<size_t>(eta)];
                break;
            }
        }
    }
    if (changed.empty()) return;
    st.total_changed += static_cast<long>(changed.size());

    // Entries picked up: move r_hat to the live value, clear their counters.
    std::vector<Eigen::Index> sel;
    Vector dr(static_cast<Eigen::Index>(changed.size()));
    for (size_t j = 0; j < changed.size(); ++j) {
        const Eigen::Index e = changed[j];
        const double delta = r_cur[e] - st.r_hat[e];
        st.counters.col(e).setZero();
        if (delta > 0.0) {
            dr[static_cast<Eigen::Index>(sel.size())] = delta;
            sel.push_back(e);
        }
        st.r_hat[e] = r_cur[e];
    }
    if (sel.empty()) return;

    Matrix n_s(static_cast<Eigen::Index>(sel.size()), n.cols());
    for (size_t j = 0; j < sel.size(); ++j) n_s.row(static_cast<Eigen::Index>(j)) = n.row(sel[j]);
    dr.conservativeResize(static_cast<Eigen::Index>(sel.size()));

    // Woodbury: Z' = Z - Z N_S^T ((dR)^{-1} + N_S Z N_S^T)^{-1} N_S Z.
    const Matrix zn = st.z_hat * n_s.transpose();
    Matrix mid = n_s * zn;
    mid.diagonal() += dr.cwiseInverse();
    Eigen::LDLT<Matrix> ldlt(mid);
    bool ok = ldlt.info() == Eigen::Success;
    if (ok) {
        const Vector dvec = ldlt.vectorD().cwiseAbs();
        ok = dvec.minCoeff() > dvec.maxCoeff() / detail::kCondLimit;
    }
    if (!ok) {
        // SingularUpdate path: fall back to a full re-inversion.
        ++st.full_refreshes;
        st.z_hat = detail::invert_spd(detail::maintained_matrix(m, n, st.r_hat),
                                      "update_inverse: refresh");
        return;
    }
    st.z_hat -= zn * ldlt.solve(zn.transpose());
    ++st.woodbury_updates;
}

// Solve the oracle system min D^T Q D s.t. A D = c with
// Q = M^T M + N^T Diag(r_cur) N, using z_hat as a damped Richardson
// preconditioner.  Retries once after a forced full refresh.
inline ConstrainedQuadSolution maintained_oracle_solve(InverseState& st, const Matrix& a,
                                                       const Matrix& m, const Matrix& n,
                                                       const Vector& c, const Vector& r_cur,
                                                       double tol) {
    QuadraticForm q(n.cols());
    if (m.rows()) q.add_block(m, 1.0);
    if (n.rows()) q.add_block(r_cur.cwiseMax(0.0).cwiseSqrt().asDiagonal() * n, 1.0);

    for (int attempt = 0; attempt < 2; ++attempt) {
        double ratio = 1.0;
        for (Eigen::Index e = 0; e < r_cur.size(); ++e)
            if (st.r_hat[e] > 0.0) ratio = std::max(ratio, r_cur[e] / st.r_hat[e]);
        const double theta = 2.0 / (1.0 + ratio);
        InverseApplier applier = [&](const Vector& v) { return Vector(theta * (st.z_hat * v)); };
        try {
            Matrix g(n.cols(), a.rows());
            for (Eigen::Index j = 0; j < a.rows(); ++j)
                g.col(j) = preconditioned_solve(applier, q, Vector(a.row(j).transpose()), tol);
            const Matrix cap = a * g;
            Eigen::LDLT<Matrix> cap_ldlt(cap);
            Vector y = cap_ldlt.solve(c);
            Vector delta = g * y;
            const double row_scale = a.rows() ? a.cwiseAbs().rowwise().sum().maxCoeff() *
                                                    delta.cwiseAbs().maxCoeff()
                                              : 0.0;
            const double ctol =
                1e-7 * (1.0 + (c.size() ? c.cwiseAbs().maxCoeff() : 0.0) + row_scale);
            if (c.size() && (a * delta - c).cwiseAbs().maxCoeff() > ctol) {
                Eigen::CompleteOrthogonalDecomposition<Matrix> cod(cap);
                y = cod.solve(c);
                delta = g * y;
                if ((a * delta - c).cwiseAbs().maxCoeff() > ctol)
                    throw SingularSystem("maintained_oracle_solve: capacitance system");
            }
            return {std::move(delta), c.dot(y)};
        } catch (const NoConvergence&) {
            if (attempt == 1) throw;
            ++st.full_refreshes;
            st.r_hat = r_cur;
            st.counters.setZero();
            st.z_hat = detail::invert_spd(detail::maintained_matrix(m, n, r_cur),
                                          "maintained_oracle_solve: refresh");
        }
    }
    throw NoConvergence("maintained_oracle_solve: unreachable");
}

// Backend plugging the maintenance machinery into mwu_solve.  Scalar
// coefficients are folded into the maintained form: M_hat = sqrt(cm) M and
// effective resistances cn * r, so the cached inverse matches exactly.
class MaintenanceBackend final : public OracleBackend {
  public:
    explicit MaintenanceBackend(double tol = 1e-10) : tol_(tol) {}

    ConstrainedQuadSolution solve(const Matrix& a, const Matrix& m, double cm, const Matrix& n,
                                  const Vector& r, double cn, const Vector& c) override {
        const Vector r_eff = cn * r;
        if (!init_) {
            m_hat_ = std::sqrt(cm) * m;
            state_ = inverse_init(m_hat_, n, r_eff);
            last_r_ = r_eff;
            init_ = true;
        } else {
            update_inverse(state_, m_hat_, n, last_r_, r_eff);
            last_r_ = r_eff;
        }
        // Approximation ledger r_hat <= r <= 5 r_hat ln m, tracked as the
        // worst relative slack seen (>= 0 means it held).
        const double lm = std::log(std::max<double>(static_cast<double>(n.rows()), 2.0));
        for (Eigen::Index e = 0; e < r_eff.size(); ++e) {
            if (state_.r_hat[e] <= 0.0) continue;
            const double hi = 5.0 * state_.r_hat[e] * lm;
            min_ledger_slack_ = std::min(min_ledger_slack_, (hi - r_eff[e]) / hi);
            min_ledger_slack_ =
                std::min(min_ledger_slack_, (r_eff[e] - state_.r_hat[e]) / state_.r_hat[e]);
        }
        ++solves_;
        return maintained_oracle_solve(state_, a, m_hat_, n, c, r_eff, tol_);
    }

    void reset() override {
        init_ = false;
        min_ledger_slack_ = std::numeric_limits<double>::infinity();
    }

    long woodbury_updates() const override { return init_ ? state_.woodbury_updates : 0; }
    long full_refreshes() const override { return init_ ? state_.full_refreshes : 0; }
    double min_ledger_slack() const { return min_ledger_slack_; }
    const InverseState& state() const { return state_; }

  private:
    double tol_;
    bool init_ = false;
    Matrix m_hat_;
    Vector last_r_;
    InverseState state_;
    double min_ledger_slack_ = std::numeric_limits<double>::infinity();
};

}  // namespace lpnorm
