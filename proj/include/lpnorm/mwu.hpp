#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "lpnorm/backend.hpp"
#include "lpnorm/problem.hpp"

namespace lpnorm {

// Width-reduced multiplicative-weights parameters.  All closed forms are in
// terms of m1 = number of weighted rows (rows of the N matrix handed to
// mwu_solve) and the norm exponent p > 2.
struct MwuParams {
    double rho = 0.0;    // width parameter
    double beta = 0.0;   // resistance threshold
    double alpha = 0.0;  // step size
    double tau = 0.0;    // lp threshold
    long T = 0;          // primal-step count
    long K_bar = 0;      // width-step budget
    long m1 = 0;
    double p = 0.0;
};

inline MwuParams compute_params(long m1, double p) {
    if (!(p > 2.0)) throw UnsupportedExponent("compute_params: requires p > 2");
    if (m1 < 2) throw SolverError("compute_params: requires m1 >= 2");
    const double m = static_cast<double>(m1);
    MwuParams par;
    par.m1 = m1;
    par.p = p;
    par.rho = std::pow(m, (p * p - 4.0 * p + 2.0) / (p * (3.0 * p - 2.0)));
    par.beta = std::pow(3.0, p - 1.0) * std::pow(m, (p - 2.0) / (3.0 * p - 2.0));
    par.alpha = std::pow(3.0, -(p - 1.0) / p) / p *
                std::pow(m, -(p * p - 5.0 * p + 2.0) / (p * (3.0 * p - 2.0)));
    par.tau = std::pow(3.0, p) * std::pow(m, (p - 1.0) * (p - 2.0) / (3.0 * p - 2.0));
    par.T = static_cast<long>(std::ceil(std::pow(m, 1.0 / p) / par.alpha));
    par.K_bar = static_cast<long>(std::ceil(std::pow(2.0, -p / (p - 2.0)) * par.rho * par.rho *
                                            std::pow(m, 2.0 / p) *
                                            std::pow(par.beta, -2.0 / (p - 2.0))));
    return par;
}

inline double phi(const Vector& w, double p) { return lp_norm_pow(w, p); }

// Oracle quadratic: min (m1/zeta)^{(p-2)/p} D^T M^T M D + 3^{-(p-2)} sum_e r_e (N D)_e^2
// over A D = c, with r = w^{p-2}.
inline Vector oracle_step(const Matrix& a, const Matrix& m, const Matrix& n, const Vector& c,
                          const Vector& w, double zeta, double p, OracleBackend& backend) {
    if (!(zeta > 0.0)) throw SolverError("oracle_step: zeta must be positive");
    const double m1 = static_cast<double>(n.rows());
    const double cm = std::pow(m1 / zeta, (p - 2.0) / p);
    const double cn = std::pow(3.0, -(p - 2.0));
    const Vector r = w.array().pow(p - 2.0).matrix();
    return backend.solve(a, m, cm, n, r, cn, c).delta;
}

// Oracle objective value at its minimizer, Psi(r).
inline double psi(const Vector& r, const Matrix& a, const Matrix& m, const Matrix& n,
                  const Vector& c, double zeta, double p, OracleBackend* backend = nullptr) {
    const double m1 = static_cast<double>(n.rows());
    const double cm = std::pow(m1 / zeta, (p - 2.0) / p);
    const double cn = std::pow(3.0, -(p - 2.0));
    DirectBackend direct;
    OracleBackend& be = backend ? *backend : static_cast<OracleBackend&>(direct);
    return be.solve(a, m, cm, n, r, cn, c).energy;
}

struct MwuIterInfo {
    long i = 0;       // primal steps taken before this iteration
    long k = 0;       // width steps taken before this iteration
    bool width = false;
    double phi = 0.0;      // ||w||_p^p before the step
    double psi = 0.0;      // oracle energy at this iteration's resistances
    double r_quad = 0.0;   // sum_e r_e (N D)_e^2 for the oracle solution
    double nd_pp = 0.0;    // ||N D||_p^p
};

struct MwuState {
    Vector w;
    Vector x_accum;
    long i = 0;  // primal steps
    long k = 0;  // width steps
    MwuParams params;
    std::vector<MwuIterInfo> trace;

    // Worst-case slack observed for the potential lemmas; >= 0 means the
    // inequality held (relative to the bound's own scale).
    double min_phi_cap_slack = std::numeric_limits<double>::infinity();
    double min_psi_ceiling_slack = std::numeric_limits<double>::infinity();
    double min_width_gain_slack = std::numeric_limits<double>::infinity();
    long width_gain_checks = 0;  // width steps whose lemma preconditions held
    double min_energy_increase_slack = std::numeric_limits<double>::infinity();
    double max_resistance_change_excess = -std::numeric_limits<double>::infinity();
    double max_oracle_ratio = 0.0;  // sum r (ND)^2 / (zeta^{2/p} Phi^{(p-2)/p})
};

// Alg. 5: width-reduced MWU for min D^T M^T M D + ||N D||_p^p over A D = c,
// probed against the decision threshold zeta.  Returns x_accum / T.
inline std::pair<Vector, MwuState> mwu_solve(const Matrix& a, const Matrix& m, const Matrix& n,
                                             const Vector& c, double zeta, double p,
                                             OracleBackend& backend, bool instrument = true) {
    if (!(zeta > 0.0)) throw SolverError("mwu_solve: zeta must be positive");
    MwuState st;
    st.params = compute_params(n.rows(), p);
    const MwuParams& par = st.params;
    const double m1 = static_cast<double>(par.m1);
    const double cm = std::pow(m1 / zeta, (p - 2.0) / p);
    const double cn = std::pow(3.0, -(p - 2.0));
    const double zeta_1p = std::pow(zeta, 1.0 / p);
    const double zeta_2p = std::pow(zeta, 2.0 / p);
    const double width_mult = std::pow(2.0, 1.0 / (p - 2.0));
    const double tau_gain = std::pow(par.tau, 2.0 / p) * zeta_2p / 4.0;
    // Phi-cap width factor (1 + 2^{p/(p-2)} / (rho^2 m1^{2/p} beta^{-2/(p-2)}))
    const double width_factor =
        1.0 + std::pow(2.0, p / (p - 2.0)) /
                  (par.rho * par.rho * std::pow(m1, 2.0 / p) * std::pow(par.beta, -2.0 / (p - 2.0)));

    st.w = Vector::Ones(par.m1);
    st.x_accum = Vector::Zero(a.cols());
    backend.reset();

    double psi0 = -1.0;  // Psi at the all-ones resistances
    bool preconds_held = true;  // ReduceWidthElectricalPotential preconditions so far
    // Pending width-step data for the energy-increase identity (needs the
    // next iteration's Psi).
    bool pending_width = false;
    double pending_psi = 0.0, pending_gain_sum = 0.0;
    long pending_k = 0;
    bool pending_precond = false;

    while (st.i < par.T) {
        const Vector r = st.w.array().pow(p - 2.0).matrix();
        auto sol = backend.solve(a, m, cm, n, r, cn, c);
        const Vector& delta = sol.delta;
        const double psi_cur = sol.energy;
        if (psi0 < 0.0) psi0 = psi_cur;

        const Vector nd = n * delta;
        const double nd_pp = lp_norm_pow(nd, p);
        const bool primal = nd_pp <= par.tau * zeta;

        if (instrument) {
            const double phi_cur = phi(st.w, p);
            st.trace.push_back({st.i, st.k, !primal, phi_cur, psi_cur,
                                r.dot(nd.cwiseAbs2()), nd_pp});
            // Lemma ReduceWidthGammaPotential cap
            const double cap = std::pow(2.0 * par.alpha * st.i + std::pow(m1, 1.0 / p), p) *
                               std::pow(width_factor, static_cast<double>(st.k));
            st.min_phi_cap_slack = std::min(st.min_phi_cap_slack, (cap - phi_cur) / cap);
            // Lemma ElectricalPotentialStartFinishBounds ceiling
            const double ceil_psi =
                zeta_2p * (std::pow(m1, (p - 2.0) / p) + cn * std::pow(phi_cur, (p - 2.0) / p));
            st.min_psi_ceiling_slack =
                std::min(st.min_psi_ceiling_slack, (ceil_psi - psi_cur) / ceil_psi);
            // Lemma Oracle ratio (asserted only on planted instances)
            const double oracle_bound = zeta_2p * std::pow(phi_cur, (p - 2.0) / p);
            if (oracle_bound > 0.0)
                st.max_oracle_ratio =
                    std::max(st.max_oracle_ratio, r.dot(nd.cwiseAbs2()) / oracle_bound);
            // Settle the previous width step now that Psi at its new
            // resistances is available.
            if (pending_width) {
                const double scale = std::max({std::abs(psi_cur), std::abs(pending_psi), 1e-300});
                st.min_energy_increase_slack =
                    std::min(st.min_energy_increase_slack,
                             (psi_cur - pending_psi - pending_gain_sum) / scale);
                if (pending_precond) {
                    // Cumulative form of Lemma ReduceWidthElectricalPotential.
                    const double lhs = psi_cur - psi0;
                    const double rhs = static_cast<double>(pending_k - 1) * tau_gain;
                    const double sc = std::max(std::abs(rhs), tau_gain);
                    st.min_width_gain_slack =
                        std::min(st.min_width_gain_slack, (lhs - rhs) / sc);
                    ++st.width_gain_checks;
                }
                pending_width = false;
            }
        }

        if (primal) {
            if (instrument) {
                // Lemma ResistanceChangeToFlowValue, exact per-entry check.
                for (Eigen::Index e = 0; e < st.w.size(); ++e) {
                    const double step = par.alpha * std::abs(nd[e]) / zeta_1p;
                    const double lhs =
                        std::pow(st.w[e] + step, p - 2.0) / std::pow(st.w[e], p - 2.0) - 1.0;
                    const double rhs = std::pow(1.0 + step, p - 2.0) - 1.0;
                    st.max_resistance_change_excess =
                        std::max(st.max_resistance_change_excess, lhs - rhs);
                }
            }
            st.w += (par.alpha / zeta_1p) * nd.cwiseAbs();
            st.x_accum += delta;
            ++st.i;
        } else {
            bool any = false;
            double gain_sum = 0.0;
            Vector r_new = r;
            for (Eigen::Index e = 0; e < st.w.size(); ++e) {
                if (std::abs(nd[e]) >= par.rho * zeta_1p && r[e] <= par.beta) {
                    st.w[e] *= width_mult;
                    any = true;
                    r_new[e] = 2.0 * r[e];  // width multiplier in resistance space
                    gain_sum += (1.0 - r[e] / r_new[e]) * r[e] * nd[e] * nd[e];
                }
            }
            if (!any)
                throw WidthBudgetExceeded("mwu_solve: no width-reducible entry; zeta too small");
            ++st.k;
            if (st.k > par.K_bar)
                throw WidthBudgetExceeded("mwu_solve: width budget exhausted; zeta too small");
            if (instrument) {
                // ReduceWidthElectricalPotential preconditions at the current r.
                const bool pre1 =
                    std::pow(par.tau, 2.0 / p) * zeta_2p >= 4.0 * psi_cur / (cn * par.beta);
                const bool pre2 =
                    par.tau * zeta_2p >= 2.0 * psi_cur * std::pow(par.rho, p - 2.0) / cn;
                preconds_held = preconds_held && pre1 && pre2;
                pending_width = true;
                pending_psi = psi_cur;
                pending_gain_sum = cn * gain_sum;
                pending_k = st.k;
                pending_precond = preconds_held;
            }
        }
    }
    Vector x = st.x_accum / static_cast<double>(par.T);
    return {std::move(x), std::move(st)};
}

}  // namespace lpnorm
