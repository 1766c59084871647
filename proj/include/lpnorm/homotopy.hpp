#pragma once

#include <vector>

#include "lpnorm/residual_solver.hpp"

namespace lpnorm {

inline Vector l2_minimizer(const Matrix& a, const Matrix& n, const Vector& b) {
    return constrained_least_squares(n, Vector(Vector::Zero(n.rows())), a, b);
}

struct HomotopyStage {
    double k = 0.0;       // norm exponent of this stage
    Vector x;             // stage output
    double objective_k = 0.0;  // ||Nx||_k^k at the stage output
};

// Alg. 2: warm start for pure l_p objectives.  Stage exponents run
// k = 2, 4, ..., 2^{floor(log2 p) - 1}; the k = 2 stage is the exact l2
// minimizer and each later stage is solved to a certified 2-approximation.
inline Vector start_solution(const Matrix& a, const Matrix& n, const Vector& b, double p,
                             OracleBackend& backend,
                             std::vector<HomotopyStage>* stages = nullptr) {
    Vector x = l2_minimizer(a, n, b);
    if (stages) stages->push_back({2.0, x, (n * x).squaredNorm()});
    if (p < 4.0) return x;

    const double k_max = std::pow(2.0, std::floor(std::log2(p)) - 1.0);
    for (double k = 4.0; k <= k_max; k *= 2.0) {
        ProblemInstance inst;
        inst.A = a;
        inst.M = Matrix(0, a.cols());
        inst.N = n;
        inst.d_vec = Vector();
        inst.b = b;
        inst.p = k;
        // Solve until the 2-approximation is certified: a run with
        // eps = f/4 that fails to halve f pins OPT >= f/2.
        double f = objective(inst, x);
        while (f > 0.0) {
            const double f_prev = f;
            auto [x_new, rep] = complete_solve(inst, x, f_prev / 4.0, backend);
            x = std::move(x_new);
            f = objective(inst, x);
            if (f >= f_prev / 2.0) break;
        }
        if (stages) stages->push_back({k, x, f});
        if (f == 0.0) break;  // exact optimum for every norm
    }
    return x;
}

}  // namespace lpnorm
