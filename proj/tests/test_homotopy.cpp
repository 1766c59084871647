#include <doctest.h>

#include "lpnorm/homotopy.hpp"
#include "lpnorm/rng.hpp"
#include "reference.hpp"

using namespace lpnorm;

namespace {

struct Pure {
    Matrix a, n;
    Vector b;
};

Pure random_pure(std::uint64_t seed, Eigen::Index n_cols = 6, Eigen::Index m2 = 12) {
    SplitMix64 rng(seed);
    Pure pu;
    pu.a = rng.matrix(2, n_cols);
    pu.n = rng.matrix(m2, n_cols);
    pu.b = pu.a * rng.vector(n_cols);
    return pu;
}

double ref_opt(const Pure& pu, double p) {
    refsolve::RefProblem rp;
    rp.N = pu.n;
    rp.p = p;
    rp.A = pu.a;
    rp.b = pu.b;
    return refsolve::projected_newton(rp).objective;
}

}  // namespace

TEST_CASE("l2_minimizer solves the constrained least-squares problem") {
    const Pure pu = random_pure(131);
    const Vector x = l2_minimizer(pu.a, pu.n, pu.b);
    const Vector closed =
        constrained_least_squares(pu.n, Vector(Vector::Zero(pu.n.rows())), pu.a, pu.b);
    CHECK((x - closed).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("start_solution: p < 4 returns the l2 stage only") {
    const Pure pu = random_pure(132);
    DirectBackend be;
    std::vector<HomotopyStage> stages;
    const Vector x = start_solution(pu.a, pu.n, pu.b, 3.0, be, &stages);
    CHECK(stages.size() == 1);
    CHECK(stages[0].k == 2.0);
    CHECK((x - l2_minimizer(pu.a, pu.n, pu.b)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("start_solution: stage ladder for p = 8 is {2, 4}") {
    const Pure pu = random_pure(133);
    DirectBackend be;
    std::vector<HomotopyStage> stages;
    start_solution(pu.a, pu.n, pu.b, 8.0, be, &stages);
    REQUIRE(stages.size() == 2);
    CHECK(stages[0].k == 2.0);
    CHECK(stages[1].k == 4.0);
}

TEST_CASE("start_solution: stage ladder for p = 16 is {2, 4, 8}") {
    const Pure pu = random_pure(134);
    DirectBackend be;
    std::vector<HomotopyStage> stages;
    start_solution(pu.a, pu.n, pu.b, 16.0, be, &stages);
    REQUIRE(stages.size() == 3);
    CHECK(stages[2].k == 8.0);
}

TEST_CASE("start_solution: every stage is a certified 2-approximation") {
    for (std::uint64_t seed : {135ULL, 136ULL}) {
        const Pure pu = random_pure(seed);
        DirectBackend be;
        std::vector<HomotopyStage> stages;
        start_solution(pu.a, pu.n, pu.b, 8.0, be, &stages);
        for (const auto& st : stages) {
            if (st.k == 2.0) continue;  // exact stage
            const double opt = ref_opt(pu, st.k);
            CHECK(st.objective_k <= 2.0 * opt * (1.0 + 1e-9) + 1e-12);
        }
    }
}

TEST_CASE("start_solution output is feasible and within the O(m)-factor start bound") {
    const Pure pu = random_pure(137);
    DirectBackend be;
    const Vector x0 = start_solution(pu.a, pu.n, pu.b, 8.0, be);
    CHECK((pu.a * x0 - pu.b).cwiseAbs().maxCoeff() < 1e-8);
    const double opt8 = ref_opt(pu, 8.0);
    const double m = static_cast<double>(pu.n.rows());
    CHECK(lp_norm_pow(Vector(pu.n * x0), 8.0) <= 16.0 * m * opt8 * (1.0 + 1e-9));
}
