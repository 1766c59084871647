// lp-norm regression front door: `lpsolve solve` runs one instance through
// the solver stack and writes a JSON report; `lpsolve bench` sweeps seeded
// synthetic suites and emits CSV with the theorem-shaped ceilings alongside
// the measured counts.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "lpnorm/lpnorm.hpp"

namespace {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("LPREFINE_LOG");
    if (!env) return LogLevel::kError;
    const std::string v(env);
    if (v == "debug") return LogLevel::kDebug;
    if (v == "info") return LogLevel::kInfo;
    return LogLevel::kError;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::kInfo) std::cerr << "[info] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::kDebug) std::cerr << "[debug] " << msg << "\n";
}

struct SolveOptions {
    double p = 2.0;
    double eps = 1e-8;
    std::string algo = "auto";
    std::string backend = "direct";
    std::string warm_start = "zero";
    std::string a_path, m_path, n_path, d_path, b_path;
    std::string graph_path, labels_path;
    std::string report_path;
    std::uint64_t seed = 0;
    long max_solves = 0;  // 0 = unlimited
};

lpnorm::ProblemInstance load_instance(const SolveOptions& opt, lpnorm::Vector* x0_out) {
    using namespace lpnorm;
    if (!opt.graph_path.empty()) {
        if (opt.labels_path.empty()) throw IoError("--graph requires --labels");
        const LabeledGraph g = load_graph(opt.graph_path, opt.labels_path);
        const GraphRegression reg = laplacian_to_regression(g, opt.p);
        ProblemInstance inst = unconstrained_to_canonical(reg.A, reg.b, opt.p);
        *x0_out = canonical_start(reg.A, reg.b);
        log_info("graph instance: " + std::to_string(g.n_total) + " vertices, " +
                 std::to_string(g.edges.size()) + " edges");
        return inst;
    }
    if (opt.n_path.empty()) throw IoError("--N is required (or --graph/--labels)");
    ProblemInstance inst;
    inst.N = load_matrix(opt.n_path);
    const Eigen::Index n = inst.N.cols();
    inst.A = opt.a_path.empty() ? Matrix(0, n) : load_matrix(opt.a_path);
    inst.M = opt.m_path.empty() ? Matrix(0, n) : load_matrix(opt.m_path);
    inst.d_vec = opt.d_path.empty() ? Vector() : load_vector(opt.d_path);
    inst.b = opt.b_path.empty() ? Vector(Vector::Zero(inst.A.rows())) : load_vector(opt.b_path);
    inst.p = opt.p;
    if (inst.A.rows()) {
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod(inst.A);
        *x0_out = cod.solve(inst.b);
    } else {
        *x0_out = Vector::Zero(n);
    }
    return inst;
}

std::string report_json(const std::string& algo, const lpnorm::ProblemInstance& inst,
                        const lpnorm::Vector& x, const lpnorm::SolverReport& rep) {
    lpnorm::JsonWriter w;
    w.field("algo", algo)
        .field("p", inst.p)
        .field("n", static_cast<long>(inst.n()))
        .field("m1", static_cast<long>(inst.m1()))
        .field("m2", static_cast<long>(inst.m2()))
        .field("objective", lpnorm::objective(inst, x))
        .field("kappa_eff", rep.kappa_eff)
        .field("accepted_steps", rep.accepted_steps)
        .field("nu_halvings", rep.nu_halvings)
        .field("linear_solves", rep.linear_solves)
        .field("woodbury_updates", rep.woodbury_updates)
        .field("full_refreshes", rep.full_refreshes)
        .field("objective_trace", rep.objective_trace)
        .field("nu_trace", rep.nu_trace)
        .field("kappa_trace", rep.kappa_trace)
        .field("solution", std::vector<double>(x.data(), x.data() + x.size()));
    return w.str() + "\n";
}

int cmd_solve(const SolveOptions& opt) {
    using namespace lpnorm;
    Vector x0;
    ProblemInstance inst = load_instance(opt, &x0);
    inst.validate();

    DirectBackend direct;
    MaintenanceBackend maintained;
    OracleBackend& backend = (opt.backend == "inverse-maintenance")
                                 ? static_cast<OracleBackend&>(maintained)
                                 : static_cast<OracleBackend&>(direct);

    if (opt.warm_start == "l2") {
        if (!inst.pure()) throw SolverError("--warm-start l2 requires a pure instance");
        x0 = l2_minimizer(inst.A, inst.N, inst.b);
    } else if (opt.warm_start == "homotopy") {
        if (!inst.pure()) throw SolverError("--warm-start homotopy requires a pure instance");
        x0 = start_solution(inst.A, inst.N, inst.b, inst.p, backend);
    }
    log_info("start objective " + format_double(objective(inst, x0)));

    Vector x;
    SolverReport rep;
    std::string algo = opt.algo;
    if (opt.algo == "irls") {
        if (!inst.pure()) throw SolverError("--algo irls requires a pure instance");
        std::tie(x, rep) = irls_solve(inst.A, inst.N, inst.b, inst.p, opt.eps);
    } else if (opt.algo == "classic-irls") {
        if (!inst.pure()) throw SolverError("--algo classic-irls requires a pure instance");
        const long iters = opt.max_solves > 0 ? opt.max_solves : 500;
        auto [xc, trace] = classic_irls(inst.A, inst.N, inst.b, inst.p, iters);
        x = std::move(xc);
        rep.objective_trace = std::move(trace);
        rep.linear_solves = static_cast<long>(rep.objective_trace.size()) - 1;
    } else {  // auto, mwu
        std::tie(x, rep) = complete_solve(inst, x0, opt.eps, backend);
    }
    if (opt.max_solves > 0 && rep.linear_solves > opt.max_solves)
        throw SolverError("linear-solve budget exceeded: " + std::to_string(rep.linear_solves) +
                          " > " + std::to_string(opt.max_solves));
    log_debug("final objective " + format_double(objective(inst, x)));

    const std::string report = report_json(algo, inst, x, rep);
    if (opt.report_path.empty())
        std::cout << report;
    else
        write_text_file(opt.report_path, report);
    return 0;
}

struct BenchOptions {
    std::vector<double> p_values;
    std::vector<long> m_values;
    std::uint64_t seed = 0;
    std::string report_path;
    bool timings = false;
};

// One bench row: a planted decision instance at (m, p) measured against the
// theorem ceilings T and K_bar (blank at p = 2, where the MWU loop is not
// involved and a single exact solve applies).
std::string bench_row(long m, double p, std::uint64_t seed, bool timings) {
    using namespace lpnorm;
    SplitMix64 rng(seed);
    const Eigen::Index n = std::max<Eigen::Index>(4, m / 4);
    const Eigen::Index d_rows = std::max<Eigen::Index>(1, n / 4);
    const Matrix a = rng.matrix(d_rows, n);
    const Matrix n_mat = rng.matrix(m, n);
    const Matrix m_mat = rng.matrix(n / 2, n);
    const Vector planted = rng.vector(n);
    const Vector c = a * planted;
    const double zeta =
        (m_mat * planted).squaredNorm() + lp_norm_pow(n_mat * planted, p);

    const auto t0 = std::chrono::steady_clock::now();
    std::string row = std::to_string(m) + "," + std::to_string(n) + "," + format_double(p) + "," +
                      std::to_string(seed) + ",";
    if (p > 2.0) {
        DirectBackend backend;
        auto [x, st] = mwu_solve(a, m_mat, n_mat, c, zeta, p, backend, false);
        (void)x;
        row += std::to_string(st.i) + "," + std::to_string(st.k) + "," +
               std::to_string(backend.linear_solves()) + "," + std::to_string(st.params.T) + "," +
               std::to_string(st.params.K_bar);
    } else {
        DirectBackend backend;
        QuadraticForm q(n);
        q.add_block(m_mat, 1.0);
        q.add_block(n_mat, 1.0);
        min_quadratic_under_constraints(q, a, c);
        row += "1,0,1,,";
    }
    if (timings) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row += "," + format_double(secs);
    }
    return row + "\n";
}

int cmd_bench(const BenchOptions& opt) {
    using namespace lpnorm;
    std::string csv = "m,n,p,seed,primal_steps,width_steps,linear_solves,T,K_bar";
    if (opt.timings) csv += ",wall_seconds";
    csv += "\n";
    for (long m : opt.m_values)
        for (double p : opt.p_values) {
            log_info("bench m=" + std::to_string(m) + " p=" + format_double(p));
            csv += bench_row(m, p, opt.seed, opt.timings);
        }
    if (opt.report_path.empty())
        std::cout << csv;
    else
        write_text_file(opt.report_path, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lp-norm regression solver suite"};
    app.require_subcommand(1);

    SolveOptions sopt;
    CLI::App* solve = app.add_subcommand("solve", "solve one instance");
    solve->add_option("--p", sopt.p, "norm exponent (>= 2)");
    solve->add_option("--eps", sopt.eps, "target accuracy");
    solve->add_option("--algo", sopt.algo, "auto|mwu|irls|classic-irls")
        ->check(CLI::IsMember({"auto", "mwu", "irls", "classic-irls"}));
    solve->add_option("--backend", sopt.backend, "direct|inverse-maintenance")
        ->check(CLI::IsMember({"direct", "inverse-maintenance"}));
    solve->add_option("--warm-start", sopt.warm_start, "zero|l2|homotopy")
        ->check(CLI::IsMember({"zero", "l2", "homotopy"}));
    solve->add_option("--A", sopt.a_path, "constraint matrix file");
    solve->add_option("--M", sopt.m_path, "quadratic-term matrix file");
    solve->add_option("--N", sopt.n_path, "lp-term matrix file");
    solve->add_option("--d", sopt.d_path, "linear-term vector file");
    solve->add_option("--b", sopt.b_path, "constraint right-hand side file");
    solve->add_option("--graph", sopt.graph_path, "edge-list file (u v weight)");
    solve->add_option("--labels", sopt.labels_path, "labels file (vertex value)");
    solve->add_option("--report", sopt.report_path, "JSON report path (default stdout)");
    solve->add_option("--seed", sopt.seed, "seed recorded for reproducibility");
    solve->add_option("--max-solves", sopt.max_solves, "linear-solve budget (0 = unlimited)");

    BenchOptions bopt;
    CLI::App* bench = app.add_subcommand("bench", "seeded synthetic benchmark sweep");
    bench->add_option("--p", bopt.p_values, "norm exponents to sweep");
    bench->add_option("--m", bopt.m_values, "row counts to sweep");
    bench->add_option("--seed", bopt.seed, "suite seed");
    bench->add_option("--report", bopt.report_path, "CSV path (default stdout)");
    bench->add_flag("--timings", bopt.timings, "append wall time (breaks byte determinism)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (solve->parsed()) return cmd_solve(sopt);
        return cmd_bench(bopt);
    } catch (const lpnorm::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const lpnorm::MalformedGraph& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 1;
    } catch (const lpnorm::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    }
}
