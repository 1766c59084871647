#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "lpnorm/problem.hpp"

namespace lpnorm {

struct LabeledGraph {
    long n_total = 0;
    std::vector<std::tuple<long, long, double>> edges;  // (u, v, weight)
    std::vector<std::pair<long, double>> labeled;       // (vertex, label value)
};

inline void validate_graph(const LabeledGraph& g) {
    std::set<long> seen;
    for (const auto& [u, v, w] : g.edges) {
        if (u < 0 || v < 0 || u >= g.n_total || v >= g.n_total)
            throw MalformedGraph("edge endpoint out of range");
        if (u == v) throw MalformedGraph("self-loop");
        if (w < 0.0) throw MalformedGraph("negative edge weight");
    }
    for (const auto& [vtx, val] : g.labeled) {
        if (vtx < 0 || vtx >= g.n_total) throw MalformedGraph("labeled vertex out of range");
        if (!seen.insert(vtx).second) throw MalformedGraph("duplicate label");
        (void)val;
    }
}

// Edge-vertex incidence: one row per edge, +1 at the lower-index endpoint,
// -1 at the higher.  The p-Laplacian objective is orientation-invariant.
inline Matrix build_incidence(const LabeledGraph& g) {
    validate_graph(g);
    Matrix b = Matrix::Zero(static_cast<Eigen::Index>(g.edges.size()), g.n_total);
    for (size_t i = 0; i < g.edges.size(); ++i) {
        const auto& [u, v, w] = g.edges[i];
        const long lo = std::min(u, v), hi = std::max(u, v);
        b(static_cast<Eigen::Index>(i), lo) = 1.0;
        b(static_cast<Eigen::Index>(i), hi) = -1.0;
        (void)w;
    }
    return b;
}

struct GraphRegression {
    Matrix A;                     // W^{1/p} B over the unlabeled columns
    Vector b;                     // labeled-column contribution, negated
    std::vector<long> unlabeled;  // column j of A is vertex unlabeled[j]
    std::vector<long> labeled;    // order of the labeled block
};

// Appendix B: minimizing ||Ax - b||_p over unlabeled assignments x equals
// minimizing sum_e w_e |x_u - x_v|^p with labeled vertices fixed.  Labeled
// vertices are permuted to the trailing columns; the permutation is recorded.
inline GraphRegression laplacian_to_regression(const LabeledGraph& g, double p) {
    validate_graph(g);
    if (g.labeled.empty()) throw MalformedGraph("no labeled vertices");
    const Matrix inc = build_incidence(g);
    Vector wp(static_cast<Eigen::Index>(g.edges.size()));
    for (size_t i = 0; i < g.edges.size(); ++i)
        wp[static_cast<Eigen::Index>(i)] = std::pow(std::get<2>(g.edges[i]), 1.0 / p);

    std::vector<bool> is_labeled(g.n_total, false);
    Vector label_values = Vector::Zero(g.n_total);
    for (const auto& [vtx, val] : g.labeled) {
        is_labeled[vtx] = true;
        label_values[vtx] = val;
    }
    GraphRegression out;
    for (long v = 0; v < g.n_total; ++v)
        (is_labeled[v] ? out.labeled : out.unlabeled).push_back(v);

    const Eigen::Index me = inc.rows();
    const Eigen::Index nu = static_cast<Eigen::Index>(out.unlabeled.size());
    out.A.resize(me, nu);
    for (Eigen::Index j = 0; j < nu; ++j)
        out.A.col(j) = wp.cwiseProduct(inc.col(out.unlabeled[static_cast<size_t>(j)]));
    Vector gvals(static_cast<Eigen::Index>(out.labeled.size()));
    Matrix bl(me, static_cast<Eigen::Index>(out.labeled.size()));
    for (size_t j = 0; j < out.labeled.size(); ++j) {
        bl.col(static_cast<Eigen::Index>(j)) = wp.cwiseProduct(inc.col(out.labeled[j]));
        gvals[static_cast<Eigen::Index>(j)] = label_values[out.labeled[j]];
    }
    out.b = -(bl * gvals);
    return out;
}

// Canonical constrained form of min ||Ax - b||_p via the augmentation
// y = Ax - b: variables (x, y), constraint [A, -I](x, y) = b, N selecting y.
inline ProblemInstance unconstrained_to_canonical(const Matrix& a, const Vector& b, double p) {
    const Eigen::Index me = a.rows();
    const Eigen::Index nx = a.cols();
    ProblemInstance inst;
    inst.A.resize(me, nx + me);
    inst.A.leftCols(nx) = a;
    inst.A.rightCols(me) = -Matrix::Identity(me, me);
    inst.b = b;
    inst.N = Matrix::Zero(me, nx + me);
    inst.N.rightCols(me) = Matrix::Identity(me, me);
    inst.M = Matrix(0, nx + me);
    inst.d_vec = Vector();
    inst.p = p;
    return inst;
}

// Feasible start for the canonical form above: x = 0, y = -b.
inline Vector canonical_start(const Matrix& a, const Vector& b) {
    Vector x0 = Vector::Zero(a.cols() + a.rows());
    x0.tail(a.rows()) = -b;
    return x0;
}

namespace detail {

inline std::vector<std::vector<std::string>> parse_ws_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string t;
        while (ls >> t) toks.push_back(t);
        if (!toks.empty()) rows.push_back(std::move(toks));
    }
    return rows;
}

}  // namespace detail

// Edge-list file: one edge per line "u v weight"; labels file: "vertex value".
inline LabeledGraph load_graph(const std::string& edges_path, const std::string& labels_path) {
    LabeledGraph g;
    long max_vertex = -1;
    for (const auto& toks : detail::parse_ws_lines(edges_path)) {
        if (toks.size() != 3) throw MalformedGraph("edge line needs: u v weight");
        try {
            const long u = std::stol(toks[0]);
            const long v = std::stol(toks[1]);
            const double w = std::stod(toks[2]);
            g.edges.emplace_back(u, v, w);
            max_vertex = std::max({max_vertex, u, v});
        } catch (const std::logic_error&) {
            throw MalformedGraph("unparseable edge line in " + edges_path);
        }
    }
    for (const auto& toks : detail::parse_ws_lines(labels_path)) {
        if (toks.size() != 2) throw MalformedGraph("label line needs: vertex value");
        try {
            const long vtx = std::stol(toks[0]);
            g.labeled.emplace_back(vtx, std::stod(toks[1]));
            max_vertex = std::max(max_vertex, vtx);
        } catch (const std::logic_error&) {
            throw MalformedGraph("unparseable label line in " + labels_path);
        }
    }
    g.n_total = max_vertex + 1;
    validate_graph(g);
    return g;
}

// p-Laplacian value sum_e w_e |x_u - x_v|^p for a full vertex assignment.
inline double p_laplacian(const LabeledGraph& g, const Vector& x, double p) {
    double s = 0.0;
    for (const auto& [u, v, w] : g.edges) s += w * std::pow(std::abs(x[u] - x[v]), p);
    return s;
}

}  // namespace lpnorm
