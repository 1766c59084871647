#pragma once

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lpnorm/problem.hpp"

namespace lpnorm {

namespace detail {

inline std::string lowercase(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace detail

// Matrix Market (coordinate or array, real general) plus plain
// whitespace-delimited dense text, one matrix row per line.
inline Matrix load_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string first;
    if (!std::getline(in, first)) throw IoError("empty matrix file " + path);

    if (first.rfind("%%MatrixMarket", 0) == 0) {
        std::istringstream hs(first);
        std::string tag, object, format, field, symmetry;
        hs >> tag >> object >> format >> field >> symmetry;
        format = detail::lowercase(format);
        field = detail::lowercase(field);
        symmetry = detail::lowercase(symmetry);
        if (detail::lowercase(object) != "matrix" || (field != "real" && field != "integer"))
            throw IoError("unsupported Matrix Market header in " + path);
        if (symmetry != "general" && symmetry != "symmetric")
            throw IoError("unsupported Matrix Market symmetry in " + path);
        std::string line;
        auto next_data = [&](std::istringstream& ls) {
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '%') continue;
                ls.clear();
                ls.str(line);
                return true;
            }
            return false;
        };
        std::istringstream ls;
        if (!next_data(ls)) throw IoError("missing size line in " + path);
        if (format == "coordinate") {
            long rows = 0, cols = 0, nnz = 0;
            if (!(ls >> rows >> cols >> nnz)) throw IoError("bad size line in " + path);
            Matrix m = Matrix::Zero(rows, cols);
            for (long k = 0; k < nnz; ++k) {
                if (!next_data(ls)) throw IoError("truncated coordinate data in " + path);
                long i = 0, j = 0;
                double v = 0.0;
                if (!(ls >> i >> j >> v)) throw IoError("bad coordinate entry in " + path);
                if (i < 1 || i > rows || j < 1 || j > cols)
                    throw IoError("coordinate out of range in " + path);
                m(i - 1, j - 1) = v;
                if (symmetry == "symmetric" && i != j) m(j - 1, i - 1) = v;
            }
            return m;
        }
        if (format == "array") {
            long rows = 0, cols = 0;
            if (!(ls >> rows >> cols)) throw IoError("bad size line in " + path);
            Matrix m(rows, cols);
            for (long j = 0; j < cols; ++j)
                for (long i = 0; i < rows; ++i) {
                    double v = 0.0;
                    while (!(ls >> v)) {
                        if (!next_data(ls)) throw IoError("truncated array data in " + path);
                    }
                    m(i, j) = v;
                }
            return m;
        }
        throw IoError("unsupported Matrix Market format in " + path);
    }

    // Plain dense text: every non-comment line is one row.
    std::vector<std::vector<double>> rows;
    std::string line = first;
    do {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (!row.empty()) {
            if (!rows.empty() && row.size() != rows.front().size())
                throw IoError("ragged dense matrix in " + path);
            rows.push_back(std::move(row));
        }
    } while (std::getline(in, line));
    if (rows.empty()) throw IoError("no data in " + path);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[0].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

// One value per line; '#' comments allowed.
inline Vector load_vector(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double v;
        while (ls >> v) vals.push_back(v);
    }
    Vector out(static_cast<Eigen::Index>(vals.size()));
    for (size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Minimal JSON writer with caller-fixed key order and 17-significant-digit
// floats, so reports are byte-reproducible.
class JsonWriter {
  public:
    JsonWriter& field(const std::string& key, double v) { return raw(key, format_double(v)); }
    JsonWriter& field(const std::string& key, long v) { return raw(key, std::to_string(v)); }
    JsonWriter& field(const std::string& key, const std::string& v) {
        return raw(key, "\"" + v + "\"");
    }
    JsonWriter& field(const std::string& key, const std::vector<double>& v) {
        std::string s = "[";
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) s += ",";
            s += format_double(v[i]);
        }
        s += "]";
        return raw(key, s);
    }

    std::string str() const { return "{" + body_ + "}"; }

  private:
    JsonWriter& raw(const std::string& key, const std::string& value) {
        if (!body_.empty()) body_ += ",";
        body_ += "\"" + key + "\":" + value;
        return *this;
    }
    std::string body_;
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

}  // namespace lpnorm
