#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "lpnorm/io.hpp"

using namespace lpnorm;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& p, const std::string& content) : path(p) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load_matrix: Matrix Market coordinate format") {
    TempFile f("/tmp/lpnorm_io_coord.mtx",
               "%%MatrixMarket matrix coordinate real general\n"
               "% a comment\n"
               "3 2 3\n"
               "1 1 1.5\n"
               "3 2 -2.0\n"
               "2 1 0.25\n");
    const Matrix m = load_matrix(f.path);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 2);
    CHECK(m(0, 0) == 1.5);
    CHECK(m(2, 1) == -2.0);
    CHECK(m(1, 0) == 0.25);
    CHECK(m(0, 1) == 0.0);
}

TEST_CASE("load_matrix: Matrix Market symmetric coordinate mirrors entries") {
    TempFile f("/tmp/lpnorm_io_sym.mtx",
               "%%MatrixMarket matrix coordinate real symmetric\n"
               "2 2 2\n"
               "1 1 3.0\n"
               "2 1 -1.0\n");
    const Matrix m = load_matrix(f.path);
    CHECK(m(0, 1) == -1.0);
    CHECK(m(1, 0) == -1.0);
    CHECK(m(0, 0) == 3.0);
}

TEST_CASE("load_matrix: Matrix Market array format is column-major") {
    TempFile f("/tmp/lpnorm_io_array.mtx",
               "%%MatrixMarket matrix array real general\n"
               "2 2\n1\n2\n3\n4\n");
    const Matrix m = load_matrix(f.path);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 0) == 2.0);
    CHECK(m(0, 1) == 3.0);
    CHECK(m(1, 1) == 4.0);
}

TEST_CASE("load_matrix: dense text with comments; ragged rows rejected") {
    TempFile f("/tmp/lpnorm_io_dense.txt", "# header\n1 2 3\n4 5 6 # note\n");
    const Matrix m = load_matrix(f.path);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 6.0);
    TempFile g("/tmp/lpnorm_io_ragged.txt", "1 2 3\n4 5\n");
    CHECK_THROWS_AS(load_matrix(g.path), IoError);
    CHECK_THROWS_AS(load_matrix("/nonexistent/matrix"), IoError);
}

TEST_CASE("load_vector: one value per line plus comments") {
    TempFile f("/tmp/lpnorm_io_vec.txt", "1.5\n# comment\n-2\n0.25 # inline\n");
    const Vector v = load_vector(f.path);
    REQUIRE(v.size() == 3);
    CHECK(v[0] == 1.5);
    CHECK(v[1] == -2.0);
    CHECK(v[2] == 0.25);
}

TEST_CASE("format_double: 17 significant digits round-trip") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -12345.6789, 2.718281828459045}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.0) == "0");
}

TEST_CASE("JsonWriter: fixed key order and full-precision floats") {
    JsonWriter w;
    w.field("b", 0.1).field("a", 2L).field("s", std::string("x")).field("v",
                                                                        std::vector<double>{1.0, 0.5});
    CHECK(w.str() ==
          "{\"b\":0.10000000000000001,\"a\":2,\"s\":\"x\",\"v\":[1,0.5]}");
}

TEST_CASE("write_text_file round-trips bytes") {
    const std::string path = "/tmp/lpnorm_io_roundtrip.txt";
    write_text_file(path, "abc\ndef");
    std::ifstream in(path, std::ios::binary);
    std::string got((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(got == "abc\ndef");
    std::remove(path.c_str());
}
