#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memnet/data_io.hpp>
#include <memnet/linalg.hpp>

#include <Eigen/SVD>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace memnet;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("memnet_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

void push_u32_be(std::vector<unsigned char>& v, std::uint32_t x) {
    v.push_back(static_cast<unsigned char>(x >> 24));
    v.push_back(static_cast<unsigned char>(x >> 16));
    v.push_back(static_cast<unsigned char>(x >> 8));
    v.push_back(static_cast<unsigned char>(x));
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("gen_synthetic rows are unit norm and seed-pinned") {
    const Dataset a = gen_synthetic(30, 6, 5);
    for (Index j = 0; j < a.n(); ++j) {
        CHECK(std::abs(a.inputs.row(j).norm() - 1.0) <= 1e-12);
    }
    CHECK(a.Y <= 1.0);
    CHECK(a.B == doctest::Approx(1.0));

    const Dataset b = gen_synthetic(30, 6, 5);
    CHECK(a.inputs == b.inputs);
    CHECK(a.labels == b.labels);
    CHECK(a.inputs != gen_synthetic(30, 6, 6).inputs);
}

TEST_CASE("gen_synthetic at the experiment scale n=300 d=100") {
    const Dataset big = gen_synthetic(300, 100, 1);
    CHECK(big.n() == 300);
    CHECK(big.d() == 100);
    CHECK(big.B == doctest::Approx(1.0));
    CHECK(big.Y <= 1.0);
}

TEST_CASE("normalize_rows is explicit and exact") {
    Matrix x(2, 2);
    x << 3, 4, 0, 2;
    Vector y(2);
    y << 1, 2;
    const Dataset norm = normalize_rows(Dataset(x, y));
    CHECK(norm.inputs.row(0).norm() == doctest::Approx(1.0));
    CHECK(norm.inputs(0, 0) == doctest::Approx(0.6));
    CHECK(norm.inputs(1, 1) == doctest::Approx(1.0));
}

TEST_CASE("load_idx recovers a hand-built fixture exactly") {
    TempDir dir;
    std::vector<unsigned char> img;
    push_u32_be(img, 0x00000803);
    push_u32_be(img, 2);  // n
    push_u32_be(img, 2);  // rows
    push_u32_be(img, 2);  // cols
    for (unsigned char b : {0, 51, 102, 153, 204, 255, 17, 34}) img.push_back(b);
    write_bytes(dir.file("img.idx"), img);

    std::vector<unsigned char> lab;
    push_u32_be(lab, 0x00000801);
    push_u32_be(lab, 2);
    lab.push_back(7);
    lab.push_back(3);
    write_bytes(dir.file("lab.idx"), lab);

    const Dataset data = load_idx(dir.file("img.idx"), dir.file("lab.idx"));
    REQUIRE(data.n() == 2);
    REQUIRE(data.d() == 4);
    CHECK(data.inputs(0, 0) == 0.0);
    CHECK(data.inputs(0, 1) == doctest::Approx(51.0 / 255.0));
    CHECK(data.inputs(1, 1) == 1.0);
    CHECK(data.labels[0] == 7.0);
    CHECK(data.labels[1] == 3.0);
}

TEST_CASE("load_idx rejects wrong magic, truncation, and count mismatch") {
    TempDir dir;
    std::vector<unsigned char> bad;
    push_u32_be(bad, 0x00000803);  // images magic on a labels file
    push_u32_be(bad, 1);
    bad.push_back(0);
    write_bytes(dir.file("bad_lab.idx"), bad);

    std::vector<unsigned char> img;
    push_u32_be(img, 0x00000803);
    push_u32_be(img, 1);
    push_u32_be(img, 1);
    push_u32_be(img, 1);
    img.push_back(9);
    write_bytes(dir.file("img.idx"), img);

    try {
        load_idx(dir.file("img.idx"), dir.file("bad_lab.idx"));
        FAIL("expected format_error");
    } catch (const format_error& e) {
        CHECK(std::string(e.what()).find("magic") != std::string::npos);
    }

    std::vector<unsigned char> trunc;
    push_u32_be(trunc, 0x00000803);
    push_u32_be(trunc, 2);
    push_u32_be(trunc, 2);
    push_u32_be(trunc, 2);
    trunc.push_back(1);  // 1 of 8 payload bytes
    write_bytes(dir.file("trunc.idx"), trunc);
    try {
        load_idx(dir.file("trunc.idx"), dir.file("bad_lab.idx"));
        FAIL("expected format_error");
    } catch (const format_error& e) {
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }

    std::vector<unsigned char> lab3;
    push_u32_be(lab3, 0x00000801);
    push_u32_be(lab3, 3);
    lab3.insert(lab3.end(), {1, 2, 3});
    write_bytes(dir.file("lab3.idx"), lab3);
    CHECK_THROWS_AS(load_idx(dir.file("img.idx"), dir.file("lab3.idx")), format_error);
}

TEST_CASE("load_idx accepts an empty volume") {
    TempDir dir;
    std::vector<unsigned char> img;
    push_u32_be(img, 0x00000803);
    push_u32_be(img, 0);
    push_u32_be(img, 28);
    push_u32_be(img, 28);
    write_bytes(dir.file("img.idx"), img);
    std::vector<unsigned char> lab;
    push_u32_be(lab, 0x00000801);
    push_u32_be(lab, 0);
    write_bytes(dir.file("lab.idx"), lab);
    const Dataset data = load_idx(dir.file("img.idx"), dir.file("lab.idx"));
    CHECK(data.n() == 0);
    CHECK(data.d() == 784);
}

TEST_CASE("pca_project with the full basis reconstructs the centered data") {
    const Dataset data = gen_synthetic(12, 5, 7);
    const Dataset proj = pca_project(data, 5);
    const Matrix v = pca_loadings(data, 5);
    const Matrix centered = data.inputs.rowwise() - data.inputs.colwise().mean();
    CHECK((proj.inputs * v.transpose() - centered).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((v.transpose() * v - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("pca_project on rank-one data explains everything in one component") {
    Rng rng(9);
    Vector dir(4);
    dir << 0.5, -0.5, 0.5, 0.5;
    Matrix x(10, 4);
    for (Index j = 0; j < 10; ++j) x.row(j) = (rng.gaussian() * dir).transpose();
    const Dataset data(x, Vector::Zero(10));
    const Dataset proj = pca_project(data, 1);
    const Matrix centered = data.inputs.rowwise() - data.inputs.colwise().mean();
    const double total = centered.squaredNorm();
    CHECK(proj.inputs.squaredNorm() / total == doctest::Approx(1.0).epsilon(1e-10));

    CHECK_THROWS_AS(pca_project(data, 0), std::invalid_argument);
    CHECK_THROWS_AS(pca_project(data, 5), std::invalid_argument);
}

TEST_CASE("pca sign convention is deterministic") {
    const Dataset data = gen_synthetic(15, 4, 11);
    const Matrix v1 = pca_loadings(data, 3);
    const Matrix v2 = pca_loadings(data, 3);
    CHECK(v1 == v2);
    for (Index c = 0; c < 3; ++c) {
        Index imax = 0;
        v1.col(c).cwiseAbs().maxCoeff(&imax);
        CHECK(v1(imax, c) > 0.0);
    }
}

TEST_CASE("trace files round-trip bit-exactly and re-serialize byte-stably") {
    TempDir dir;
    const std::string path = dir.file("trace.csv");

    write_trace(path, {});
    CHECK(slurp(path) == "iteration,objective,grad_norm,perturbed\n");

    Trace t;
    t.push_back({0, 0.1, 1.0 / 3.0, false});
    t.push_back({5, 1e-17, 123456.789012345678, true});
    t.push_back({12, -2.5e-300, 0.0, false});
    write_trace(path, t);
    const Trace back = read_trace(path);
    REQUIRE(back.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(back[i].iteration == t[i].iteration);
        CHECK(back[i].objective == t[i].objective);
        CHECK(back[i].grad_norm == t[i].grad_norm);
        CHECK(back[i].perturbed == t[i].perturbed);
    }
    const std::string bytes = slurp(path);
    write_trace(dir.file("again.csv"), back);
    CHECK(slurp(dir.file("again.csv")) == bytes);
}

TEST_CASE("trace parser reports the offending line") {
    TempDir dir;
    const std::string path = dir.file("bad.csv");
    std::ofstream(path) << "iteration,objective,grad_norm,perturbed\n0,0.5,1.0,0\n1,oops,1.0,0\n";
    try {
        read_trace(path);
        FAIL("expected format_error");
    } catch (const format_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    std::ofstream(dir.file("dec.csv"))
        << "iteration,objective,grad_norm,perturbed\n5,0.5,1.0,0\n5,0.4,1.0,0\n";
    CHECK_THROWS_AS(read_trace(dir.file("dec.csv")), format_error);

    std::ofstream(dir.file("hdr.csv")) << "iter,obj\n";
    CHECK_THROWS_AS(read_trace(dir.file("hdr.csv")), format_error);
}

TEST_CASE("format_double is shortest round-trip") {
    for (double x : {0.1, 1.0 / 3.0, 1e-308, 6.02214076e23, -0.0, 42.0}) {
        const std::string s = format_double(x);
        double back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == x);
    }
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("matrix records round-trip bit-exactly") {
    TempDir dir;
    Rng rng(13);
    Matrix w(3, 4);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.gaussian();
    const Matrix zero = Matrix::Zero(2, 2);
    write_matrices(dir.file("params.bin"), {w, zero});
    const auto back = read_matrices(dir.file("params.bin"));
    REQUIRE(back.size() == 2);
    CHECK(back[0] == w);
    CHECK(back[1] == zero);
}

TEST_CASE("matrix reader rejects corrupt files") {
    TempDir dir;
    write_matrices(dir.file("ok.bin"), {Matrix::Identity(3, 3)});
    const std::string bytes = slurp(dir.file("ok.bin"));

    std::ofstream(dir.file("trunc.bin"), std::ios::binary)
        << bytes.substr(0, bytes.size() - 5);
    CHECK_THROWS_AS(read_matrices(dir.file("trunc.bin")), format_error);

    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(dir.file("magic.bin"), std::ios::binary) << bad;
    CHECK_THROWS_AS(read_matrices(dir.file("magic.bin")), format_error);

    // dimension-count header mismatch
    std::string dims = bytes;
    dims[4] = 3;
    std::ofstream(dir.file("dims.bin"), std::ios::binary) << dims;
    try {
        read_matrices(dir.file("dims.bin"));
        FAIL("expected format_error");
    } catch (const format_error& e) {
        CHECK(std::string(e.what()).find("dimension") != std::string::npos);
    }
}

TEST_CASE("dataset files round-trip") {
    TempDir dir;
    const Dataset data = gen_synthetic(9, 4, 17);
    write_dataset(dir.file("data.bin"), data);
    const Dataset back = read_dataset(dir.file("data.bin"));
    CHECK(back.inputs == data.inputs);
    CHECK(back.labels == data.labels);
    CHECK(back.B == data.B);
}
