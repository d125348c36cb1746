#include <memnet/data_io.hpp>

#include <Eigen/SVD>

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace memnet {

Dataset gen_synthetic(Index n, Index d, std::uint64_t seed) {
    require(n >= 1 && d >= 1, "gen_synthetic: n and d must be >= 1");
    Rng rng(seed);
    Matrix x(n, d);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < d; ++i) x(j, i) = rng.uniform_pm1();
    }
    Vector y(n);
    for (Index j = 0; j < n; ++j) y[j] = rng.uniform_pm1();
    for (Index j = 0; j < n; ++j) {
        const double norm = x.row(j).norm();
        require(norm > 0.0, "gen_synthetic: zero row drawn (vanishingly unlikely)");
        x.row(j) /= norm;
    }
    return Dataset(std::move(x), std::move(y));
}

Dataset normalize_rows(const Dataset& data) {
    Matrix x = data.inputs;
    for (Index j = 0; j < x.rows(); ++j) {
        const double norm = x.row(j).norm();
        require(norm > 0.0, "normalize_rows: zero input row " + std::to_string(j));
        x.row(j) /= norm;
    }
    return Dataset(std::move(x), data.labels);
}

namespace {

std::uint32_t read_u32_be(std::istream& in, std::size_t& offset, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) {
        throw format_error(path + ": truncated at byte offset " + std::to_string(offset));
    }
    offset += 4;
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t count, std::size_t& offset,
                                        const std::string& path) {
    std::vector<unsigned char> bytes(count);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count) {
        throw format_error(path + ": truncated payload at byte offset " +
                           std::to_string(offset + static_cast<std::size_t>(in.gcount())));
    }
    offset += count;
    return bytes;
}

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw format_error(images_path + ": cannot open");
    std::size_t off = 0;
    const std::uint32_t magic_i = read_u32_be(img, off, images_path);
    if (magic_i != kIdxImages) {
        std::ostringstream os;
        os << images_path << ": bad magic 0x" << std::hex << magic_i
           << " at byte offset 0 (expected images magic 0x803)";
        throw format_error(os.str());
    }
    const std::uint32_t n = read_u32_be(img, off, images_path);
    const std::uint32_t rows = read_u32_be(img, off, images_path);
    const std::uint32_t cols = read_u32_be(img, off, images_path);
    const std::size_t pix = std::size_t(n) * rows * cols;
    const auto pixels = read_payload(img, pix, off, images_path);
    img.peek();
    if (!img.eof()) {
        throw format_error(images_path + ": trailing bytes after payload at offset " +
                           std::to_string(off));
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw format_error(labels_path + ": cannot open");
    std::size_t loff = 0;
    const std::uint32_t magic_l = read_u32_be(lab, loff, labels_path);
    if (magic_l != kIdxLabels) {
        std::ostringstream os;
        os << labels_path << ": bad magic 0x" << std::hex << magic_l
           << " at byte offset 0 (expected labels magic 0x801)";
        throw format_error(os.str());
    }
    const std::uint32_t nl = read_u32_be(lab, loff, labels_path);
    if (nl != n) {
        throw format_error(labels_path + ": label count " + std::to_string(nl) +
                           " != image count " + std::to_string(n));
    }
    const auto labels = read_payload(lab, nl, loff, labels_path);

    const Index dim = static_cast<Index>(rows) * static_cast<Index>(cols);
    Matrix x(static_cast<Index>(n), dim);
    for (Index j = 0; j < static_cast<Index>(n); ++j) {
        for (Index i = 0; i < dim; ++i) {
            x(j, i) = pixels[std::size_t(j) * std::size_t(dim) + std::size_t(i)] / 255.0;
        }
    }
    Vector y(static_cast<Index>(n));
    for (Index j = 0; j < static_cast<Index>(n); ++j) y[j] = static_cast<double>(labels[j]);
    return Dataset(std::move(x), std::move(y));
}

Matrix pca_loadings(const Dataset& data, Index k_dims) {
    require(k_dims >= 1 && k_dims <= data.d(),
            "pca_project: k_dims must be between 1 and the input dimension");
    const Matrix centered = data.inputs.rowwise() - data.inputs.colwise().mean();
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
    Matrix v = svd.matrixV().leftCols(k_dims);
    for (Index c = 0; c < v.cols(); ++c) {
        Index imax = 0;
        v.col(c).cwiseAbs().maxCoeff(&imax);
        if (v(imax, c) < 0) v.col(c) = -v.col(c);
    }
    return v;
}

Dataset pca_project(const Dataset& data, Index k_dims) {
    const Matrix v = pca_loadings(data, k_dims);
    const Matrix centered = data.inputs.rowwise() - data.inputs.colwise().mean();
    return Dataset(centered * v, data.labels);
}

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

void write_trace(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw format_error(path + ": cannot open for writing");
    out << "iteration,objective,grad_norm,perturbed\n";
    for (const auto& r : trace) {
        out << r.iteration << ',' << format_double(r.objective) << ','
            << format_double(r.grad_norm) << ',' << (r.perturbed ? 1 : 0) << '\n';
    }
    if (!out) throw format_error(path + ": write failed");
}

namespace {

double parse_double_field(const std::string& field, const std::string& path, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw format_error(path + ": line " + std::to_string(line) + ": bad number '" + field +
                           "'");
    }
    return v;
}

}  // namespace

Trace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error(path + ": cannot open");
    std::string line;
    if (!std::getline(in, line) || line != "iteration,objective,grad_norm,perturbed") {
        throw format_error(path + ": line 1: bad header");
    }
    Trace trace;
    std::size_t lineno = 1;
    long prev_iter = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            throw format_error(path + ": line " + std::to_string(lineno) + ": empty row");
        }
        std::array<std::string, 4> fields;
        std::size_t start = 0, fi = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (fi >= 4) {
                    throw format_error(path + ": line " + std::to_string(lineno) +
                                       ": too many fields");
                }
                fields[fi++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (fi != 4) {
            throw format_error(path + ": line " + std::to_string(lineno) + ": expected 4 fields");
        }
        TraceRecord rec;
        rec.iteration = static_cast<long>(parse_double_field(fields[0], path, lineno));
        rec.objective = parse_double_field(fields[1], path, lineno);
        rec.grad_norm = parse_double_field(fields[2], path, lineno);
        if (fields[3] != "0" && fields[3] != "1") {
            throw format_error(path + ": line " + std::to_string(lineno) +
                               ": perturbed flag must be 0 or 1");
        }
        rec.perturbed = fields[3] == "1";
        if (rec.iteration <= prev_iter) {
            throw format_error(path + ": line " + std::to_string(lineno) +
                               ": iterations not strictly increasing");
        }
        prev_iter = rec.iteration;
        trace.push_back(rec);
    }
    return trace;
}

namespace {

constexpr char kMatrixMagic[4] = {'M', 'N', 'W', '1'};

void write_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v & 0xff),
                            static_cast<unsigned char>((v >> 8) & 0xff),
                            static_cast<unsigned char>((v >> 16) & 0xff),
                            static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32_le(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (in.gcount() != 4) throw format_error(path + ": truncated header");
    return std::uint32_t(buf[0]) | (std::uint32_t(buf[1]) << 8) | (std::uint32_t(buf[2]) << 16) |
           (std::uint32_t(buf[3]) << 24);
}

}  // namespace

void write_matrices(const std::string& path, const std::vector<Matrix>& matrices) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error(path + ": cannot open for writing");
    for (const auto& m : matrices) {
        out.write(kMatrixMagic, 4);
        write_u32_le(out, 2);
        write_u32_le(out, static_cast<std::uint32_t>(m.rows()));
        write_u32_le(out, static_cast<std::uint32_t>(m.cols()));
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                const double v = m(i, j);
                out.write(reinterpret_cast<const char*>(&v), sizeof(double));
            }
        }
    }
    if (!out) throw format_error(path + ": write failed");
}

std::vector<Matrix> read_matrices(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error(path + ": cannot open");
    std::vector<Matrix> out;
    while (true) {
        char magic[4];
        in.read(magic, 4);
        if (in.gcount() == 0 && in.eof()) break;
        if (in.gcount() != 4 || std::memcmp(magic, kMatrixMagic, 4) != 0) {
            throw format_error(path + ": bad record magic");
        }
        const std::uint32_t ndims = read_u32_le(in, path);
        if (ndims != 2) {
            throw format_error(path + ": dimension-header mismatch: expected 2 dims, got " +
                               std::to_string(ndims));
        }
        const std::uint32_t rows = read_u32_le(in, path);
        const std::uint32_t cols = read_u32_le(in, path);
        Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                double v = 0.0;
                in.read(reinterpret_cast<char*>(&v), sizeof(double));
                if (in.gcount() != sizeof(double)) {
                    throw format_error(path + ": truncated payload in record " +
                                       std::to_string(out.size()));
                }
                m(i, j) = v;
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

void write_dataset(const std::string& path, const Dataset& data) {
    write_matrices(path, {data.inputs, Matrix(data.labels)});
}

Dataset read_dataset(const std::string& path) {
    const auto ms = read_matrices(path);
    if (ms.size() != 2 || ms[1].cols() != 1) {
        throw format_error(path + ": expected an inputs record and a labels column record");
    }
    return Dataset(ms[0], Vector(ms[1].col(0)));
}

}  // namespace memnet
