#include <memnet/linalg.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace memnet::linalg {

namespace {

void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw std::invalid_argument(std::string(what) + ": non-finite entries");
    }
}

Eigen::VectorXd singular_values(const Matrix& m) {
    // Jacobi is the accurate choice at the sizes we care about; divide &
    // conquer takes over for larger blocks.
    if (std::min(m.rows(), m.cols()) <= 16) {
        return Eigen::JacobiSVD<Matrix>(m).singularValues();
    }
    return Eigen::BDCSVD<Matrix>(m).singularValues();
}

std::string tuple_str(const std::vector<int>& idx) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < idx.size(); ++i) os << (i ? "," : "") << idx[i] + 1;
    os << ")";
    return os.str();
}

}  // namespace

Vector tensor_power(const Vector& x, int p) {
    require(p >= 1, "tensor_power: order p must be >= 1");
    require(x.size() >= 1, "tensor_power: empty vector");
    require(x.allFinite(), "tensor_power: non-finite entries");
    const Index d = x.size();
    double cells = std::pow(static_cast<double>(d), p);
    require(cells <= 1e8, "tensor_power: d^p too large");
    Vector out = x;
    for (int q = 1; q < p; ++q) {
        Vector next(out.size() * d);
        for (Index i = 0; i < out.size(); ++i) {
            next.segment(i * d, d) = out[i] * x;
        }
        out.swap(next);
    }
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    require(a.size() > 0 && b.size() > 0, "kron: empty operand");
    const double cells = static_cast<double>(a.rows()) * b.rows() *
                         static_cast<double>(a.cols()) * b.cols();
    require(cells <= 5e8, "kron: result too large");
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Index sym_dim(int d, int p) {
    require(d >= 1 && p >= 1, "sym_dim: d and p must be >= 1");
    // C(p+d-1, p)
    long double acc = 1.0L;
    for (int i = 1; i <= p; ++i) {
        acc = acc * (d - 1 + i) / i;
    }
    require(acc <= 1e8L, "sym_dim: dimension too large");
    return static_cast<Index>(std::llroundl(acc));
}

std::vector<std::vector<int>> sym_classes(int d, int p) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(p, 0);
    // lexicographic enumeration of non-decreasing tuples
    while (true) {
        out.push_back(cur);
        int k = p - 1;
        while (k >= 0 && cur[k] == d - 1) --k;
        if (k < 0) break;
        const int v = cur[k] + 1;
        for (int j = k; j < p; ++j) cur[j] = v;
    }
    return out;
}

namespace {

Index flat_index(const std::vector<int>& idx, int d) {
    Index f = 0;
    for (int v : idx) f = f * d + v;
    return f;
}

}  // namespace

SymTensorRV reduce_symmetric(const Vector& full, int d, int p, double tol) {
    require(d >= 1 && p >= 1, "reduce_symmetric: d and p must be >= 1");
    const Index dp = static_cast<Index>(std::llround(std::pow(double(d), p)));
    require(full.size() == dp, "reduce_symmetric: tensor length is not d^p");
    require(full.allFinite(), "reduce_symmetric: non-finite entries");

    // Every entry must agree with the entry at its sorted index tuple; that
    // single comparison per entry covers all permutation pairs.
    std::vector<int> idx(p, 0), sorted(p);
    for (Index f = 0; f < dp; ++f) {
        sorted = idx;
        std::sort(sorted.begin(), sorted.end());
        const Index fs = flat_index(sorted, d);
        if (std::abs(full[f] - full[fs]) > tol) {
            throw std::domain_error("reduce_symmetric: input not symmetric, entries " +
                                    tuple_str(idx) + " and " + tuple_str(sorted) +
                                    " differ by " + std::to_string(std::abs(full[f] - full[fs])));
        }
        for (int k = p - 1; k >= 0; --k) {
            if (++idx[k] < d) break;
            idx[k] = 0;
        }
    }

    const auto classes = sym_classes(d, p);
    SymTensorRV out;
    out.dim = d;
    out.order = p;
    out.coeffs.resize(static_cast<Index>(classes.size()));
    for (size_t c = 0; c < classes.size(); ++c) {
        out.coeffs[static_cast<Index>(c)] = full[flat_index(classes[c], d)];
    }
    return out;
}

Vector expand_symmetric(const SymTensorRV& t) {
    const int d = t.dim, p = t.order;
    const auto classes = sym_classes(d, p);
    require(t.coeffs.size() == static_cast<Index>(classes.size()),
            "expand_symmetric: coefficient count mismatch");
    std::unordered_map<Index, double> by_class;
    by_class.reserve(classes.size());
    for (size_t c = 0; c < classes.size(); ++c) {
        by_class[flat_index(classes[c], d)] = t.coeffs[static_cast<Index>(c)];
    }
    const Index dp = static_cast<Index>(std::llround(std::pow(double(d), p)));
    Vector full(dp);
    std::vector<int> idx(p, 0), sorted(p);
    for (Index f = 0; f < dp; ++f) {
        sorted = idx;
        std::sort(sorted.begin(), sorted.end());
        full[f] = by_class.at(flat_index(sorted, d));
        for (int k = p - 1; k >= 0; --k) {
            if (++idx[k] < d) break;
            idx[k] = 0;
        }
    }
    return full;
}

double smallest_singular(const Matrix& m) {
    require(m.size() > 0, "smallest_singular: empty matrix");
    check_finite(m, "smallest_singular");
    const auto sv = singular_values(m);
    return sv[sv.size() - 1];
}

double leave_one_out(const Matrix& m) {
    const Index rows = m.rows(), n = m.cols();
    require(n >= 1, "leave_one_out: empty matrix");
    require(rows >= n, "leave_one_out: requires rows >= cols");
    check_finite(m, "leave_one_out");
    if (n == 1) return m.col(0).norm();

    double best = std::numeric_limits<double>::infinity();
    Matrix rest(rows, n - 1);
    for (Index i = 0; i < n; ++i) {
        Index c = 0;
        for (Index j = 0; j < n; ++j) {
            if (j != i) rest.col(c++) = m.col(j);
        }
        // QR least squares; rank deficiency just means the projection uses
        // the computed column space, which is what the infimum asks for
        Eigen::ColPivHouseholderQR<Matrix> qr(rest);
        const Vector sol = qr.solve(m.col(i));
        const double res = (m.col(i) - rest * sol).norm();
        best = std::min(best, res);
    }
    return best;
}

EigPair min_eigenvalue_sym(const Matrix& h, double sym_tol) {
    require(h.rows() == h.cols() && h.size() > 0, "min_eigenvalue_sym: matrix must be square");
    check_finite(h, "min_eigenvalue_sym");
    const double asym = (h - h.transpose()).cwiseAbs().maxCoeff();
    require(asym <= sym_tol, "min_eigenvalue_sym: matrix asymmetric beyond tolerance (" +
                                 std::to_string(asym) + ")");
    const Matrix s = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
    EigPair out;
    out.value = solver.eigenvalues()[0];
    out.vector = solver.eigenvectors().col(0);
    // sign convention: largest-magnitude component positive
    Index imax = 0;
    out.vector.cwiseAbs().maxCoeff(&imax);
    if (out.vector[imax] < 0) out.vector = -out.vector;
    return out;
}

double spectral_norm_sym(const Matrix& m, double sym_tol) {
    require(m.rows() == m.cols() && m.size() > 0, "spectral_norm_sym: matrix must be square");
    check_finite(m, "spectral_norm_sym");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    require(asym <= sym_tol, "spectral_norm_sym: matrix asymmetric beyond tolerance");
    const Matrix s = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    return std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
}

}  // namespace memnet::linalg
