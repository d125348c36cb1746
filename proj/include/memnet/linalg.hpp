#pragma once

#include <memnet/common.hpp>

#include <utility>
#include <vector>

namespace memnet::linalg {

// x^{(x)p}: flattened p-fold tensor power of x, length d^p. Entry at flat
// index (i_1,...,i_p) (i_1 slowest) is the product x[i_1]*...*x[i_p].
Vector tensor_power(const Vector& x, int p);

// Kronecker product, block structure (A(x)B)[(i1,i2),(j1,j2)] = A(i1,j1)*B(i2,j2).
Matrix kron(const Matrix& a, const Matrix& b);

// Symmetric tensor in reduced vectorized form: one coefficient per monomial
// symmetry class. Classes are enumerated by sorted index tuples
// (j_1 <= ... <= j_p) in lexicographic order, so for d=2, p=2 the order is
// (1,1), (1,2), (2,2), i.e. multiplicities (2,0), (1,1), (0,2).
struct SymTensorRV {
    int dim = 0;    // d
    int order = 0;  // p
    Vector coeffs;  // length C(p+d-1, p)

    double rv_norm() const { return coeffs.norm(); }
};

// number of symmetry classes C(p+d-1, p); throws on overflow
Index sym_dim(int d, int p);

// Sorted representative tuples for every symmetry class of (d, p), in the
// enumeration order used by SymTensorRV::coeffs.
std::vector<std::vector<int>> sym_classes(int d, int p);

// Reduce a full d^p tensor claimed symmetric to its class coefficients.
// Every entry is compared to its class representative; a mismatch beyond
// `tol` raises domain_error naming the first violating index pair.
SymTensorRV reduce_symmetric(const Vector& full, int d, int p, double tol = 1e-9);

// Inverse of reduce_symmetric: each entry is its class coefficient.
Vector expand_symmetric(const SymTensorRV& t);

// smallest singular value via dense SVD (min over min(rows, cols) values)
double smallest_singular(const Matrix& m);

// Leave-one-out distance over columns (m >= n required): the minimum over i
// of the least-squares residual of column i against the span of the others.
// Satisfies l / sqrt(n) <= sigma_min <= l.
double leave_one_out(const Matrix& m);

struct EigPair {
    double value = 0.0;
    Vector vector;
};

// smallest eigenvalue + unit eigenvector of a symmetric matrix; input is
// checked symmetric within sym_tol then solved as (H + H^T)/2
EigPair min_eigenvalue_sym(const Matrix& h, double sym_tol = 1e-9);

// max_i |lambda_i| of a symmetric matrix
double spectral_norm_sym(const Matrix& m, double sym_tol = 1e-9);

}  // namespace memnet::linalg
