#pragma once

#include <memnet/common.hpp>

namespace memnet {

// Training set for the quadratic-activation layer. Row j of inputs is x_j^T.
// The norm bounds B = max_j ||x_j|| and Y = max_j |y_j| are always recomputed
// from the stored values, never trusted from files.
struct Dataset {
    Matrix inputs;  // n x d
    Vector labels;  // n
    double B = 0.0;
    double Y = 0.0;

    Dataset() = default;
    // n = 0 is tolerated as a vacuous container (an empty IDX file parses to
    // one); every training/loss entry point requires n >= 1
    Dataset(Matrix x, Vector y) : inputs(std::move(x)), labels(std::move(y)) {
        require(inputs.cols() >= 1, "Dataset: needs d >= 1");
        require(labels.size() == inputs.rows(), "Dataset: label count != sample count");
        require(inputs.allFinite() && labels.allFinite(), "Dataset: non-finite values");
        recompute_bounds();
    }

    Index n() const { return inputs.rows(); }
    Index d() const { return inputs.cols(); }

    void recompute_bounds() {
        B = n() > 0 ? inputs.rowwise().norm().maxCoeff() : 0.0;
        Y = n() > 0 ? labels.cwiseAbs().maxCoeff() : 0.0;
    }
};

// Weights of the trainable quadratic layer plus the frozen output signs:
// a_i = +1 for the first r/2 units and -1 for the rest. r must be even.
struct TwoLayerParams {
    Matrix W;  // d x r

    TwoLayerParams() = default;
    explicit TwoLayerParams(Matrix w) : W(std::move(w)) {
        require(W.cols() >= 2 && W.cols() % 2 == 0, "TwoLayerParams: width r must be even and >= 2");
        require(W.rows() >= 1, "TwoLayerParams: d must be >= 1");
    }

    static TwoLayerParams zero(Index d, Index r) {
        return TwoLayerParams(Matrix::Zero(d, r));
    }

    Index d() const { return W.rows(); }
    Index r() const { return W.cols(); }

    double sign(Index i) const { return i < W.cols() / 2 ? 1.0 : -1.0; }

    Vector sign_vector() const {
        Vector a(W.cols());
        for (Index i = 0; i < W.cols(); ++i) a[i] = sign(i);
        return a;
    }

    // parameter vector = columns w_1..w_r concatenated
    Vector flatten() const { return Eigen::Map<const Vector>(W.data(), W.size()); }

    static TwoLayerParams unflatten(const Vector& v, Index d, Index r) {
        require(v.size() == d * r, "TwoLayerParams: flat size mismatch");
        Matrix w = Eigen::Map<const Matrix>(v.data(), d, r);
        return TwoLayerParams(std::move(w));
    }
};

}  // namespace memnet
