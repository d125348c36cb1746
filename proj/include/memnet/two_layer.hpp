#pragma once

#include <memnet/dataset.hpp>

namespace memnet {

// Two-layer quadratic-activation network, empirical risk
//   f(W) = 1/(4n) * sum_j (sum_i a_i (w_i^T x_j)^2 - y_j)^2
// and the regularized objective g(W) = f(W) + gamma/2 ||W||_F^2.

// network output sum_i a_i (w_i^T x)^2
double forward(const TwoLayerParams& params, const Vector& x);

// delta_j = prediction - y_j for every sample
Vector residuals(const TwoLayerParams& params, const Dataset& data);

double loss_f(const TwoLayerParams& params, const Dataset& data);

// M(W) = 1/n * sum_j delta_j x_j x_j^T, symmetric d x d
Matrix residual_matrix(const TwoLayerParams& params, const Dataset& data);

// column k of the gradient is a_k/n * sum_j delta_j x_j x_j^T w_k
Matrix grad_f(const TwoLayerParams& params, const Dataset& data);

// Hessian quadratic form evaluated without assembling the (dr)x(dr) matrix:
//   sum_k a_k z_k^T M z_k + 2/n * sum_j (sum_i a_i w_i^T x_j x_j^T z_i)^2
double hessian_quadratic(const TwoLayerParams& params, const Dataset& data, const Matrix& z);

// Full Hessian in the flattening order w_1..w_r; block (k1,k2) is
// 2 a_{k1} a_{k2}/n * sum_j (x_j^T w_{k1})(x_j^T w_{k2}) x_j x_j^T, plus
// a_k M on the diagonal blocks. Refuses when d*r exceeds the cap.
Matrix hessian_full(const TwoLayerParams& params, const Dataset& data, Index cap = 20000);

double loss_g(const TwoLayerParams& params, const Dataset& data, double gamma);
Matrix grad_g(const TwoLayerParams& params, const Dataset& data, double gamma);

// quadratic form of the Hessian of g: adds gamma * ||Z||_F^2
double hessian_g_quadratic(const TwoLayerParams& params, const Dataset& data, double gamma,
                           const Matrix& z);

// One-pass evaluation used by the optimizer hot loop: shares the n x r
// pre-activation matrix between loss and gradient so a PGD step costs two
// GEMMs. Results for the last requested point are cached, so asking for
// objective and gradient at the same W does not recompute.
class TwoLayerObjective {
  public:
    TwoLayerObjective(const Dataset& data, Index r, double gamma);

    Index dim() const { return data_.d() * r_; }
    double gamma() const { return gamma_; }
    const Dataset& data() const { return data_; }
    Index width() const { return r_; }

    // g(W) = f(W) + gamma/2 ||W||_F^2 at the flattened point
    double objective(const Vector& flat_w) const;
    // gradient of g, flattened
    Vector gradient(const Vector& flat_w) const;
    // f(W) at the flattened point (from the shared evaluation)
    double loss(const Vector& flat_w) const;

  private:
    struct Eval {
        Vector point;
        double f = 0.0;
        double g = 0.0;
        Vector grad;
        bool valid = false;
    };
    const Eval& eval(const Vector& flat_w) const;

    Dataset data_;
    Index r_;
    double gamma_;
    Vector signs_;
    mutable Eval cache_;
    mutable Matrix preact_;  // n x r scratch
};

}  // namespace memnet
