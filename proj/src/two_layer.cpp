#include <memnet/two_layer.hpp>

namespace memnet {

namespace {

void check_dims(const TwoLayerParams& params, const Dataset& data) {
    require(data.n() >= 1, "two_layer: dataset has no samples");
    require(params.d() == data.d(), "two_layer: W rows (" + std::to_string(params.d()) +
                                        ") != input dim (" + std::to_string(data.d()) + ")");
}

}  // namespace

double forward(const TwoLayerParams& params, const Vector& x) {
    require(x.size() == params.d(), "forward: input dim mismatch");
    const Vector p = params.W.transpose() * x;
    KahanSum acc;
    for (Index i = 0; i < p.size(); ++i) {
        acc.add(params.sign(i) * p[i] * p[i]);
    }
    return acc.value();
}

Vector residuals(const TwoLayerParams& params, const Dataset& data) {
    check_dims(params, data);
    const Matrix p = data.inputs * params.W;  // n x r
    const Index n = data.n(), r = params.r();
    Vector delta(n);
    for (Index j = 0; j < n; ++j) {
        KahanSum acc;
        for (Index i = 0; i < r; ++i) {
            acc.add(params.sign(i) * p(j, i) * p(j, i));
        }
        delta[j] = acc.value() - data.labels[j];
    }
    return delta;
}

double loss_f(const TwoLayerParams& params, const Dataset& data) {
    const Vector delta = residuals(params, data);
    KahanSum acc;
    for (Index j = 0; j < delta.size(); ++j) acc.add(delta[j] * delta[j]);
    return acc.value() / (4.0 * static_cast<double>(data.n()));
}

Matrix residual_matrix(const TwoLayerParams& params, const Dataset& data) {
    check_dims(params, data);
    const Vector delta = residuals(params, data);
    const Index d = data.d(), n = data.n();
    // Kahan-compensated accumulation of the lower triangle, mirrored at the
    // end: stable under sample reordering and symmetric by construction
    Matrix m(d, d);
    for (Index i = 0; i < d; ++i) {
        for (Index k = 0; k <= i; ++k) {
            KahanSum acc;
            for (Index j = 0; j < n; ++j) {
                acc.add(delta[j] * data.inputs(j, i) * data.inputs(j, k));
            }
            m(i, k) = acc.value() / static_cast<double>(n);
            m(k, i) = m(i, k);
        }
    }
    return m;
}

Matrix grad_f(const TwoLayerParams& params, const Dataset& data) {
    check_dims(params, data);
    const Index n = data.n();
    const Matrix p = data.inputs * params.W;  // n x r
    Vector delta(n);
    for (Index j = 0; j < n; ++j) {
        KahanSum acc;
        for (Index i = 0; i < params.r(); ++i) acc.add(params.sign(i) * p(j, i) * p(j, i));
        delta[j] = acc.value() - data.labels[j];
    }
    Matrix grad = data.inputs.transpose() * (delta.asDiagonal() * p) / static_cast<double>(n);
    for (Index i = 0; i < params.r(); ++i) grad.col(i) *= params.sign(i);
    return grad;
}

double hessian_quadratic(const TwoLayerParams& params, const Dataset& data, const Matrix& z) {
    check_dims(params, data);
    require(z.rows() == params.d() && z.cols() == params.r(),
            "hessian_quadratic: Z shape must match W");
    const Index n = data.n(), r = params.r();
    const Matrix m = residual_matrix(params, data);

    KahanSum first;
    for (Index k = 0; k < r; ++k) {
        first.add(params.sign(k) * z.col(k).dot(m * z.col(k)));
    }

    const Matrix pw = data.inputs * params.W;  // (x_j^T w_i)
    const Matrix pz = data.inputs * z;         // (x_j^T z_i)
    KahanSum second;
    for (Index j = 0; j < n; ++j) {
        KahanSum inner;
        for (Index i = 0; i < r; ++i) {
            inner.add(params.sign(i) * pw(j, i) * pz(j, i));
        }
        const double s = inner.value();
        second.add(s * s);
    }
    return first.value() + 2.0 * second.value() / static_cast<double>(n);
}

Matrix hessian_full(const TwoLayerParams& params, const Dataset& data, Index cap) {
    check_dims(params, data);
    const Index d = data.d(), r = params.r(), n = data.n();
    if (d * r > cap) {
        throw resource_limit("hessian_full: d*r = " + std::to_string(d * r) +
                             " exceeds cap " + std::to_string(cap));
    }
    const Matrix m = residual_matrix(params, data);
    const Matrix pw = data.inputs * params.W;
    Matrix h = Matrix::Zero(d * r, d * r);
    for (Index j = 0; j < n; ++j) {
        Vector u(r);
        for (Index i = 0; i < r; ++i) u[i] = params.sign(i) * pw(j, i);
        const Matrix xx = data.inputs.row(j).transpose() * data.inputs.row(j);
        for (Index k1 = 0; k1 < r; ++k1) {
            for (Index k2 = 0; k2 < r; ++k2) {
                h.block(k1 * d, k2 * d, d, d) += (2.0 / n) * u[k1] * u[k2] * xx;
            }
        }
    }
    for (Index k = 0; k < r; ++k) {
        h.block(k * d, k * d, d, d) += params.sign(k) * m;
    }
    return h;
}

double loss_g(const TwoLayerParams& params, const Dataset& data, double gamma) {
    require(gamma >= 0.0, "loss_g: gamma must be nonnegative");
    return loss_f(params, data) + 0.5 * gamma * params.W.squaredNorm();
}

Matrix grad_g(const TwoLayerParams& params, const Dataset& data, double gamma) {
    require(gamma >= 0.0, "grad_g: gamma must be nonnegative");
    return grad_f(params, data) + gamma * params.W;
}

double hessian_g_quadratic(const TwoLayerParams& params, const Dataset& data, double gamma,
                           const Matrix& z) {
    require(gamma >= 0.0, "hessian_g_quadratic: gamma must be nonnegative");
    return hessian_quadratic(params, data, z) + gamma * z.squaredNorm();
}

TwoLayerObjective::TwoLayerObjective(const Dataset& data, Index r, double gamma)
    : data_(data), r_(r), gamma_(gamma) {
    require(r >= 2 && r % 2 == 0, "TwoLayerObjective: width r must be even and >= 2");
    require(gamma >= 0.0, "TwoLayerObjective: gamma must be nonnegative");
    signs_.resize(r);
    for (Index i = 0; i < r; ++i) signs_[i] = i < r / 2 ? 1.0 : -1.0;
    preact_.resize(data_.n(), r_);
}

const TwoLayerObjective::Eval& TwoLayerObjective::eval(const Vector& flat_w) const {
    require(flat_w.size() == dim(), "TwoLayerObjective: point has wrong dimension");
    if (cache_.valid && cache_.point.size() == flat_w.size() && cache_.point == flat_w) {
        return cache_;
    }
    const Index n = data_.n(), d = data_.d();
    Eigen::Map<const Matrix> w(flat_w.data(), d, r_);
    preact_.noalias() = data_.inputs * w;

    Vector delta(n);
    KahanSum loss_acc;
    for (Index j = 0; j < n; ++j) {
        KahanSum acc;
        for (Index i = 0; i < r_; ++i) {
            acc.add(signs_[i] * preact_(j, i) * preact_(j, i));
        }
        delta[j] = acc.value() - data_.labels[j];
        loss_acc.add(delta[j] * delta[j]);
    }
    cache_.f = loss_acc.value() / (4.0 * static_cast<double>(n));
    cache_.g = cache_.f + 0.5 * gamma_ * flat_w.squaredNorm();

    preact_.array().colwise() *= delta.array();  // now holds delta_j * (x_j^T w_i)
    Matrix grad(d, r_);
    grad.noalias() = data_.inputs.transpose() * preact_;
    grad /= static_cast<double>(n);
    for (Index i = 0; i < r_; ++i) grad.col(i) *= signs_[i];
    grad.noalias() += gamma_ * w;

    cache_.grad = Eigen::Map<const Vector>(grad.data(), grad.size());
    cache_.point = flat_w;
    cache_.valid = true;
    return cache_;
}

double TwoLayerObjective::objective(const Vector& flat_w) const { return eval(flat_w).g; }

Vector TwoLayerObjective::gradient(const Vector& flat_w) const { return eval(flat_w).grad; }

double TwoLayerObjective::loss(const Vector& flat_w) const { return eval(flat_w).f; }

}  // namespace memnet
