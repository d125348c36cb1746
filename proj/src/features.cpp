#include <memnet/features.hpp>

#include <memnet/linalg.hpp>

#include <cmath>

namespace memnet {

namespace {

// integer power by repeated multiplication; exact pass-through at p = 1
double ipow(double x, int p) {
    double out = 1.0;
    for (int i = 0; i < p; ++i) out *= x;
    return out;
}

double binom2(double k) { return k * (k + 1.0) / 2.0; }  // C(k+1, 2)

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double acc = 1.0;
    for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
    return acc;
}

}  // namespace

RandomFeatureLayer make_feature_layer(Index k, Index d, int p, std::uint64_t seed) {
    require(k >= 1 && d >= 1, "make_feature_layer: k and d must be >= 1");
    require(p >= 1, "make_feature_layer: degree p must be >= 1");
    Rng rng(seed);
    Matrix r(k, d);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < d; ++j) r(i, j) = rng.gaussian();
    }
    return {std::move(r), p, seed};
}

RandomFeatureLayer identity_feature_layer(Index d) {
    return {Matrix::Identity(d, d), 1, 0};
}

SmoothedDataset smooth_inputs(const Dataset& data, double v, std::uint64_t seed) {
    require(v >= 0.0, "smooth_inputs: variance v must be >= 0");
    SmoothedDataset out{data, v, seed, data.inputs};
    if (v > 0.0) {
        Rng rng(seed);
        const double sd = std::sqrt(v);
        for (Index j = 0; j < data.n(); ++j) {
            for (Index i = 0; i < data.d(); ++i) out.inputs_bar(j, i) += sd * rng.gaussian();
        }
    }
    return out;
}

Vector feature_map(const RandomFeatureLayer& layer, const Vector& x) {
    require(x.size() == layer.R.cols(), "feature_map: input dim mismatch");
    Vector z = layer.R * x;
    for (Index i = 0; i < z.size(); ++i) z[i] = ipow(z[i], layer.p);
    return z;
}

Dataset feature_dataset(const RandomFeatureLayer& layer, const SmoothedDataset& smoothed) {
    require(smoothed.inputs_bar.cols() == layer.R.cols(), "feature_dataset: dim mismatch");
    const Index n = smoothed.inputs_bar.rows(), k = layer.R.rows();
    Matrix z(n, k);
    for (Index j = 0; j < n; ++j) {
        z.row(j) = feature_map(layer, smoothed.inputs_bar.row(j).transpose()).transpose();
    }
    return Dataset(std::move(z), smoothed.base.labels);
}

Matrix z_tensor_matrix(const RandomFeatureLayer& layer, const SmoothedDataset& smoothed,
                       Index cap) {
    const Index k = layer.R.rows(), n = smoothed.inputs_bar.rows();
    if (k * k > cap) {
        throw resource_limit("z_tensor_matrix: k^2 = " + std::to_string(k * k) +
                             " exceeds cap " + std::to_string(cap));
    }
    Matrix z(k * k, n);
    for (Index j = 0; j < n; ++j) {
        const Vector zj = feature_map(layer, smoothed.inputs_bar.row(j).transpose());
        z.col(j) = linalg::tensor_power(zj, 2);
    }
    return z;
}

ZCertificate z_singular_certificate(const RandomFeatureLayer& layer,
                                    const SmoothedDataset& smoothed, double delta) {
    const double k = static_cast<double>(layer.R.rows());
    const double n = static_cast<double>(smoothed.inputs_bar.rows());
    const double d = static_cast<double>(layer.R.cols());
    const int p = layer.p;
    require(delta > 0.0 && delta < 1.0, "z_singular_certificate: delta must be in (0,1)");
    if (binom2(k) <= n) {
        throw std::invalid_argument("z_singular_certificate: hypothesis C(k+1,2) > n fails (" +
                                    std::to_string(static_cast<long>(binom2(k))) +
                                    " <= " + std::to_string(static_cast<long>(n)) + ")");
    }

    ZCertificate cert;
    cert.sigma_min = linalg::smallest_singular(z_tensor_matrix(layer, smoothed));
    cert.positive = cert.sigma_min > 0.0;

    const double dim_2p = binom(static_cast<int>(d) + 2 * p - 1, 2 * p);  // D_d^{2p}
    const double dim_p = binom(static_cast<int>(d) + p - 1, p);           // D_d^p
    const double bracket = (dim_2p - k * dim_p * binom(2 * p, p)) * (binom2(k) - n);
    if (bracket <= 0.0) {
        // the asymptotic constant is vacuous at this scale
        cert.bound_vacuous = true;
        cert.theory_bound = 0.0;
    } else {
        const double f4p = factorial(4 * p);
        cert.theory_bound = std::pow(bracket / (f4p * f4p * f4p), 0.25) * ipow(smoothed.v, p) *
                            std::pow(delta, 4.0 * p) /
                            (std::pow(n, 2.0 * p + 0.5) * std::pow(k, 4.0 * p));
    }
    return cert;
}

FeatureNormReport feature_norm_bound(const RandomFeatureLayer& layer,
                                     const SmoothedDataset& smoothed, double delta) {
    require(delta > 0.0 && delta < 1.0, "feature_norm_bound: delta must be in (0,1)");
    const double k = static_cast<double>(layer.R.rows());
    const double n = static_cast<double>(smoothed.inputs_bar.rows());
    const double d = static_cast<double>(layer.R.cols());
    const double b = smoothed.base.B;

    FeatureNormReport rep;
    for (Index j = 0; j < smoothed.inputs_bar.rows(); ++j) {
        const double nj = feature_map(layer, smoothed.inputs_bar.row(j).transpose()).norm();
        rep.max_norm = std::max(rep.max_norm, nj);
    }
    const double logterm = std::log((k + n) * d / std::sqrt(delta));
    rep.bound = std::sqrt(k) *
                ipow(2.0 * (b + 2.0 * std::sqrt(smoothed.v * d * logterm)) *
                         std::sqrt(d * logterm),
                     layer.p);
    rep.violated = rep.max_norm > rep.bound;
    return rep;
}

ThreeLayerResult train_three_layer(const Dataset& data, int p, Index k, double eps_target,
                                   double v, const ThreeLayerSeeds& seeds,
                                   const TrainOptions& opts, bool identity_features) {
    require(data.B <= 1.0 + 1e-12, "train_three_layer: requires ||x_j|| <= 1");
    require(data.Y <= 1.0 + 1e-12, "train_three_layer: requires |y_j| <= 1");
    if (k <= 0) {
        k = 2 * static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(data.n()))));
    }

    ThreeLayerResult out;
    out.layer = identity_features ? identity_feature_layer(data.d())
                                  : make_feature_layer(k, data.d(), p, seeds.features);
    out.smoothed = smooth_inputs(data, v, seeds.noise);
    out.feature_data = feature_dataset(out.layer, out.smoothed);
    out.certificate = z_singular_certificate(out.layer, out.smoothed, opts.delta);
    if (!out.certificate.positive) {
        throw degenerate_instance(
            "train_three_layer: sigma_min(Z) = 0; increase the smoothing variance v or pick "
            "a different feature/noise seed");
    }

    const Index r = 2 * out.layer.R.rows() + 2;
    out.train = train_two_layer(out.feature_data, r, eps_target, opts);
    return out;
}

}  // namespace memnet
