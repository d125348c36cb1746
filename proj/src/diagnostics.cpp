#include <memnet/diagnostics.hpp>

#include <memnet/linalg.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace memnet {

XTensorResult x_tensor_matrix(const Dataset& data, int q, Index cap) {
    require(q >= 1, "x_tensor_matrix: order q must be >= 1");
    const Index d = data.d(), n = data.n();
    const double rows = std::pow(static_cast<double>(d), q);
    if (rows > static_cast<double>(cap)) {
        throw resource_limit("x_tensor_matrix: d^q exceeds cap");
    }
    XTensorResult out;
    out.x.resize(static_cast<Index>(rows), n);
    for (Index j = 0; j < n; ++j) {
        out.x.col(j) = linalg::tensor_power(data.inputs.row(j).transpose(), q);
    }
    out.sigma_min = linalg::smallest_singular(out.x);
    return out;
}

LandscapeReport landscape_report(const TwoLayerParams& params, const Dataset& data,
                                 Index hessian_cap) {
    LandscapeReport rep;
    rep.width_ok = params.r() >= 2 * data.d() + 2;
    rep.loss = loss_f(params, data);
    rep.spectral_norm_m = linalg::spectral_norm_sym(residual_matrix(params, data));
    rep.sigma_min_x = x_tensor_matrix(data, 2).sigma_min;
    const Matrix h = hessian_full(params, data, hessian_cap);
    rep.lambda_min_hessian = linalg::min_eigenvalue_sym(h, 1e-8).value;
    rep.identity_residual = std::abs(rep.lambda_min_hessian + rep.spectral_norm_m);
    if (rep.sigma_min_x > 0.0) {
        rep.loss_bound = static_cast<double>(data.n()) * static_cast<double>(data.d()) *
                         rep.spectral_norm_m * rep.spectral_norm_m /
                         (4.0 * rep.sigma_min_x * rep.sigma_min_x);
    } else {
        rep.loss_bound = std::numeric_limits<double>::infinity();
    }
    return rep;
}

std::string to_kv_text(const LandscapeReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda_min_hessian=" << rep.lambda_min_hessian << "\n"
       << "spectral_norm_M=" << rep.spectral_norm_m << "\n"
       << "loss=" << rep.loss << "\n"
       << "sigma_min_X=" << rep.sigma_min_x << "\n"
       << "loss_bound=" << rep.loss_bound << "\n"
       << "identity_residual=" << rep.identity_residual << "\n"
       << "width_ok=" << (rep.width_ok ? 1 : 0) << "\n";
    return os.str();
}

std::string csv_header(const LandscapeReport&) {
    return "lambda_min_hessian,spectral_norm_M,loss,sigma_min_X,loss_bound,identity_residual,"
           "width_ok";
}

std::string csv_row(const LandscapeReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << rep.lambda_min_hessian << ',' << rep.spectral_norm_m << ',' << rep.loss << ','
       << rep.sigma_min_x << ',' << rep.loss_bound << ',' << rep.identity_residual << ','
       << (rep.width_ok ? 1 : 0);
    return os.str();
}

StationarityReport stationarity_check(const TwoLayerParams& params, const Dataset& data,
                                      double gamma, double eps, double rho, Index cap) {
    require(gamma >= 0.0, "stationarity_check: gamma must be >= 0");
    require(eps > 0.0 && rho > 0.0, "stationarity_check: eps and rho must be > 0");
    StationarityReport rep;
    rep.eps = eps;
    rep.rho = rho;
    rep.grad_norm = grad_g(params, data, gamma).norm();
    Matrix h = hessian_full(params, data, cap);
    h.diagonal().array() += gamma;
    rep.lambda_min_g = linalg::min_eigenvalue_sym(h, 1e-8).value;
    rep.is_eps_sosp = rep.grad_norm <= eps && rep.lambda_min_g >= -std::sqrt(rho * eps);
    return rep;
}

std::string to_kv_text(const StationarityReport& rep) {
    std::ostringstream os;
    os.precision(17);
    os << "grad_norm=" << rep.grad_norm << "\n"
       << "lambda_min_g=" << rep.lambda_min_g << "\n"
       << "eps=" << rep.eps << "\n"
       << "rho=" << rep.rho << "\n"
       << "sosp_threshold=" << -std::sqrt(rep.rho * rep.eps) << "\n"
       << "is_eps_sosp=" << (rep.is_eps_sosp ? 1 : 0) << "\n";
    return os.str();
}

SmoothnessConstants smoothness_constants(double gamma_ball, double b, double y, double gamma) {
    require(gamma_ball >= 0.0 && b >= 0.0 && y >= 0.0 && gamma >= 0.0,
            "smoothness_constants: arguments must be nonnegative");
    SmoothnessConstants out;
    const double b4 = b * b * b * b;
    out.ell_bound = 3.0 * b4 * gamma_ball + y * b * b + gamma;
    out.rho_bound = 6.0 * b4 * std::sqrt(gamma_ball);
    return out;
}

LipschitzProbe empirical_lipschitz_probe(const Dataset& data, double gamma, double gamma_ball,
                                         int trials, std::uint64_t seed, Index r) {
    require(trials >= 1, "empirical_lipschitz_probe: trials must be >= 1");
    require(gamma_ball > 0.0, "empirical_lipschitz_probe: Gamma must be > 0");
    if (r == 0) r = 2 * data.d() + 2;

    LipschitzProbe probe;
    const SmoothnessConstants bounds = smoothness_constants(gamma_ball, data.B, data.Y, gamma);
    probe.ell_bound = bounds.ell_bound;
    probe.rho_bound = bounds.rho_bound;

    Rng rng(seed);
    const Index d = data.d();
    const double radius = std::sqrt(gamma_ball);
    auto sample_point = [&]() {
        const Vector v = rng.ball(d * r, radius);
        return Matrix(Eigen::Map<const Matrix>(v.data(), d, r));
    };

    for (int trial = 0; trial < trials; ++trial) {
        const Matrix u = sample_point();
        const Matrix v = sample_point();
        const double dist = (u - v).norm();
        if (dist == 0.0) continue;
        TwoLayerParams pu(u), pv(v);

        const double grad_ratio = (grad_g(pu, data, gamma) - grad_g(pv, data, gamma)).norm() / dist;
        Matrix z(d, r);
        for (Index i = 0; i < z.size(); ++i) z.data()[i] = rng.gaussian();
        const double hess_ratio = std::abs(hessian_g_quadratic(pu, data, gamma, z) -
                                           hessian_g_quadratic(pv, data, gamma, z)) /
                                  (dist * z.squaredNorm());

        if (grad_ratio > probe.ell_bound || hess_ratio > probe.rho_bound) {
            std::ostringstream os;
            os.precision(17);
            os << "empirical_lipschitz_probe: property failure at trial " << trial
               << ": grad_ratio=" << grad_ratio << " (bound " << probe.ell_bound << ")"
               << ", hessian_ratio=" << hess_ratio << " (bound " << probe.rho_bound << ")"
               << ", witness ||U||_F=" << u.norm() << " ||V||_F=" << v.norm()
               << " ||U-V||_F=" << dist;
            throw std::runtime_error(os.str());
        }
        probe.max_grad_ratio = std::max(probe.max_grad_ratio, grad_ratio);
        probe.max_hessian_ratio = std::max(probe.max_hessian_ratio, hess_ratio);
    }
    return probe;
}

}  // namespace memnet
