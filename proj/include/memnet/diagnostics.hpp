#pragma once

#include <memnet/dataset.hpp>
#include <memnet/two_layer.hpp>

#include <cstdint>
#include <string>

namespace memnet {

struct XTensorResult {
    Matrix x;  // d^q x n, column j = x_j^{(x)q}
    double sigma_min = 0.0;
};

XTensorResult x_tensor_matrix(const Dataset& data, int q, Index cap = 4000000);

// Measured landscape certificate at a parameter point. When the width
// satisfies r >= 2d+2 the smallest Hessian eigenvalue must match -||M||_2;
// below that width the identity is not guaranteed, which width_ok records.
struct LandscapeReport {
    double lambda_min_hessian = 0.0;
    double spectral_norm_m = 0.0;
    double loss = 0.0;
    double sigma_min_x = 0.0;
    double loss_bound = 0.0;         // n d ||M||^2 / (4 sigma^2)
    double identity_residual = 0.0;  // |lambda_min + ||M|||
    bool width_ok = true;            // r >= 2d+2
};

LandscapeReport landscape_report(const TwoLayerParams& params, const Dataset& data,
                                 Index hessian_cap = 20000);

std::string to_kv_text(const LandscapeReport& rep);
std::string csv_header(const LandscapeReport&);
std::string csv_row(const LandscapeReport& rep);

// both conditions of an eps-second-order stationary point, for g
struct StationarityReport {
    double grad_norm = 0.0;
    double lambda_min_g = 0.0;
    double eps = 0.0;
    double rho = 0.0;
    bool is_eps_sosp = false;
};

StationarityReport stationarity_check(const TwoLayerParams& params, const Dataset& data,
                                      double gamma, double eps, double rho, Index cap = 20000);

std::string to_kv_text(const StationarityReport& rep);

// closed-form constants on the Frobenius ball {W : ||W||_F^2 <= Gamma}:
//   ell = 3 B^4 Gamma + Y B^2 + gamma,   rho = 6 B^4 sqrt(Gamma)
struct SmoothnessConstants {
    double ell_bound = 0.0;
    double rho_bound = 0.0;
};

SmoothnessConstants smoothness_constants(double gamma_ball, double b, double y, double gamma);

struct LipschitzProbe {
    double max_grad_ratio = 0.0;     // ||grad g(U) - grad g(V)|| / ||U - V||
    double max_hessian_ratio = 0.0;  // |H_U(Z,Z) - H_V(Z,Z)| / (||U-V|| ||Z||^2)
    double ell_bound = 0.0;
    double rho_bound = 0.0;
};

// Samples random pairs in the Gamma-ball and checks the observed Lipschitz
// ratios against the closed-form constants; a violation throws with the
// witness pair's norms. Width r = 0 selects 2d+2.
LipschitzProbe empirical_lipschitz_probe(const Dataset& data, double gamma, double gamma_ball,
                                         int trials, std::uint64_t seed, Index r = 0);

}  // namespace memnet
