#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace memnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Thrown when a run would exceed a configured size cap (e.g. dense Hessian
// assembly); callers may retry with the quadratic-form path instead.
struct resource_limit : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite objective/gradient during an optimization run. CLI exit code 3.
struct numerical_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Instance fails a rank/positivity precondition (e.g. sigma_min(X) = 0).
// CLI exit code 2.
struct degenerate_instance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input file (IDX, trace CSV, parameter binary).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Kahan compensated accumulator; keeps per-sample reductions stable under
// reordering to well below 1e-12.
class KahanSum {
  public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Deterministic random source. All sampling in the project goes through this
// class so that a (seed, call-sequence) pair pins every random draw exactly,
// independent of the standard library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // uniform on [0, 1), 53-bit resolution
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // uniform on [-1, 1]
    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

    // standard normal via Box-Muller, one spare cached
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * M_PI * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

    Vector gaussian_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    // uniform in the closed ball of the given radius: normalized Gaussian
    // direction scaled by radius * U^(1/dim)
    Vector ball(Index dim, double radius) {
        Vector g = gaussian_vector(dim);
        const double norm = g.norm();
        if (norm == 0.0) return Vector::Zero(dim);
        const double scale = radius * std::pow(uniform01(), 1.0 / static_cast<double>(dim));
        return g * (scale / norm);
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace memnet
