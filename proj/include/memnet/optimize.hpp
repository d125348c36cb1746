#pragma once

#include <memnet/dataset.hpp>
#include <memnet/two_layer.hpp>

#include <cstdint>
#include <functional>
#include <vector>

namespace memnet {

using Objective = std::function<double(const Vector&)>;
using Gradient = std::function<Vector(const Vector&)>;

// Inputs of perturbed gradient descent. The paper's constant c is capped at 1
// (the convergence proof assumes c <= 1); default 0.5.
struct PgdHyper {
    Vector x0;
    double ell = 1.0;      // smoothness, >= 1
    double rho = 1.0;      // Hessian Lipschitz, > 0
    double eps = 1e-4;     // target accuracy, 0 < eps <= ell^2/rho
    double c = 0.5;        // 0 < c <= 1
    double delta = 0.1;    // failure probability, in (0,1)
    double delta_f = 1.0;  // upper bound on f(x0) - f*, > 0

    void validate() const;
};

// Constants derived on line 1 of the algorithm; pure function of PgdHyper
// (natural log). t_thres is kept as the real-valued formula; the loop
// compares against ceil(t_thres) since iteration counters are integers.
struct PgdDerived {
    double chi = 0.0;
    double eta = 0.0;
    double r_pert = 0.0;
    double g_thres = 0.0;
    double f_thres = 0.0;
    double t_thres = 0.0;
};

PgdDerived derive_params(const PgdHyper& hyper);

struct TraceRecord {
    long iteration = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    bool perturbed = false;
};

using Trace = std::vector<TraceRecord>;

enum class RunStatus {
    Returned,          // PGD's own return statement fired
    BudgetExhausted,   // max_iters reached
    Stopped,           // observer requested stop
};

const char* to_string(RunStatus s);

struct RunResult {
    Vector point;
    Trace trace;
    RunStatus status = RunStatus::BudgetExhausted;
    long iterations = 0;
};

// Called every iteration with the current record (recorded in the trace only
// on record_every boundaries and on perturbation steps); return false to stop.
using Observer = std::function<bool(const TraceRecord&, const Vector&)>;

struct RunOptions {
    long record_every = 1;
    Observer observer;
};

// Perturbed gradient descent: gradient steps with rate eta; when the gradient
// is small and no perturbation is recent, saves the point and adds a uniform
// ball perturbation; if the objective failed to drop by f_thres when the
// phase ends, returns the saved point.
RunResult pgd(const Objective& objective, const Gradient& gradient, const PgdHyper& hyper,
              long max_iters, std::uint64_t seed, const RunOptions& opts = {});

// plain gradient descent baseline
RunResult gd(const Objective& objective, const Gradient& gradient, const Vector& x0, double eta,
             long max_iters, const RunOptions& opts = {});

using BatchGradient = std::function<Vector(const Vector&, const std::vector<Index>&)>;

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
    Index batch_size = 0;        // 0 = full batch
    double lr_decay = 1.0;       // multiplied into lr every decay interval
    long decay_every_epochs = 0; // 0 = no decay

    // the configuration used for the MNIST runs: lr 0.003, batch 128,
    // decay 0.3 every 15 epochs
    static AdamOptions mnist_run();
};

// Adam with optional mini-batches over sample indices (seeded shuffle per
// epoch). With batch_size = 0 only gradient_full is used. The recorded
// objective is evaluated on record boundaries.
RunResult adam(const Objective& objective, const Gradient& gradient_full,
               const BatchGradient& gradient_batch, Index n_samples, const Vector& x0,
               const AdamOptions& adam_opts, long max_iters, std::uint64_t seed,
               const RunOptions& opts = {});

// Hyperparameter schedule of the two-layer training theorem, computed from
// the instance: sigma = sigma_min([x_j^{(x)2}]), f0 = loss at W = 0,
//   gamma = sqrt(sigma^2 eps / (n d)),
//   ell   = max(3 B^4 * 2(f0+1)/gamma + Y B^2 + gamma, 1),
//   rho   = 6 B^4 sqrt(2(f0+1)) * (n d / (sigma^2 eps))^{1/4},
//   Delta = f0 + 1.
struct Theorem3Params {
    double rho = 0.0;
    double gamma = 0.0;
    double ell = 0.0;
    double delta_f = 0.0;  // Delta
    double sigma_min_x = 0.0;
    double f0 = 0.0;
};

Theorem3Params theorem3_params(const Dataset& data, double eps_target);

enum class OptimizerKind { Pgd, Gd, Adam };
enum class InitKind { Zero, Gaussian };

struct TrainOptions {
    OptimizerKind optimizer = OptimizerKind::Pgd;
    double c = 0.5;
    double delta = 0.1;
    std::uint64_t seed = 4;
    long max_iters = 1000000;
    long record_every = 1;
    InitKind init = InitKind::Zero;
    double init_scale = 1e-2;
    bool stop_at_target = true;  // stop once loss_f <= eps_target
    bool force_width = false;    // allow r < 2d+2
    double gd_eta = 0.0;         // 0 = use the derived eta
    AdamOptions adam;
    Observer extra_observer;     // optional, composed with the stop rule
};

struct TrainResult {
    TwoLayerParams params;
    Trace trace;
    Theorem3Params schedule;
    PgdDerived derived;  // meaningful for the PGD/GD paths
    double final_loss = 0.0;
    RunStatus status = RunStatus::BudgetExhausted;
    long iterations = 0;
};

// Trains the quadratic layer on the regularized objective g with the
// schedule from theorem3_params. Shared by the two-layer CLI path and the
// three-layer pipeline (which passes the feature dataset).
TrainResult train_two_layer(const Dataset& data, Index r, double eps_target,
                            const TrainOptions& opts);

}  // namespace memnet
