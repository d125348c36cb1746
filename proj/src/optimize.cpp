#include <memnet/optimize.hpp>

#include <memnet/linalg.hpp>

#include <algorithm>
#include <cmath>

namespace memnet {

void PgdHyper::validate() const {
    require(x0.size() >= 1, "PgdHyper: empty start point");
    require(x0.allFinite(), "PgdHyper: non-finite start point");
    require(ell >= 1.0, "PgdHyper: smoothness ell must be >= 1");
    require(rho > 0.0, "PgdHyper: Hessian-Lipschitz rho must be > 0");
    require(eps > 0.0, "PgdHyper: accuracy eps must be > 0");
    require(eps <= ell * ell / rho, "PgdHyper: requires eps <= ell^2/rho");
    require(c > 0.0 && c <= 1.0, "PgdHyper: constant c must be in (0, 1]");
    require(delta > 0.0 && delta < 1.0, "PgdHyper: failure probability delta must be in (0,1)");
    require(delta_f > 0.0, "PgdHyper: Delta_f must be > 0");
}

PgdDerived derive_params(const PgdHyper& hyper) {
    hyper.validate();
    const double d = static_cast<double>(hyper.x0.size());
    PgdDerived out;
    out.chi = 3.0 * std::max(std::log(d * hyper.ell * hyper.delta_f /
                                      (hyper.c * hyper.eps * hyper.eps * hyper.delta)),
                             4.0);
    out.eta = hyper.c / hyper.ell;
    out.r_pert = std::sqrt(hyper.c) * hyper.eps / (out.chi * out.chi * hyper.ell);
    out.g_thres = std::sqrt(hyper.c) * hyper.eps / (out.chi * out.chi);
    out.f_thres = hyper.c * std::sqrt(hyper.eps * hyper.eps * hyper.eps) /
                  (out.chi * out.chi * out.chi * std::sqrt(hyper.rho));
    out.t_thres = out.chi * hyper.ell / (hyper.c * hyper.c * std::sqrt(hyper.rho * hyper.eps));
    return out;
}

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::Returned: return "returned";
        case RunStatus::BudgetExhausted: return "budget-exhausted";
        case RunStatus::Stopped: return "stopped";
    }
    return "unknown";
}

namespace {

void check_finite_step(double f, const Vector& g, long t) {
    if (!std::isfinite(f) || !g.allFinite()) {
        throw numerical_failure("non-finite objective or gradient at iteration " +
                                std::to_string(t));
    }
}

struct Recorder {
    Trace trace;
    long record_every;
    const Observer* observer;

    // returns false when the observer asks to stop
    bool visit(long t, double f, double gn, bool perturbed, const Vector& x) {
        TraceRecord rec{t, f, gn, perturbed};
        if (perturbed || record_every <= 1 || t % record_every == 0) {
            trace.push_back(rec);
        }
        if (*observer && !(*observer)(rec, x)) {
            if (trace.empty() || trace.back().iteration != t) trace.push_back(rec);
            return false;
        }
        return true;
    }
};

}  // namespace

RunResult pgd(const Objective& objective, const Gradient& gradient, const PgdHyper& hyper,
              long max_iters, std::uint64_t seed, const RunOptions& opts) {
    const PgdDerived dc = derive_params(hyper);
    require(max_iters >= 1, "pgd: max_iters must be >= 1");
    // iteration counters are integers, so the phase length is ceil(t_thres)
    const long t_steps = static_cast<long>(std::ceil(dc.t_thres));
    Rng rng(seed);
    Recorder rec{{}, opts.record_every, &opts.observer};

    Vector x = hyper.x0;
    long t_noise = -t_steps - 1;
    Vector x_tilde;
    double f_tilde = 0.0;

    for (long t = 0; t < max_iters; ++t) {
        double f = objective(x);
        Vector g = gradient(x);
        check_finite_step(f, g, t);

        bool perturbed_now = false;
        if (g.norm() <= dc.g_thres && t - t_noise > t_steps) {
            x_tilde = x;
            f_tilde = f;
            t_noise = t;
            x += rng.ball(x.size(), dc.r_pert);
            perturbed_now = true;
            f = objective(x);
            g = gradient(x);
            check_finite_step(f, g, t);
        }

        if (!rec.visit(t, f, g.norm(), perturbed_now, x)) {
            return {std::move(x), std::move(rec.trace), RunStatus::Stopped, t};
        }

        if (t - t_noise == t_steps && f - f_tilde > -dc.f_thres) {
            return {std::move(x_tilde), std::move(rec.trace), RunStatus::Returned, t};
        }

        x -= dc.eta * g;
    }
    return {std::move(x), std::move(rec.trace), RunStatus::BudgetExhausted, max_iters};
}

RunResult gd(const Objective& objective, const Gradient& gradient, const Vector& x0, double eta,
             long max_iters, const RunOptions& opts) {
    require(eta > 0.0, "gd: step size eta must be > 0");
    require(max_iters >= 1, "gd: max_iters must be >= 1");
    Recorder rec{{}, opts.record_every, &opts.observer};
    Vector x = x0;
    for (long t = 0; t < max_iters; ++t) {
        const double f = objective(x);
        const Vector g = gradient(x);
        check_finite_step(f, g, t);
        if (!rec.visit(t, f, g.norm(), false, x)) {
            return {std::move(x), std::move(rec.trace), RunStatus::Stopped, t};
        }
        x -= eta * g;
    }
    return {std::move(x), std::move(rec.trace), RunStatus::BudgetExhausted, max_iters};
}

AdamOptions AdamOptions::mnist_run() {
    AdamOptions o;
    o.lr = 0.003;
    o.batch_size = 128;
    o.lr_decay = 0.3;
    o.decay_every_epochs = 15;
    return o;
}

RunResult adam(const Objective& objective, const Gradient& gradient_full,
               const BatchGradient& gradient_batch, Index n_samples, const Vector& x0,
               const AdamOptions& ao, long max_iters, std::uint64_t seed,
               const RunOptions& opts) {
    require(ao.lr >= 0.0, "adam: learning rate must be >= 0");
    require(ao.beta1 >= 0.0 && ao.beta1 < 1.0, "adam: beta1 must be in [0,1)");
    require(ao.beta2 >= 0.0 && ao.beta2 < 1.0, "adam: beta2 must be in [0,1)");
    require(ao.eps_hat > 0.0, "adam: eps_hat must be > 0");
    require(max_iters >= 1, "adam: max_iters must be >= 1");
    const bool minibatch = ao.batch_size > 0 && ao.batch_size < n_samples;
    require(!minibatch || static_cast<bool>(gradient_batch),
            "adam: mini-batch mode needs a batch gradient");

    Rng rng(seed);
    Recorder rec{{}, opts.record_every, &opts.observer};
    Vector x = x0;
    Vector m = Vector::Zero(x.size());
    Vector v = Vector::Zero(x.size());
    double lr = ao.lr;

    std::vector<Index> order(static_cast<size_t>(n_samples));
    for (Index i = 0; i < n_samples; ++i) order[static_cast<size_t>(i)] = i;
    const long steps_per_epoch =
        minibatch ? (n_samples + ao.batch_size - 1) / ao.batch_size : 1;
    long epoch = 0;
    long pos_in_epoch = 0;
    std::vector<Index> batch;

    for (long t = 0; t < max_iters; ++t) {
        if (minibatch && pos_in_epoch == 0) {
            // seeded Fisher-Yates shuffle at each epoch start
            for (size_t i = order.size() - 1; i > 0; --i) {
                const size_t j = static_cast<size_t>(rng.uniform01() * double(i + 1));
                std::swap(order[i], order[std::min(j, i)]);
            }
        }
        Vector g;
        if (minibatch) {
            const Index lo = pos_in_epoch * ao.batch_size;
            const Index hi = std::min<Index>(lo + ao.batch_size, n_samples);
            batch.assign(order.begin() + lo, order.begin() + hi);
            g = gradient_batch(x, batch);
        } else {
            g = gradient_full(x);
        }
        if (!g.allFinite()) {
            throw numerical_failure("adam: non-finite gradient at iteration " + std::to_string(t));
        }

        const double f = (opts.record_every <= 1 || t % opts.record_every == 0 || opts.observer)
                             ? objective(x)
                             : 0.0;
        if (!std::isfinite(f)) {
            throw numerical_failure("adam: non-finite objective at iteration " + std::to_string(t));
        }
        if (!rec.visit(t, f, g.norm(), false, x)) {
            return {std::move(x), std::move(rec.trace), RunStatus::Stopped, t};
        }

        m = ao.beta1 * m + (1.0 - ao.beta1) * g;
        v = ao.beta2 * v + (1.0 - ao.beta2) * g.cwiseProduct(g);
        const double bc1 = 1.0 - std::pow(ao.beta1, double(t + 1));
        const double bc2 = 1.0 - std::pow(ao.beta2, double(t + 1));
        x -= (lr / bc1) * m.cwiseQuotient((v / bc2).cwiseSqrt().array().matrix() +
                                          Vector::Constant(x.size(), ao.eps_hat));

        if (minibatch && ++pos_in_epoch == steps_per_epoch) {
            pos_in_epoch = 0;
            ++epoch;
            if (ao.decay_every_epochs > 0 && epoch % ao.decay_every_epochs == 0) {
                lr *= ao.lr_decay;
            }
        } else if (!minibatch && ao.decay_every_epochs > 0 && (t + 1) % ao.decay_every_epochs == 0) {
            lr *= ao.lr_decay;  // full batch: one iteration = one epoch
        }
    }
    return {std::move(x), std::move(rec.trace), RunStatus::BudgetExhausted, max_iters};
}

Theorem3Params theorem3_params(const Dataset& data, double eps_target) {
    require(eps_target > 0.0, "theorem3_params: eps must be > 0");
    require(data.n() >= 1, "theorem3_params: empty dataset");
    const Index n = data.n(), d = data.d();

    // X = [x_1^{(x)2}, ..., x_n^{(x)2}], d^2 x n
    Matrix x(d * d, n);
    for (Index j = 0; j < n; ++j) {
        x.col(j) = linalg::tensor_power(data.inputs.row(j).transpose(), 2);
    }
    const double sigma = linalg::smallest_singular(x);
    // numerical rank cutoff, scaled like the usual SVD rank tolerance
    const double sigma_max = x.norm();
    const double cutoff = std::max(x.rows(), x.cols()) *
                          std::numeric_limits<double>::epsilon() * sigma_max;
    if (sigma <= cutoff) {
        throw degenerate_instance(
            "theorem3_params: X rank-deficient (sigma_min = " + std::to_string(sigma) +
            "); the tensor-power data matrix must have full column rank");
    }

    const double f0 = data.labels.squaredNorm() / (4.0 * static_cast<double>(n));
    Theorem3Params p;
    p.sigma_min_x = sigma;
    p.f0 = f0;
    p.gamma = std::sqrt(sigma * sigma * eps_target / (double(n) * double(d)));
    p.ell = std::max(3.0 * std::pow(data.B, 4) * 2.0 * (f0 + 1.0) / p.gamma +
                         data.Y * data.B * data.B + p.gamma,
                     1.0);
    p.rho = 6.0 * std::pow(data.B, 4) * std::sqrt(2.0 * (f0 + 1.0)) *
            std::pow(double(n) * double(d) / (sigma * sigma * eps_target), 0.25);
    p.delta_f = f0 + 1.0;
    return p;
}

TrainResult train_two_layer(const Dataset& data, Index r, double eps_target,
                            const TrainOptions& opts) {
    require(r >= 2 && r % 2 == 0, "train_two_layer: width r must be even");
    if (!opts.force_width) {
        require(r >= 2 * data.d() + 2,
                "train_two_layer: width r must be >= 2d+2 (use force_width to override)");
    }

    TrainResult out;
    out.schedule = theorem3_params(data, eps_target);

    TwoLayerObjective model(data, r, out.schedule.gamma);
    const Objective objective = [&](const Vector& w) { return model.objective(w); };
    const Gradient gradient = [&](const Vector& w) { return model.gradient(w); };

    Vector x0 = Vector::Zero(model.dim());
    if (opts.init == InitKind::Gaussian) {
        Rng init_rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
        x0 = opts.init_scale * init_rng.gaussian_vector(model.dim());
    }

    RunOptions run_opts;
    run_opts.record_every = opts.record_every;
    run_opts.observer = [&](const TraceRecord& rec, const Vector& w) {
        if (opts.extra_observer && !opts.extra_observer(rec, w)) return false;
        if (opts.stop_at_target && model.loss(w) <= eps_target) return false;
        return true;
    };

    RunResult run;
    switch (opts.optimizer) {
        case OptimizerKind::Pgd: {
            PgdHyper hyper;
            hyper.x0 = x0;
            hyper.ell = out.schedule.ell;
            hyper.rho = out.schedule.rho;
            hyper.eps = eps_target;
            hyper.c = opts.c;
            hyper.delta = opts.delta;
            hyper.delta_f = out.schedule.delta_f;
            out.derived = derive_params(hyper);
            run = pgd(objective, gradient, hyper, opts.max_iters, opts.seed, run_opts);
            break;
        }
        case OptimizerKind::Gd: {
            PgdHyper hyper;
            hyper.x0 = x0;
            hyper.ell = out.schedule.ell;
            hyper.rho = out.schedule.rho;
            hyper.eps = eps_target;
            hyper.c = opts.c;
            hyper.delta = opts.delta;
            hyper.delta_f = out.schedule.delta_f;
            out.derived = derive_params(hyper);
            const double eta = opts.gd_eta > 0.0 ? opts.gd_eta : out.derived.eta;
            run = gd(objective, gradient, x0, eta, opts.max_iters, run_opts);
            break;
        }
        case OptimizerKind::Adam: {
            const BatchGradient batch_grad = [&](const Vector& w, const std::vector<Index>& idx) {
                Matrix xb(static_cast<Index>(idx.size()), data.d());
                Vector yb(static_cast<Index>(idx.size()));
                for (size_t i = 0; i < idx.size(); ++i) {
                    xb.row(static_cast<Index>(i)) = data.inputs.row(idx[i]);
                    yb[static_cast<Index>(i)] = data.labels[idx[i]];
                }
                Dataset sub(std::move(xb), std::move(yb));
                TwoLayerParams p = TwoLayerParams::unflatten(w, data.d(), r);
                const Matrix g = grad_g(p, sub, model.gamma());
                return Vector(Eigen::Map<const Vector>(g.data(), g.size()));
            };
            run = adam(objective, gradient, batch_grad, data.n(), x0, opts.adam, opts.max_iters,
                       opts.seed, run_opts);
            break;
        }
    }

    out.params = TwoLayerParams::unflatten(run.point, data.d(), r);
    out.trace = std::move(run.trace);
    out.status = run.status;
    out.iterations = run.iterations;
    out.final_loss = loss_f(out.params, data);
    return out;
}

}  // namespace memnet
