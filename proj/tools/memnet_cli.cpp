// Command-line front end: dataset generation/ingestion, two- and three-layer
// training runs, landscape certification, and spectral measurement.
//
// Exit codes: 0 success, 1 usage error, 2 degenerate instance, 3 numerical
// failure.

#include <CLI11.hpp>

#include <memnet/data_io.hpp>
#include <memnet/diagnostics.hpp>
#include <memnet/features.hpp>
#include <memnet/linalg.hpp>
#include <memnet/optimize.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

namespace fs = std::filesystem;
using namespace memnet;

namespace {

struct DataSource {
    std::string data_file;
    long synth_n = 0;
    long synth_d = 0;
    std::uint64_t seed_data = 1;
    std::string idx_images;
    std::string idx_labels;
    bool normalize = false;
    long pca_dims = 0;
    double input_noise_std = 0.0;
    std::uint64_t seed_input_noise = 3;

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", data_file, "dataset binary produced by 'gen'");
        cmd->add_option("--n", synth_n, "synthetic sample count");
        cmd->add_option("--d", synth_d, "synthetic input dimension");
        cmd->add_option("--seed-data", seed_data, "synthetic generator seed");
        cmd->add_option("--idx-images", idx_images, "IDX image file");
        cmd->add_option("--idx-labels", idx_labels, "IDX label file");
        cmd->add_flag("--normalize", normalize, "scale rows to unit norm after loading");
        cmd->add_option("--pca", pca_dims, "project onto the top K PCA directions");
        cmd->add_option("--input-noise-std", input_noise_std,
                        "Gaussian noise added per coordinate after normalization");
        cmd->add_option("--seed-input-noise", seed_input_noise, "seed for the input noise");
    }

    Dataset load() const {
        Dataset data = [&] {
            if (!data_file.empty()) return read_dataset(data_file);
            if (!idx_images.empty() || !idx_labels.empty()) {
                if (idx_images.empty() || idx_labels.empty()) {
                    throw std::invalid_argument("both --idx-images and --idx-labels are needed");
                }
                return load_idx(idx_images, idx_labels);
            }
            if (synth_n > 0 && synth_d > 0) return gen_synthetic(synth_n, synth_d, seed_data);
            throw std::invalid_argument("no dataset source: use --data, --n/--d, or --idx-*");
        }();
        if (normalize) data = normalize_rows(data);
        if (pca_dims > 0) data = pca_project(data, pca_dims);
        if (input_noise_std > 0.0) {
            const SmoothedDataset sm =
                smooth_inputs(data, input_noise_std * input_noise_std, seed_input_noise);
            data = Dataset(sm.inputs_bar, data.labels);
        }
        return data;
    }
};

struct TrainFlags {
    std::string optimizer = "pgd";
    double c = 0.5;
    double delta = 0.1;
    std::uint64_t seed = 4;
    long max_iters = 1000000;
    long record_every = 1;
    std::string init = "zero";
    double init_scale = 1e-2;
    bool force = false;
    bool no_stop = false;
    double gd_eta = 0.0;
    double adam_lr = 1e-3;
    long adam_batch = 0;
    double adam_decay = 1.0;
    long adam_decay_epochs = 0;
    long trials = 1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--optimizer", optimizer, "pgd | gd | adam")
            ->check(CLI::IsMember({"pgd", "gd", "adam"}));
        cmd->add_option("--c", c, "PGD constant c in (0,1]");
        cmd->add_option("--delta", delta, "PGD failure probability");
        cmd->add_option("--seed", seed, "optimizer seed");
        cmd->add_option("--max-iters", max_iters, "iteration budget");
        cmd->add_option("--record-every", record_every, "trace recording stride");
        cmd->add_option("--init", init, "zero | gaussian")
            ->check(CLI::IsMember({"zero", "gaussian"}));
        cmd->add_option("--init-scale", init_scale, "gaussian init scale");
        cmd->add_flag("--force", force, "allow widths below 2d+2");
        cmd->add_flag("--no-stop", no_stop, "do not stop early at the loss target");
        cmd->add_option("--gd-eta", gd_eta, "plain-GD step size (default: derived eta)");
        cmd->add_option("--adam-lr", adam_lr, "adam learning rate");
        cmd->add_option("--adam-batch", adam_batch, "adam mini-batch size (0 = full)");
        cmd->add_option("--adam-decay", adam_decay, "adam lr decay factor");
        cmd->add_option("--adam-decay-epochs", adam_decay_epochs, "epochs between decays");
        cmd->add_option("--trials", trials, "independent seeded trials run concurrently");
    }

    TrainOptions options() const {
        TrainOptions opts;
        opts.optimizer = optimizer == "pgd"  ? OptimizerKind::Pgd
                         : optimizer == "gd" ? OptimizerKind::Gd
                                             : OptimizerKind::Adam;
        opts.c = c;
        opts.delta = delta;
        opts.seed = seed;
        opts.max_iters = max_iters;
        opts.record_every = record_every;
        opts.init = init == "zero" ? InitKind::Zero : InitKind::Gaussian;
        opts.init_scale = init_scale;
        opts.force_width = force;
        opts.stop_at_target = !no_stop;
        opts.gd_eta = gd_eta;
        opts.adam.lr = adam_lr;
        opts.adam.batch_size = adam_batch;
        opts.adam.lr_decay = adam_decay;
        opts.adam.decay_every_epochs = adam_decay_epochs;
        return opts;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw format_error(path.string() + ": cannot open for writing");
    out << text;
}

std::string kv_block(const std::map<std::string, std::string>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::map<std::string, std::string> schedule_meta(const Theorem3Params& sched,
                                                 const PgdDerived& dc) {
    return {
        {"rho", format_double(sched.rho)},         {"gamma", format_double(sched.gamma)},
        {"ell", format_double(sched.ell)},         {"delta_f", format_double(sched.delta_f)},
        {"sigma_min_X", format_double(sched.sigma_min_x)},
        {"f0", format_double(sched.f0)},           {"chi", format_double(dc.chi)},
        {"eta", format_double(dc.eta)},            {"r_pert", format_double(dc.r_pert)},
        {"g_thres", format_double(dc.g_thres)},    {"f_thres", format_double(dc.f_thres)},
        {"t_thres", format_double(dc.t_thres)},
    };
}

int run_gen(const DataSource& src, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const Dataset data = src.load();
    write_dataset(fs::path(out_dir) / "dataset.bin", data);

    std::map<std::string, std::string> kv{
        {"n", std::to_string(data.n())},
        {"d", std::to_string(data.d())},
        {"B", format_double(data.B)},
        {"Y", format_double(data.Y)},
    };
    const double xcells = double(data.d()) * data.d() * data.n();
    if (data.n() >= 1 && xcells <= 4e6) {
        kv["sigma_min_X"] = format_double(x_tensor_matrix(data, 2).sigma_min);
    }
    write_text(fs::path(out_dir) / "summary.txt", kv_block(kv));
    write_text(fs::path(out_dir) / "meta.txt", kv_block(kv));
    std::cout << kv_block(kv);
    return 0;
}

void write_train_outputs(const fs::path& dir, const Dataset& data, const TrainResult& res,
                         std::map<std::string, std::string> meta) {
    write_trace((dir / "trace.csv").string(), res.trace);
    write_matrices((dir / "params.bin").string(), {res.params.W});
    meta.merge(schedule_meta(res.schedule, res.derived));
    meta["final_loss"] = format_double(res.final_loss);
    meta["iterations"] = std::to_string(res.iterations);
    meta["status"] = to_string(res.status);
    write_text(dir / "meta.txt", kv_block(meta));

    std::string report;
    const Index dr = data.d() * res.params.r();
    if (dr <= 20000 && double(data.d()) * data.d() * data.n() <= 4e6) {
        const LandscapeReport rep = landscape_report(res.params, data);
        if (!rep.width_ok) {
            report += "# warning: width below 2d+2, the eigenvalue identity is not guaranteed\n";
        }
        report += to_kv_text(rep);
        report += csv_header(rep) + "\n" + csv_row(rep) + "\n";
    } else {
        report = "# landscape report skipped: instance exceeds the dense-Hessian cap\n";
    }
    write_text(dir / "report.txt", report);
}

int run_train2(const DataSource& src, const TrainFlags& flags, long r, double eps,
               const std::string& out_dir) {
    fs::create_directories(out_dir);
    const Dataset data = src.load();

    auto run_one = [&](std::uint64_t seed_offset, const fs::path& dir) {
        fs::create_directories(dir);
        TrainOptions opts = flags.options();
        opts.seed += seed_offset;
        const TrainResult res = train_two_layer(data, r, eps, opts);
        std::map<std::string, std::string> meta{
            {"subcommand", "train2"},
            {"r", std::to_string(r)},
            {"eps", format_double(eps)},
            {"optimizer", flags.optimizer},
            {"c", format_double(opts.c)},
            {"delta", format_double(opts.delta)},
            {"seed", std::to_string(opts.seed)},
            {"seed_data", std::to_string(src.seed_data)},
            {"init", flags.init},
            {"max_iters", std::to_string(opts.max_iters)},
            {"record_every", std::to_string(opts.record_every)},
            {"input_noise_std", format_double(src.input_noise_std)},
        };
        write_train_outputs(dir, data, res, std::move(meta));
        return res.final_loss;
    };

    if (flags.trials <= 1) {
        const double loss = run_one(0, out_dir);
        std::cout << "final_loss=" << format_double(loss) << "\n";
        return 0;
    }
    std::vector<double> losses(static_cast<size_t>(flags.trials), 0.0);
    std::vector<std::thread> pool;
    std::atomic<long> next{0};
    const unsigned workers =
        std::min<unsigned>(std::thread::hardware_concurrency(), flags.trials);
    std::exception_ptr first_error;
    std::mutex err_mu;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (long t; (t = next.fetch_add(1)) < flags.trials;) {
                char name[32];
                std::snprintf(name, sizeof(name), "trial_%03ld", t);
                try {
                    losses[static_cast<size_t>(t)] =
                        run_one(static_cast<std::uint64_t>(t), fs::path(out_dir) / name);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    long ok = 0;
    for (double l : losses) ok += l <= eps;
    std::cout << "trials=" << flags.trials << " reached_target=" << ok << "\n";
    return 0;
}

int run_train3(const DataSource& src, const TrainFlags& flags, int p, long k, double eps,
               double v, std::uint64_t seed_features, std::uint64_t seed_noise,
               bool identity_features, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const Dataset data = src.load();

    auto run_one = [&](std::uint64_t seed_offset, const fs::path& dir) {
        fs::create_directories(dir);
        TrainOptions opts = flags.options();
        opts.seed += seed_offset;
        const ThreeLayerSeeds seeds{seed_features + seed_offset, seed_noise + seed_offset};
        const ThreeLayerResult res =
            train_three_layer(data, p, k, eps, v, seeds, opts, identity_features);

        write_trace((dir / "trace.csv").string(), res.train.trace);
        write_matrices((dir / "params.bin").string(), {res.train.params.W, res.layer.R});
        const FeatureNormReport norms = feature_norm_bound(res.layer, res.smoothed, opts.delta);
        std::map<std::string, std::string> meta{
            {"subcommand", "train3"},
            {"p", std::to_string(p)},
            {"k", std::to_string(res.layer.R.rows())},
            {"r", std::to_string(res.train.params.r())},
            {"eps", format_double(eps)},
            {"v", format_double(v)},
            {"optimizer", flags.optimizer},
            {"seed", std::to_string(opts.seed)},
            {"seed_features", std::to_string(seeds.features)},
            {"seed_noise", std::to_string(seeds.noise)},
            {"seed_data", std::to_string(src.seed_data)},
            {"identity_features", identity_features ? "1" : "0"},
        };
        meta.merge(schedule_meta(res.train.schedule, res.train.derived));
        meta["final_loss"] = format_double(res.train.final_loss);
        meta["iterations"] = std::to_string(res.train.iterations);
        meta["status"] = to_string(res.train.status);
        write_text(dir / "meta.txt", kv_block(meta));

        std::map<std::string, std::string> cert{
            {"sigma_min_Z", format_double(res.certificate.sigma_min)},
            {"theory_bound", format_double(res.certificate.theory_bound)},
            {"bound_vacuous", res.certificate.bound_vacuous ? "1" : "0"},
            {"positive", res.certificate.positive ? "1" : "0"},
            {"max_feature_norm", format_double(norms.max_norm)},
            {"feature_norm_bound", format_double(norms.bound)},
            {"feature_norm_violated", norms.violated ? "1" : "0"},
        };
        write_text(dir / "report.txt", kv_block(cert));
        return res.train.final_loss;
    };

    if (flags.trials <= 1) {
        const double loss = run_one(0, out_dir);
        std::cout << "final_loss=" << format_double(loss) << "\n";
        return 0;
    }
    long ok = 0;
    for (long t = 0; t < flags.trials; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "trial_%03ld", t);
        ok += run_one(static_cast<std::uint64_t>(t), fs::path(out_dir) / name) <= eps;
    }
    std::cout << "trials=" << flags.trials << " reached_target=" << ok << "\n";
    return 0;
}

int run_landscape(const DataSource& src, const std::string& params_file, double gamma,
                  double eps, double rho, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const Dataset data = src.load();
    const auto mats = read_matrices(params_file);
    if (mats.empty()) throw format_error(params_file + ": no parameter record");
    const TwoLayerParams params(mats[0]);

    const LandscapeReport rep = landscape_report(params, data);
    std::string text;
    if (!rep.width_ok) {
        text += "# warning: width below 2d+2, the eigenvalue identity is not guaranteed\n";
    }
    text += to_kv_text(rep);
    if (gamma >= 0.0 && eps > 0.0 && rho > 0.0) {
        text += to_kv_text(stationarity_check(params, data, gamma, eps, rho));
    }
    write_text(fs::path(out_dir) / "report.txt", text);
    std::cout << text;
    return 0;
}

int run_spectra(const DataSource& src, const std::string& matrix_file, int q,
                const std::string& out_dir) {
    fs::create_directories(out_dir);
    Matrix m;
    if (!matrix_file.empty()) {
        const auto mats = read_matrices(matrix_file);
        if (mats.empty()) throw format_error(matrix_file + ": no matrix record");
        m = mats[0];
    } else {
        m = x_tensor_matrix(src.load(), q).x;
    }
    const double sigma = linalg::smallest_singular(m);
    std::map<std::string, std::string> kv{
        {"rows", std::to_string(m.rows())},
        {"cols", std::to_string(m.cols())},
        {"sigma_min", format_double(sigma)},
    };
    if (m.rows() >= m.cols()) {
        const double l = linalg::leave_one_out(m);
        kv["leave_one_out"] = format_double(l);
        const double root_n = std::sqrt(double(m.cols()));
        kv["sandwich_ok"] =
            (sigma <= l + 1e-8 && sigma >= l / root_n - 1e-8) ? "1" : "0";
    }
    write_text(fs::path(out_dir) / "report.txt", kv_block(kv));
    std::cout << kv_block(kv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quadratic-activation memorization networks: training and certification"};
    app.require_subcommand(1);

    DataSource gen_src, t2_src, t3_src, land_src, spec_src;
    TrainFlags t2_flags, t3_flags;
    std::string gen_out = "out", t2_out = "out", t3_out = "out", land_out = "out",
                spec_out = "out";
    long t2_r = 0;
    double t2_eps = 1e-4;
    int t3_p = 2;
    long t3_k = 0;
    double t3_eps = 1e-3, t3_v = 0.01;
    std::uint64_t t3_seed_features = 2, t3_seed_noise = 3;
    bool t3_identity = false;
    std::string land_params;
    double land_gamma = -1.0, land_eps = 0.0, land_rho = 0.0;
    std::string spec_matrix;
    int spec_q = 2;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen_src.attach(gen);
    gen->add_option("--out", gen_out, "output directory");

    CLI::App* train2 = app.add_subcommand("train2", "train the two-layer network");
    t2_src.attach(train2);
    t2_flags.attach(train2);
    train2->add_option("--r", t2_r, "hidden width (needs r >= 2d+2 unless --force)");
    train2->add_option("--eps", t2_eps, "target loss");
    train2->add_option("--out", t2_out, "output directory");

    CLI::App* train3 = app.add_subcommand("train3", "train the three-layer network");
    t3_src.attach(train3);
    t3_flags.attach(train3);
    train3->add_option("--p", t3_p, "feature degree");
    train3->add_option("--k", t3_k, "feature count (0 = 2 ceil(sqrt(n)))");
    train3->add_option("--eps", t3_eps, "target loss");
    train3->add_option("--v", t3_v, "smoothing variance");
    train3->add_option("--seed-features", t3_seed_features, "feature layer seed");
    train3->add_option("--seed-noise", t3_seed_noise, "smoothing seed");
    train3->add_flag("--identity-features", t3_identity, "debug: R = I, p = 1");
    train3->add_option("--out", t3_out, "output directory");

    CLI::App* landscape = app.add_subcommand("landscape", "landscape report at saved params");
    land_src.attach(landscape);
    landscape->add_option("--params", land_params, "params.bin with the weight record")
        ->required();
    landscape->add_option("--gamma", land_gamma, "regularizer for the stationarity check");
    landscape->add_option("--eps", land_eps, "stationarity eps");
    landscape->add_option("--rho", land_rho, "stationarity rho");
    landscape->add_option("--out", land_out, "output directory");

    CLI::App* spectra = app.add_subcommand("spectra", "sigma_min / leave-one-out report");
    spec_src.attach(spectra);
    spectra->add_option("--matrix", spec_matrix, "raw matrix file (first record used)");
    spectra->add_option("--q", spec_q, "tensor order for the X matrix");
    spectra->add_option("--out", spec_out, "output directory");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_gen(gen_src, gen_out);
        if (train2->parsed()) {
            if (t2_r <= 0) throw std::invalid_argument("train2: --r is required and positive");
            return run_train2(t2_src, t2_flags, t2_r, t2_eps, t2_out);
        }
        if (train3->parsed()) {
            return run_train3(t3_src, t3_flags, t3_p, t3_k, t3_eps, t3_v, t3_seed_features,
                              t3_seed_noise, t3_identity, t3_out);
        }
        if (landscape->parsed()) {
            return run_landscape(land_src, land_params, land_gamma, land_eps, land_rho, land_out);
        }
        if (spectra->parsed()) return run_spectra(spec_src, spec_matrix, spec_q, spec_out);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const degenerate_instance& e) {
        std::cerr << "degenerate instance: " << e.what() << "\n";
        return 2;
    } catch (const numerical_failure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
