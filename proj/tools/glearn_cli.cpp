// Command-line harness: dataset generation, model-based solving, unrolled
// training/evaluation, hyperparameter grid search, and dataset inspection.
//
// Exit codes: 0 success, 1 runtime/IO failure, 2 argument error.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include <glearn/dataio.hpp>
#include <glearn/metrics.hpp>
#include <glearn/solvers.hpp>
#include <glearn/synth.hpp>
#include <glearn/unroll.hpp>

namespace fs = std::filesystem;
using glearn::Vector;
using json = nlohmann::json;

namespace {

std::string fmt(double v) { return glearn::detail::format_double(v); }

// ---------------------------------------------------------------------------
// config plumbing: every flag mirrored by a JSON key; file values apply only
// when the flag was not given on the command line; unknown keys rejected

class ConfigMap {
public:
    template <class T>
    CLI::Option* bind(CLI::App& app, const std::string& key, const std::string& flag,
                      T& var, const std::string& desc) {
        CLI::Option* opt = app.add_option(flag, var, desc);
        entries_[key] = Entry{opt, [&var](const json& j) { var = j.get<T>(); },
                              [&var] { return json(var); }};
        return opt;
    }

    CLI::Option* bind_flag(CLI::App& app, const std::string& key, const std::string& flag,
                           bool& var, const std::string& desc) {
        CLI::Option* opt = app.add_flag(flag, var, desc);
        entries_[key] = Entry{opt, [&var](const json& j) { var = j.get<bool>(); },
                              [&var] { return json(var); }};
        return opt;
    }

    /// Applies a config file; command-line flags keep precedence.
    void apply_file(const std::string& path) {
        json j;
        try {
            j = json::parse(glearn::detail::read_file(path));
        } catch (const json::exception& e) {
            throw glearn::parameter_error(path + ": config parse failure: " + e.what());
        }
        if (!j.is_object())
            throw glearn::parameter_error(path + ": config must be a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            auto found = entries_.find(it.key());
            if (found == entries_.end())
                throw glearn::parameter_error(path + ": unknown config key `" + it.key() +
                                              "`");
            if (found->second.opt->count() > 0) continue;  // flag wins
            try {
                found->second.apply(it.value());
            } catch (const json::exception& e) {
                throw glearn::parameter_error(path + ": bad value for `" + it.key() +
                                              "`: " + e.what());
            }
        }
    }

    json effective() const {
        json j = json::object();
        for (const auto& [key, entry] : entries_) j[key] = entry.dump();
        return j;
    }

private:
    struct Entry {
        CLI::Option* opt;
        std::function<void(const json&)> apply;
        std::function<json()> dump;
    };
    std::map<std::string, Entry> entries_;
};

void echo_run_config(const ConfigMap& cfg, const std::string& command,
                     const fs::path& dir) {
    fs::create_directories(dir);
    json j = cfg.effective();
    j["command"] = command;
    glearn::detail::write_file((dir / "run_config.json").string(), j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// worker pool: fan indices across J threads, collect by index

template <class Fn>
void parallel_for(int jobs, int count, Fn&& fn) {
    jobs = std::max(1, std::min(jobs, count));
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (int t = 0; t < jobs; ++t)
        workers.emplace_back([&] {
            for (int i; (i = next.fetch_add(1)) < count;) fn(i);
        });
    for (auto& w : workers) w.join();
}

// ---------------------------------------------------------------------------
// shared option bundles

struct HyperOpts {
    double alpha = -1.0, beta = -1.0, gamma = -1.0;
    double lambda_pen = -1.0, rho_l1 = -1.0, fixed_step = 0.0;
    std::vector<double> poly_alpha;

    void bind(CLI::App& app, ConfigMap& cfg) {
        cfg.bind(app, "alpha", "--alpha", alpha, "log-barrier weight (smooth)");
        cfg.bind(app, "beta", "--beta", beta,
                 "logdet weight (gaussian) / l2 (smooth) / l1 (diffusion)");
        cfg.bind(app, "gamma", "--gamma", gamma,
                 "primal-dual step (smooth) / initial step (diffusion)");
        cfg.bind(app, "lambda", "--lambda", lambda_pen,
                 "quadratic coupling weight (gaussian)");
        cfg.bind(app, "rho", "--rho", rho_l1, "l1 weight (gaussian)");
        cfg.bind(app, "fixed_step", "--fixed-step", fixed_step,
                 "diffusion: disable backtracking, use this step");
        cfg.bind(app, "poly_alpha", "--poly-alpha", poly_alpha,
                 "diffusion filter coefficients a0 a1 ...");
    }

    glearn::MBHyperparams resolve(glearn::Method method) const {
        glearn::MBHyperparams hp = glearn::default_hyperparams(method);
        if (alpha >= 0.0) hp.alpha = alpha;
        if (beta >= 0.0) hp.beta = beta;
        if (gamma >= 0.0) hp.gamma = gamma;
        if (lambda_pen >= 0.0) hp.lambda_pen = lambda_pen;
        if (rho_l1 >= 0.0) hp.rho_l1 = rho_l1;
        hp.fixed_step = fixed_step;
        if (!poly_alpha.empty())
            hp.poly_alpha = Eigen::Map<const Vector>(poly_alpha.data(),
                                                     static_cast<Eigen::Index>(poly_alpha.size()));
        return hp;
    }
};

json hyperparams_json(const glearn::MBHyperparams& hp) {
    json j;
    j["alpha"] = hp.alpha;
    j["beta"] = hp.beta;
    j["gamma"] = hp.gamma;
    j["lambda"] = hp.lambda_pen;
    j["rho"] = hp.rho_l1;
    j["fixed_step"] = hp.fixed_step;
    j["poly_alpha"] = std::vector<double>(hp.poly_alpha.data(),
                                          hp.poly_alpha.data() + hp.poly_alpha.size());
    return j;
}

json eval_report_json(const glearn::EvalReport& r) {
    json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["auprc"] = r.auprc;
    j["relative_frobenius_error"] = r.relative_frobenius_error;
    j["mse"] = r.mse;
    j["threshold"] = r.threshold;
    j["sample_count"] = r.sample_count;
    return j;
}

double metric_value(const glearn::EvalReport& r, const std::string& name) {
    if (name == "precision") return r.precision;
    if (name == "recall") return r.recall;
    if (name == "f1") return r.f1;
    if (name == "auprc") return r.auprc;
    if (name == "relative_frobenius_error") return r.relative_frobenius_error;
    if (name == "mse") return r.mse;
    throw glearn::parameter_error("unknown metric: " + name);
}

bool metric_higher_is_better(const std::string& name) {
    return name == "precision" || name == "recall" || name == "f1" || name == "auprc";
}

struct Split {
    int begin = 0, count = 0;
};

Split resolve_split(const glearn::Dataset& ds, const std::string& name) {
    if (name == "train") return {ds.train_begin(), ds.n_train};
    if (name == "val") return {ds.val_begin(), ds.n_val};
    if (name == "test") return {ds.test_begin(), ds.n_test};
    if (name == "all") return {0, ds.size()};
    throw glearn::parameter_error("unknown split: " + name);
}

// ---------------------------------------------------------------------------
// generate

struct GenerateOpts {
    std::string graphs = "er";
    int n = 100;
    double p = 0.5;
    int ba_m = 2;
    int ws_k = 4;
    double ws_p = 0.1;
    std::vector<int> sbm_sizes;
    double sbm_p_in = 0.5, sbm_p_out = 0.05;
    int grid_rows = 0, grid_cols = 0;
    std::string signals = "smooth";
    int num_signals = 100;
    double eps = 0.01;
    std::vector<double> diffuse_alpha;
    double sigma = 0.0;
    double eps_pd = 0.05;
    std::string similarity = "covariance";
    int train = 0, val = 0, test = 0;
    std::uint64_t seed = 0;
    std::string out = "dataset.gsld";
    std::string config;
};

int cmd_generate(GenerateOpts& o, ConfigMap& cfg) {
    if (!o.config.empty()) cfg.apply_file(o.config);

    glearn::GraphEnsembleSpec gs;
    gs.ensemble = glearn::graph_ensemble_from_string(o.graphs);
    gs.n = o.n;
    gs.er_p = o.p;
    gs.ba_m = o.ba_m;
    gs.ws_k = o.ws_k;
    gs.ws_p = o.ws_p;
    gs.sbm_sizes = o.sbm_sizes;
    if (!o.sbm_sizes.empty()) {
        const int b = static_cast<int>(o.sbm_sizes.size());
        gs.sbm_probs = glearn::Matrix::Constant(b, b, o.sbm_p_out);
        gs.sbm_probs.diagonal().setConstant(o.sbm_p_in);
    }
    gs.grid_rows = o.grid_rows;
    gs.grid_cols = o.grid_cols;
    gs.seed = o.seed;

    glearn::SignalModelSpec ss;
    ss.model = glearn::signal_model_from_string(o.signals);
    ss.p_signals = o.num_signals;
    ss.eps = o.eps;
    if (!o.diffuse_alpha.empty())
        ss.diffuse_alpha = Eigen::Map<const Vector>(
            o.diffuse_alpha.data(), static_cast<Eigen::Index>(o.diffuse_alpha.size()));
    ss.noise_sigma = o.sigma;
    ss.eps_pd = o.eps_pd;

    const glearn::SimilarityKind kind = glearn::similarity_kind_from_string(o.similarity);
    glearn::Dataset ds = glearn::build_dataset(gs, ss, kind, o.train, o.val, o.test);
    fs::path outpath(o.out);
    if (outpath.has_parent_path()) fs::create_directories(outpath.parent_path());
    glearn::write_dataset(ds, o.out);
    echo_run_config(cfg, "generate",
                    outpath.has_parent_path() ? outpath.parent_path() : fs::path("."));

    std::cout << "wrote " << o.out << ": " << ds.size() << " samples, n=" << gs.n
              << ", p_signals=" << ss.p_signals << ", splits " << ds.n_train << "/"
              << ds.n_val << "/" << ds.n_test << ", seed " << ds.master_seed << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// solve

struct SolveOpts {
    std::string data;
    std::string method = "diffusion";
    HyperOpts hyper;
    double tol = 1e-6;
    int max_iter = 5000;
    bool record_trace = false;
    double tau = 0.5;
    std::string split = "all";
    int jobs = 1;
    std::string out = "solve_out";
    std::string config;
};

int cmd_solve(SolveOpts& o, ConfigMap& cfg) {
    if (!o.config.empty()) cfg.apply_file(o.config);
    if (o.data.empty()) throw glearn::parameter_error("solve: --data is required");
    const glearn::Method method = glearn::method_from_string(o.method);
    const glearn::MBHyperparams hp = o.hyper.resolve(method);
    glearn::SolverConfig scfg;
    scfg.tol = o.tol;
    scfg.max_iter = o.max_iter;
    scfg.record_trace = o.record_trace;

    glearn::Dataset ds = glearn::read_dataset(o.data);
    const Split split = resolve_split(ds, o.split);
    if (split.count < 1) throw glearn::parameter_error("solve: selected split is empty");

    fs::create_directories(o.out);
    echo_run_config(cfg, "solve", o.out);

    struct Row {
        bool failed = false;
        std::string error;
        glearn::SolveResult result;
        glearn::EvalReport report;
        double objective = 0.0;
    };
    std::vector<Row> rows(split.count);

    parallel_for(o.jobs, split.count, [&](int i) {
        Row& row = rows[static_cast<std::size_t>(i)];
        const glearn::Sample& sample = ds.samples[split.begin + i];
        try {
            row.result = glearn::fixed_point_solve(method, sample.s, hp, scfg);
            row.objective = glearn::objective(row.result.final_state, sample.s,
                                              [&] {
                                                  glearn::MBHyperparams h = hp;
                                                  h.method = method;
                                                  return h;
                                              }());
            row.report = glearn::single_eval(row.result.estimate, sample.a, o.tau);
        } catch (const std::exception& e) {
            row.failed = true;
            row.error = e.what();
        }
    });

    std::string csv =
        "sample,iterations,converged,objective,final_residual,precision,recall,f1,auprc,"
        "relative_frobenius_error,mse\n";
    int failures = 0;
    glearn::EvalReport mean;
    for (int i = 0; i < split.count; ++i) {
        const Row& row = rows[static_cast<std::size_t>(i)];
        if (row.failed) {
            ++failures;
            std::cerr << "sample " << i << " failed: " << row.error << "\n";
            csv += std::to_string(i) + ",,,,,,,,,,\n";
            continue;
        }
        csv += std::to_string(i) + "," + std::to_string(row.result.iterations) + "," +
               (row.result.terminated == glearn::Termination::converged ? "1" : "0") + "," +
               fmt(row.objective) + "," + fmt(row.result.final_residual) + "," +
               fmt(row.report.precision) + "," + fmt(row.report.recall) + "," +
               fmt(row.report.f1) + "," + fmt(row.report.auprc) + "," +
               fmt(row.report.relative_frobenius_error) + "," + fmt(row.report.mse) + "\n";
        mean.precision += row.report.precision;
        mean.recall += row.report.recall;
        mean.f1 += row.report.f1;
        mean.auprc += row.report.auprc;
        mean.relative_frobenius_error += row.report.relative_frobenius_error;
        mean.mse += row.report.mse;
        if (o.record_trace) {
            std::string trace = "iteration,residual,objective\n";
            for (std::size_t it = 0; it < row.result.residual_trace.size(); ++it)
                trace += std::to_string(it + 1) + "," + fmt(row.result.residual_trace[it]) +
                         "," + fmt(row.result.objective_trace[it]) + "\n";
            char name[48];
            std::snprintf(name, sizeof(name), "objective_trace_%03d.csv", i);
            glearn::detail::write_file((fs::path(o.out) / name).string(), trace);
        }
    }
    glearn::detail::write_file((fs::path(o.out) / "solve.csv").string(), csv);

    const int ok = split.count - failures;
    json report;
    report["method"] = glearn::to_string(method);
    report["hyperparams"] = hyperparams_json(hp);
    report["samples"] = split.count;
    report["failures"] = failures;
    if (ok > 0) {
        json m;
        m["precision"] = mean.precision / ok;
        m["recall"] = mean.recall / ok;
        m["f1"] = mean.f1 / ok;
        m["auprc"] = mean.auprc / ok;
        m["relative_frobenius_error"] = mean.relative_frobenius_error / ok;
        m["mse"] = mean.mse / ok;
        report["mean"] = m;
    }
    glearn::detail::write_file((fs::path(o.out) / "report.json").string(),
                               report.dump(2) + "\n");
    std::cout << "solved " << ok << "/" << split.count << " samples";
    if (ok > 0)
        std::cout << ", mean relative error "
                  << fmt(mean.relative_frobenius_error / ok);
    std::cout << "\n";
    return failures > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts {
    std::string data;
    std::string method = "diffusion";
    int depth = 10;
    int poly_order = 1;
    bool tie_layers = false;
    int epochs = 200;
    double lr = 1e-3;
    int batch = 32;
    std::string loss = "mse";
    int patience = 0;
    double tau = 0.5;
    std::uint64_t seed = 0;
    std::string out = "train_out";
    std::string config;
};

int cmd_train(TrainOpts& o, ConfigMap& cfg) {
    if (!o.config.empty()) cfg.apply_file(o.config);
    if (o.data.empty()) throw glearn::parameter_error("train: --data is required");
    const glearn::Method method = glearn::method_from_string(o.method);
    glearn::Dataset ds = glearn::read_dataset(o.data);

    glearn::UnrollingModel model =
        glearn::make_model(method, o.depth, o.seed, o.poly_order, o.tie_layers);
    glearn::TrainConfig tc;
    tc.epochs = o.epochs;
    tc.learning_rate = o.lr;
    tc.batch_size = o.batch;
    if (o.loss == "mse")
        tc.loss_kind = glearn::LossKind::mse;
    else if (o.loss == "logistic")
        tc.loss_kind = glearn::LossKind::nll_logistic;
    else
        throw glearn::parameter_error("unknown loss: " + o.loss);
    tc.patience = o.patience;
    tc.eval_tau = o.tau;
    tc.seed = o.seed;

    fs::create_directories(o.out);
    echo_run_config(cfg, "train", o.out);

    glearn::TrainReport report = glearn::train(model, ds, tc);

    glearn::save_model(model, (fs::path(o.out) / "model.json").string());
    std::string csv = "epoch,train_loss,val_loss,seconds\n";
    for (std::size_t e = 0; e < report.train_loss.size(); ++e)
        csv += std::to_string(e) + "," + fmt(report.train_loss[e]) + "," +
               fmt(report.val_loss[e]) + "," + fmt(report.epoch_seconds[e]) + "\n";
    glearn::detail::write_file((fs::path(o.out) / "epochs.csv").string(), csv);

    json j;
    j["method"] = glearn::to_string(method);
    j["depth"] = o.depth;
    j["epochs_run"] = report.train_loss.size();
    j["best_epoch"] = report.best_epoch;
    j["best_val_loss"] = report.best_val_loss;
    j["final_train_loss"] = report.train_loss.back();
    j["final_val_loss"] = report.val_loss.back();
    j["wall_seconds"] = report.wall_seconds;
    if (ds.n_test > 0) j["test_metrics"] = eval_report_json(report.test_metrics);
    glearn::detail::write_file((fs::path(o.out) / "report.json").string(),
                               j.dump(2) + "\n");

    std::cout << "trained " << report.train_loss.size() << " epochs, best val loss "
              << fmt(report.best_val_loss) << " at epoch " << report.best_epoch << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    std::string data;
    std::string checkpoint;
    std::string split = "test";
    double tau = 0.5;
    int dump_sample = -1;
    std::string out = "eval_out";
    std::string config;
};

int cmd_eval(EvalOpts& o, ConfigMap& cfg) {
    if (!o.config.empty()) cfg.apply_file(o.config);
    if (o.data.empty() || o.checkpoint.empty())
        throw glearn::parameter_error("eval: --data and --checkpoint are required");
    glearn::Dataset ds = glearn::read_dataset(o.data);
    glearn::UnrollingModel model = glearn::load_model(o.checkpoint);
    const Split split = resolve_split(ds, o.split);
    if (split.count < 1) throw glearn::parameter_error("eval: selected split is empty");

    fs::create_directories(o.out);
    echo_run_config(cfg, "eval", o.out);

    glearn::EvalReport report =
        glearn::evaluate(model, ds, split.begin, split.count, o.tau);
    glearn::detail::write_file((fs::path(o.out) / "eval.json").string(),
                               eval_report_json(report).dump(2) + "\n");
    std::string csv =
        "precision,recall,f1,auprc,relative_frobenius_error,mse,threshold,sample_count\n" +
        fmt(report.precision) + "," + fmt(report.recall) + "," + fmt(report.f1) + "," +
        fmt(report.auprc) + "," + fmt(report.relative_frobenius_error) + "," +
        fmt(report.mse) + "," + fmt(report.threshold) + "," +
        std::to_string(report.sample_count) + "\n";
    glearn::detail::write_file((fs::path(o.out) / "eval.csv").string(), csv);

    if (o.dump_sample >= 0) {
        if (o.dump_sample >= split.count)
            throw glearn::parameter_error("eval: --dump-intermediates index out of range");
        auto [estimate, trace] =
            glearn::unroll_forward(model, ds.samples[split.begin + o.dump_sample].s);
        glearn::dump_intermediates(trace, (fs::path(o.out) / "intermediates").string());
    }

    std::cout << "eval on " << o.split << ": f1 " << fmt(report.f1)
              << ", relative error " << fmt(report.relative_frobenius_error) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gridsearch

struct GridOpts {
    std::string data;
    std::string method = "diffusion";
    std::vector<double> alphas, betas, gammas, lambdas, rhos;
    std::string metric = "relative_frobenius_error";
    std::string split = "val";
    double tau = 0.5;
    double tol = 1e-6;
    int max_iter = 5000;
    double fixed_step = 0.0;
    std::vector<double> poly_alpha;
    int jobs = 1;
    std::string out = "grid_out";
    std::string config;
};

int cmd_gridsearch(GridOpts& o, ConfigMap& cfg) {
    if (!o.config.empty()) cfg.apply_file(o.config);
    if (o.data.empty()) throw glearn::parameter_error("gridsearch: --data is required");
    const glearn::Method method = glearn::method_from_string(o.method);
    (void)metric_value(glearn::EvalReport{}, o.metric);  // validate the name early
    glearn::Dataset ds = glearn::read_dataset(o.data);
    const Split split = resolve_split(ds, o.split);
    if (split.count < 1)
        throw glearn::parameter_error("gridsearch: selected split is empty");

    const glearn::MBHyperparams base = [&] {
        glearn::MBHyperparams hp = glearn::default_hyperparams(method);
        hp.fixed_step = o.fixed_step;
        if (!o.poly_alpha.empty())
            hp.poly_alpha = Eigen::Map<const Vector>(
                o.poly_alpha.data(), static_cast<Eigen::Index>(o.poly_alpha.size()));
        return hp;
    }();

    // grid axes default to a singleton at the method default
    auto axis = [](const std::vector<double>& given, double fallback) {
        return given.empty() ? std::vector<double>{fallback} : given;
    };
    const std::vector<double> alphas = axis(o.alphas, base.alpha);
    const std::vector<double> betas = axis(o.betas, base.beta);
    const std::vector<double> gammas = axis(o.gammas, base.gamma);
    const std::vector<double> lambdas = axis(o.lambdas, base.lambda_pen);
    const std::vector<double> rhos = axis(o.rhos, base.rho_l1);

    struct Point {
        glearn::MBHyperparams hp;
        double metric = 0.0;
        bool failed = false;
        std::string error;
    };
    std::vector<Point> points;
    // Cartesian product in lexicographic order (alpha, beta, gamma, lambda, rho);
    // ties on the metric keep this order, so earlier points win
    for (double a : alphas)
        for (double b : betas)
            for (double g : gammas)
                for (double l : lambdas)
                    for (double r : rhos) {
                        Point pt;
                        pt.hp = base;
                        pt.hp.alpha = a;
                        pt.hp.beta = b;
                        pt.hp.gamma = g;
                        pt.hp.lambda_pen = l;
                        pt.hp.rho_l1 = r;
                        points.push_back(pt);
                    }

    glearn::SolverConfig scfg;
    scfg.tol = o.tol;
    scfg.max_iter = o.max_iter;

    parallel_for(o.jobs, static_cast<int>(points.size()), [&](int i) {
        Point& pt = points[static_cast<std::size_t>(i)];
        try {
            double acc = 0.0;
            for (int k = 0; k < split.count; ++k) {
                const glearn::Sample& sample = ds.samples[split.begin + k];
                glearn::SolveResult res =
                    glearn::fixed_point_solve(method, sample.s, pt.hp, scfg);
                acc += metric_value(glearn::single_eval(res.estimate, sample.a, o.tau),
                                    o.metric);
            }
            pt.metric = acc / split.count;
        } catch (const std::exception& e) {
            pt.failed = true;
            pt.error = e.what();
        }
    });

    const bool higher = metric_higher_is_better(o.metric);
    int best = -1;
    int failures = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].failed) {
            ++failures;
            std::cerr << "grid point " << i << " failed: " << points[i].error << "\n";
            continue;
        }
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        const double cur = points[i].metric, inc = points[best].metric;
        if (higher ? cur > inc : cur < inc) best = static_cast<int>(i);
    }

    // leaderboard sorted by metric, grid order breaking ties
    std::vector<int> order;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (!points[i].failed) order.push_back(static_cast<int>(i));
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return higher ? points[x].metric > points[y].metric
                      : points[x].metric < points[y].metric;
    });

    fs::create_directories(o.out);
    echo_run_config(cfg, "gridsearch", o.out);

    std::string csv = "rank,alpha,beta,gamma,lambda,rho," + o.metric + "\n";
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const Point& pt = points[static_cast<std::size_t>(order[rank])];
        csv += std::to_string(rank) + "," + fmt(pt.hp.alpha) + "," + fmt(pt.hp.beta) + "," +
               fmt(pt.hp.gamma) + "," + fmt(pt.hp.lambda_pen) + "," + fmt(pt.hp.rho_l1) +
               "," + fmt(pt.metric) + "\n";
    }
    glearn::detail::write_file((fs::path(o.out) / "leaderboard.csv").string(), csv);

    if (best < 0) throw glearn::error("gridsearch: every grid point failed");
    json bestj;
    bestj["method"] = glearn::to_string(method);
    bestj["metric"] = o.metric;
    bestj["value"] = points[static_cast<std::size_t>(best)].metric;
    bestj["hyperparams"] = hyperparams_json(points[static_cast<std::size_t>(best)].hp);
    glearn::detail::write_file((fs::path(o.out) / "best.json").string(),
                               bestj.dump(2) + "\n");
    std::cout << bestj.dump(2) << "\n";
    return failures > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// inspect

int cmd_inspect(const std::string& path) {
    glearn::Dataset ds = glearn::read_dataset(path);
    const int n = ds.samples.empty() ? 0 : ds.samples[0].a.n;
    const int p = ds.samples.empty() ? 0 : ds.samples[0].x.p;
    json j;
    j["path"] = path;
    j["format_version"] = glearn::kDatasetVersion;
    j["samples"] = ds.size();
    j["n"] = n;
    j["p_signals"] = p;
    j["similarity"] = glearn::to_string(ds.simkind);
    j["splits"] = {{"train", ds.n_train}, {"val", ds.n_val}, {"test", ds.n_test}};
    j["master_seed"] = ds.master_seed;
    j["graph_spec"] = glearn::spec_to_json(ds.gspec);
    j["signal_spec"] = glearn::spec_to_json(ds.sspec);
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph structure learning toolkit"};
    app.require_subcommand(1);

    int exit_code = 0;

    // generate ----------------------------------------------------------
    GenerateOpts gen;
    ConfigMap gen_cfg;
    CLI::App* g = app.add_subcommand("generate", "sample a synthetic dataset");
    gen_cfg.bind(*g, "graphs", "--graphs", gen.graphs, "ensemble: er|ba|ws|sbm|grid");
    gen_cfg.bind(*g, "n", "--n", gen.n, "number of nodes");
    gen_cfg.bind(*g, "p", "--p", gen.p, "er edge probability");
    gen_cfg.bind(*g, "ba_m", "--ba-m", gen.ba_m, "ba attachment count");
    gen_cfg.bind(*g, "ws_k", "--ws-k", gen.ws_k, "ws ring degree (even)");
    gen_cfg.bind(*g, "ws_p", "--ws-p", gen.ws_p, "ws rewiring probability");
    gen_cfg.bind(*g, "sbm_sizes", "--sbm-sizes", gen.sbm_sizes, "sbm block sizes");
    gen_cfg.bind(*g, "sbm_p_in", "--sbm-p-in", gen.sbm_p_in, "sbm within-block probability");
    gen_cfg.bind(*g, "sbm_p_out", "--sbm-p-out", gen.sbm_p_out,
                 "sbm between-block probability");
    gen_cfg.bind(*g, "grid_rows", "--grid-rows", gen.grid_rows, "lattice rows");
    gen_cfg.bind(*g, "grid_cols", "--grid-cols", gen.grid_cols, "lattice cols");
    gen_cfg.bind(*g, "signals", "--signals", gen.signals,
                 "signal model: smooth|diffuse|gaussian");
    gen_cfg.bind(*g, "num_signals", "--num-signals", gen.num_signals,
                 "signals per sample");
    gen_cfg.bind(*g, "eps", "--eps", gen.eps, "smooth covariance regularizer");
    gen_cfg.bind(*g, "diffuse_alpha", "--diffuse-alpha", gen.diffuse_alpha,
                 "diffusion filter coefficients");
    gen_cfg.bind(*g, "sigma", "--sigma", gen.sigma, "additive noise level");
    gen_cfg.bind(*g, "eps_pd", "--eps-pd", gen.eps_pd, "gaussian diagonal loading");
    gen_cfg.bind(*g, "similarity", "--similarity", gen.similarity,
                 "covariance|correlation|distance");
    gen_cfg.bind(*g, "train", "--train", gen.train, "training samples");
    gen_cfg.bind(*g, "val", "--val", gen.val, "validation samples");
    gen_cfg.bind(*g, "test", "--test", gen.test, "test samples");
    gen_cfg.bind(*g, "seed", "--seed", gen.seed, "master seed");
    gen_cfg.bind(*g, "out", "-o,--out", gen.out, "output dataset path");
    g->add_option("--config", gen.config, "JSON config file mirroring these flags");
    g->callback([&] { exit_code = cmd_generate(gen, gen_cfg); });

    // solve -------------------------------------------------------------
    SolveOpts sol;
    ConfigMap sol_cfg;
    CLI::App* s = app.add_subcommand("solve", "run a model-based solver per sample");
    sol_cfg.bind(*s, "data", "--data", sol.data, "dataset file");
    sol_cfg.bind(*s, "method", "--method", sol.method, "gaussian|smooth|diffusion");
    sol.hyper.bind(*s, sol_cfg);
    sol_cfg.bind(*s, "tol", "--tol", sol.tol, "convergence tolerance");
    sol_cfg.bind(*s, "max_iter", "--max-iter", sol.max_iter, "iteration cap");
    sol_cfg.bind_flag(*s, "record_trace", "--record-trace", sol.record_trace,
                      "write objective_trace files");
    sol_cfg.bind(*s, "tau", "--tau", sol.tau, "edge detection threshold");
    sol_cfg.bind(*s, "split", "--split", sol.split, "train|val|test|all");
    sol_cfg.bind(*s, "jobs", "--jobs", sol.jobs, "worker threads");
    sol_cfg.bind(*s, "out", "-o,--out", sol.out, "output directory");
    s->add_option("--config", sol.config, "JSON config file mirroring these flags");
    s->callback([&] { exit_code = cmd_solve(sol, sol_cfg); });

    // train -------------------------------------------------------------
    TrainOpts tr;
    ConfigMap tr_cfg;
    CLI::App* t = app.add_subcommand("train", "train an unrolled estimator");
    tr_cfg.bind(*t, "data", "--data", tr.data, "dataset file");
    tr_cfg.bind(*t, "method", "--method", tr.method, "gaussian|smooth|diffusion");
    tr_cfg.bind(*t, "depth", "--depth", tr.depth, "number of unrolled layers");
    tr_cfg.bind(*t, "poly_order", "--poly-order", tr.poly_order,
                "diffusion filter order");
    tr_cfg.bind_flag(*t, "tie_layers", "--tie-layers", tr.tie_layers,
                     "share parameters across layers");
    tr_cfg.bind(*t, "epochs", "--epochs", tr.epochs, "training epochs");
    tr_cfg.bind(*t, "lr", "--lr", tr.lr, "learning rate");
    tr_cfg.bind(*t, "batch", "--batch", tr.batch, "batch size");
    tr_cfg.bind(*t, "loss", "--loss", tr.loss, "mse|logistic");
    tr_cfg.bind(*t, "patience", "--patience", tr.patience,
                "early-stop patience (0 disables)");
    tr_cfg.bind(*t, "tau", "--tau", tr.tau, "edge detection threshold");
    tr_cfg.bind(*t, "seed", "--seed", tr.seed, "init and shuffle seed");
    tr_cfg.bind(*t, "out", "-o,--out", tr.out, "output directory");
    t->add_option("--config", tr.config, "JSON config file mirroring these flags");
    t->callback([&] { exit_code = cmd_train(tr, tr_cfg); });

    // eval --------------------------------------------------------------
    EvalOpts ev;
    ConfigMap ev_cfg;
    CLI::App* e = app.add_subcommand("eval", "evaluate a trained checkpoint");
    ev_cfg.bind(*e, "data", "--data", ev.data, "dataset file");
    ev_cfg.bind(*e, "checkpoint", "--checkpoint", ev.checkpoint, "model file");
    ev_cfg.bind(*e, "split", "--split", ev.split, "train|val|test|all");
    ev_cfg.bind(*e, "tau", "--tau", ev.tau, "edge detection threshold");
    ev_cfg.bind(*e, "dump_intermediates", "--dump-intermediates", ev.dump_sample,
                "dump per-layer estimates for this sample index");
    ev_cfg.bind(*e, "out", "-o,--out", ev.out, "output directory");
    e->add_option("--config", ev.config, "JSON config file mirroring these flags");
    e->callback([&] { exit_code = cmd_eval(ev, ev_cfg); });

    // gridsearch --------------------------------------------------------
    GridOpts gr;
    ConfigMap gr_cfg;
    CLI::App* gs = app.add_subcommand("gridsearch", "exhaustive hyperparameter search");
    gr_cfg.bind(*gs, "data", "--data", gr.data, "dataset file");
    gr_cfg.bind(*gs, "method", "--method", gr.method, "gaussian|smooth|diffusion");
    gr_cfg.bind(*gs, "alpha", "--alpha", gr.alphas, "alpha grid values");
    gr_cfg.bind(*gs, "beta", "--beta", gr.betas, "beta grid values");
    gr_cfg.bind(*gs, "gamma", "--gamma", gr.gammas, "gamma grid values");
    gr_cfg.bind(*gs, "lambda", "--lambda", gr.lambdas, "lambda grid values");
    gr_cfg.bind(*gs, "rho", "--rho", gr.rhos, "rho grid values");
    gr_cfg.bind(*gs, "poly_alpha", "--poly-alpha", gr.poly_alpha,
                "diffusion filter coefficients");
    gr_cfg.bind(*gs, "fixed_step", "--fixed-step", gr.fixed_step,
                "diffusion fixed step (0 = backtracking)");
    gr_cfg.bind(*gs, "metric", "--metric", gr.metric, "selection metric");
    gr_cfg.bind(*gs, "split", "--split", gr.split, "selection split");
    gr_cfg.bind(*gs, "tau", "--tau", gr.tau, "edge detection threshold");
    gr_cfg.bind(*gs, "tol", "--tol", gr.tol, "solver tolerance");
    gr_cfg.bind(*gs, "max_iter", "--max-iter", gr.max_iter, "solver iteration cap");
    gr_cfg.bind(*gs, "jobs", "--jobs", gr.jobs, "worker threads");
    gr_cfg.bind(*gs, "out", "-o,--out", gr.out, "output directory");
    gs->add_option("--config", gr.config, "JSON config file mirroring these flags");
    gs->callback([&] { exit_code = cmd_gridsearch(gr, gr_cfg); });

    // inspect -----------------------------------------------------------
    std::string inspect_path;
    CLI::App* in = app.add_subcommand("inspect", "print dataset header and metadata");
    in->add_option("--data", inspect_path, "dataset file")->required();
    in->callback([&] { exit_code = cmd_inspect(inspect_path); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    } catch (const glearn::parameter_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const glearn::dimension_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return exit_code;
}
