#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evmc/checkpoint.hpp"
#include "evmc/config.hpp"
#include "evmc/diagnostics.hpp"
#include "evmc/rng.hpp"
#include "evmc/training.hpp"

namespace fs = std::filesystem;
using namespace evmc;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string checkpoint_path;
    std::string data_path;
    std::string out_path;
    std::int64_t seed_override = -1;
    double lambda_override = -1.0;
    std::int64_t iterations_override = -1;
};

io::ExperimentConfig load_config(const CommonOptions& opts) {
    if (opts.config_path.empty()) {
        throw std::runtime_error("--config is required for this command");
    }
    io::ExperimentConfig cfg = io::load_experiment_config(opts.config_path);
    if (opts.seed_override >= 0) {
        cfg.seed = static_cast<std::uint64_t>(opts.seed_override);
        cfg.training.seed = cfg.seed;
    }
    if (opts.lambda_override >= 0.0) cfg.training.lambda = opts.lambda_override;
    if (opts.iterations_override >= 0) {
        cfg.training.iterations = static_cast<std::size_t>(opts.iterations_override);
    }
    return cfg;
}

std::string out_dir_of(const io::ExperimentConfig& cfg, const CommonOptions& opts) {
    const std::string dir = opts.out_path.empty() ? cfg.out_dir : opts.out_path;
    fs::create_directories(dir);
    return dir;
}

int cmd_simulate(const CommonOptions& opts) {
    io::ExperimentConfig cfg = load_config(opts);
    const std::string dir = out_dir_of(cfg, opts);

    std::ofstream manifest(dir + "/datasets.csv");
    if (!manifest) throw std::runtime_error("cannot write manifest in " + dir);
    manifest << "file,model,size\n";
    for (std::size_t i = 0; i < cfg.sim_count; ++i) {
        std::mt19937_64 rng = make_rng(child_seed(cfg.seed, i));
        const std::size_t size = cfg.sim_size > 0 ? cfg.sim_size : cfg.problem.draw_size(rng);
        const std::size_t j = cfg.sim_model > 0 ? static_cast<std::size_t>(cfg.sim_model - 1)
                                                : cfg.problem.draw_model(rng);
        auto theta = cfg.problem.models[j].sample_prior(rng);
        Dataset ds = cfg.problem.models[j].simulate(theta, size, rng);
        char name[64];
        std::snprintf(name, sizeof(name), "sim_%06zu.csv", i);
        write_csv_file(ds, dir + "/" + name);
        manifest << name << "," << cfg.problem.models[j].index << "," << size << "\n";
    }
    std::cout << "wrote " << cfg.sim_count << " datasets to " << dir << "\n";
    return 0;
}

int cmd_train(const CommonOptions& opts) {
    io::ExperimentConfig cfg = load_config(opts);
    const std::string dir = out_dir_of(cfg, opts);

    auto network = io::build_network(cfg, cfg.seed);
    auto checkpoint_writer = [&](std::size_t iter, const train::TrainResult& partial) {
        io::TrainingMeta meta{iter, partial.trace.empty() ? 0.0 : partial.trace.back().loss,
                              cfg.training.lambda, cfg.seed, "periodic"};
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%06zu.evmc", iter);
        io::save_checkpoint(io::make_checkpoint(*network, meta, true), dir + "/" + name);
    };

    train::TrainResult result = train::train(cfg.problem, *network, cfg.training,
                                             checkpoint_writer);

    io::TrainingMeta meta{result.iterations_run, result.final_loss, cfg.training.lambda,
                          cfg.seed, result.stop_reason};
    io::save_checkpoint(io::make_checkpoint(*network, meta, true), dir + "/checkpoint.evmc");
    train::write_trace_csv(result.trace, dir + "/trace.csv");
    std::cout << "trained " << result.iterations_run << " iterations (" << result.stop_reason
              << "), final loss " << result.final_loss << "\n"
              << "checkpoint: " << dir << "/checkpoint.evmc\n";
    return 0;
}

std::vector<std::string> collect_csv_files(const std::string& path) {
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.path().extension() == ".csv" &&
                entry.path().filename() != "datasets.csv") {
                files.push_back(entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    if (files.empty()) throw std::runtime_error("no .csv datasets found under " + path);
    return files;
}

int cmd_infer(const CommonOptions& opts) {
    if (opts.checkpoint_path.empty()) throw std::runtime_error("--checkpoint is required");
    if (opts.data_path.empty()) throw std::runtime_error("--data is required");
    io::NetworkCheckpoint cp = io::load_checkpoint(opts.checkpoint_path);
    auto network = io::restore_network(cp);

    const auto files = collect_csv_files(opts.data_path);
    std::vector<Dataset> datasets;
    datasets.reserve(files.size());
    for (const auto& f : files) datasets.push_back(read_csv_file(f, cp.kind));

    auto results = train::infer(*network, datasets);

    const std::string out = opts.out_path.empty() ? "inference.csv" : opts.out_path;
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot open for writing: " + out);
    const std::size_t j_count = network->output_count();
    os << "file";
    for (std::size_t j = 1; j <= j_count; ++j) os << ",alpha" << j;
    for (std::size_t j = 1; j <= j_count; ++j) os << ",prob" << j;
    os << ",uncertainty\n";
    char buf[64];
    for (std::size_t i = 0; i < files.size(); ++i) {
        os << fs::path(files[i]).filename().string();
        for (double a : results[i].first.alpha) {
            std::snprintf(buf, sizeof(buf), ",%.17g", a);
            os << buf;
        }
        for (double p : results[i].second.probs) {
            std::snprintf(buf, sizeof(buf), ",%.17g", p);
            os << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g\n", results[i].second.uncertainty);
        os << buf;
    }
    std::cout << "wrote " << files.size() << " inferences to " << out << "\n";
    return 0;
}

int cmd_evaluate(const CommonOptions& opts) {
    if (opts.checkpoint_path.empty()) throw std::runtime_error("--checkpoint is required");
    io::ExperimentConfig cfg = load_config(opts);
    const std::string dir = out_dir_of(cfg, opts);
    io::NetworkCheckpoint cp = io::load_checkpoint(opts.checkpoint_path);
    auto network = io::restore_network(cp);

    for (std::size_t size : cfg.eval_sizes) {
        diag::CalibrationReport report = diag::evaluate_checkpoint(
            *network, cfg.problem, cfg.validation_sets, size, child_seed(cfg.seed, size),
            cfg.eval_bins, cfg.eval_bootstrap);
        const std::string stem = dir + "/report_N" + std::to_string(size);
        diag::write_report_json(report, stem + ".json", cfg.config_echo, cfg.seed);
        diag::write_curves_csv(report, stem + "_curves.csv");
        std::cout << "N=" << size << ": accuracy " << report.accuracy << ", ECE " << report.ece
                  << ", overconfidence " << report.overconfidence << "\n";
    }
    return 0;
}

int cmd_sweep(const CommonOptions& opts) {
    if (opts.checkpoint_path.empty()) throw std::runtime_error("--checkpoint is required");
    io::ExperimentConfig cfg = load_config(opts);
    if (!cfg.has_sweep) throw std::runtime_error("config has no sweep section");
    const std::string dir = out_dir_of(cfg, opts);
    io::NetworkCheckpoint cp = io::load_checkpoint(opts.checkpoint_path);
    auto network = io::restore_network(cp);

    auto points = diag::uncertainty_sweep(*network, cfg.problem, cfg.sweep);
    diag::write_sweep_csv(points, dir + "/sweep.csv");
    for (const auto& p : points) {
        std::cout << "x=" << p.x << " mean_u=" << p.mean_uncertainty << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Amortized Bayesian model comparison with evidential networks"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* c = cmd->add_option("--config", opts.config_path, "experiment config (JSON)");
        if (needs_config) c->required();
        cmd->add_option("--seed", opts.seed_override, "override the config seed");
        cmd->add_option("--checkpoint", opts.checkpoint_path, "checkpoint file (.evmc)");
        cmd->add_option("--data", opts.data_path, "dataset CSV file or directory");
        cmd->add_option("--out", opts.out_path, "output file or directory");
        cmd->add_option("--lambda", opts.lambda_override, "override the regularization weight");
        cmd->add_option("--iterations", opts.iterations_override,
                        "override the training iteration budget");
    };

    auto* simulate = app.add_subcommand("simulate", "write simulated datasets as CSV");
    add_common(simulate, true);
    auto* train_cmd = app.add_subcommand("train", "train an evidential network");
    add_common(train_cmd, true);
    auto* infer = app.add_subcommand("infer", "amortized inference over dataset files");
    add_common(infer, false);
    auto* evaluate = app.add_subcommand("evaluate", "calibration report on fresh simulations");
    add_common(evaluate, true);
    auto* sweep = app.add_subcommand("sweep", "uncertainty curve over N, K or a parameter");
    add_common(sweep, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (train_cmd->parsed()) return cmd_train(opts);
        if (infer->parsed()) return cmd_infer(opts);
        if (evaluate->parsed()) return cmd_evaluate(opts);
        if (sweep->parsed()) return cmd_sweep(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
