#include "evmc/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "evmc/rng.hpp"

namespace evmc::io {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        if (!allowed.count(key)) {
            throw std::invalid_argument("config: " + path + "." + key + ": unknown field");
        }
    }
}

template <typename T>
T get_field(const json& obj, const std::string& path, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: " + path + "." + key + ": wrong type");
    }
}

template <typename T>
T require_field(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) {
        throw std::invalid_argument("config: " + path + "." + key + ": missing required field");
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: " + path + "." + key + ": wrong type");
    }
}

arch::InvariantNetConfig parse_invariant(const json& a, const std::string& path) {
    reject_unknown(a, path, {"type", "equivariant_modules", "inner_depth", "hidden_width",
                             "pooled_width"});
    arch::InvariantNetConfig cfg;
    cfg.equivariant_modules = get_field<std::size_t>(a, path, "equivariant_modules",
                                                     cfg.equivariant_modules);
    cfg.inner_depth = get_field<std::size_t>(a, path, "inner_depth", cfg.inner_depth);
    cfg.hidden_width = get_field<std::size_t>(a, path, "hidden_width", cfg.hidden_width);
    cfg.pooled_width = get_field<std::size_t>(a, path, "pooled_width", cfg.pooled_width);
    return cfg;
}

arch::SequenceNetConfig parse_sequence(const json& a, const std::string& path) {
    reject_unknown(a, path, {"type", "lstm_hidden", "conv", "head"});
    arch::SequenceNetConfig cfg;
    cfg.lstm_hidden = get_field<std::size_t>(a, path, "lstm_hidden", cfg.lstm_hidden);
    if (a.contains("conv")) {
        cfg.conv.clear();
        std::size_t i = 0;
        for (const auto& c : a.at("conv")) {
            const std::string cpath = path + ".conv[" + std::to_string(i++) + "]";
            reject_unknown(c, cpath, {"filters", "kernel", "stride"});
            arch::ConvSpec spec;
            spec.filters = require_field<std::size_t>(c, cpath, "filters");
            spec.kernel = require_field<std::size_t>(c, cpath, "kernel");
            spec.stride = get_field<std::size_t>(c, cpath, "stride", 1);
            cfg.conv.push_back(spec);
        }
    }
    cfg.head = get_field<std::vector<std::size_t>>(a, path, "head", cfg.head);
    return cfg;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
    }
    reject_unknown(root, "$", {"problem", "seed", "out_dir", "problem_options", "architecture",
                               "training", "evaluation", "sweep", "simulate"});

    ExperimentConfig cfg;
    cfg.problem_id = require_field<std::string>(root, "$", "problem");
    cfg.seed = require_field<std::uint64_t>(root, "$", "seed");
    cfg.out_dir = get_field<std::string>(root, "$", "out_dir", ".");

    const json opts = root.contains("problem_options") ? root.at("problem_options")
                                                       : json::object();
    std::size_t input_dim = 0;
    if (cfg.problem_id == "beta_binomial") {
        reject_unknown(opts, "$.problem_options",
                       {"a1", "b1", "a2", "b2", "n_min", "n_max"});
        cfg.problem = sim::beta_binomial_problem(
            get_field<double>(opts, "$.problem_options", "a1", 1.0),
            get_field<double>(opts, "$.problem_options", "b1", 1.0),
            get_field<double>(opts, "$.problem_options", "a2", 30.0),
            get_field<double>(opts, "$.problem_options", "b2", 30.0),
            get_field<std::size_t>(opts, "$.problem_options", "n_min", 1),
            get_field<std::size_t>(opts, "$.problem_options", "n_max", 100));
        cfg.is_invariant = true;
        input_dim = 1;
    } else if (cfg.problem_id == "gmm_grid") {
        reject_unknown(opts, "$.problem_options", {"grid_side", "n_min", "n_max"});
        sim::GmmGridConfig gmm;
        gmm.grid_side = get_field<std::size_t>(opts, "$.problem_options", "grid_side", 20);
        cfg.problem = sim::gmm_problem(
            gmm, get_field<std::size_t>(opts, "$.problem_options", "n_min", 1),
            get_field<std::size_t>(opts, "$.problem_options", "n_max", 250));
        cfg.is_invariant = true;
        input_dim = 2;
    } else if (cfg.problem_id == "mjp") {
        reject_unknown(opts, "$.problem_options",
                       {"theta_max", "grid_points", "t_max", "z0", "y0"});
        sim::GillespieConfig gill;
        gill.t_max = get_field<double>(opts, "$.problem_options", "t_max", gill.t_max);
        gill.z0 = get_field<int>(opts, "$.problem_options", "z0", gill.z0);
        gill.y0 = get_field<int>(opts, "$.problem_options", "y0", gill.y0);
        cfg.problem = sim::mjp_problem(
            get_field<double>(opts, "$.problem_options", "theta_max", 100.0),
            get_field<std::size_t>(opts, "$.problem_options", "grid_points", 100), gill);
        cfg.is_invariant = false;
        input_dim = 3;
    } else if (cfg.problem_id == "eam") {
        reject_unknown(opts, "$.problem_options",
                       {"n_models", "n_min", "n_max", "step", "time_cap"});
        sim::EamConfig eam;
        eam.step = get_field<double>(opts, "$.problem_options", "step", eam.step);
        eam.time_cap = get_field<double>(opts, "$.problem_options", "time_cap", eam.time_cap);
        cfg.problem = sim::eam_problem(
            get_field<int>(opts, "$.problem_options", "n_models", 6),
            get_field<std::size_t>(opts, "$.problem_options", "n_min", 1),
            get_field<std::size_t>(opts, "$.problem_options", "n_max", 300), eam);
        cfg.is_invariant = true;
        input_dim = 3;
    } else if (cfg.problem_id == "hh") {
        reject_unknown(opts, "$.problem_options",
                       {"i_inj", "sigma", "dt", "t_min", "t_max"});
        sim::HHConfig hh;
        hh.i_inj = get_field<double>(opts, "$.problem_options", "i_inj", hh.i_inj);
        hh.sigma = get_field<double>(opts, "$.problem_options", "sigma", hh.sigma);
        hh.dt = get_field<double>(opts, "$.problem_options", "dt", hh.dt);
        cfg.problem = sim::hh_problem(
            hh, get_field<std::size_t>(opts, "$.problem_options", "t_min", 100),
            get_field<std::size_t>(opts, "$.problem_options", "t_max", 400));
        cfg.is_invariant = false;
        input_dim = 1;
    } else {
        throw std::invalid_argument("config: $.problem: unknown problem id '" + cfg.problem_id +
                                    "'");
    }

    if (root.contains("architecture")) {
        const json& a = root.at("architecture");
        const std::string type = get_field<std::string>(
            a, "$.architecture", "type", cfg.is_invariant ? "invariant" : "sequence");
        if (type == "invariant") {
            if (!cfg.is_invariant) {
                throw std::invalid_argument(
                    "config: $.architecture.type: invariant network cannot consume "
                    "time-series data");
            }
            cfg.invariant_config = parse_invariant(a, "$.architecture");
        } else if (type == "sequence") {
            if (cfg.is_invariant) {
                throw std::invalid_argument(
                    "config: $.architecture.type: sequence network expects time-series data");
            }
            cfg.sequence_config = parse_sequence(a, "$.architecture");
        } else {
            throw std::invalid_argument("config: $.architecture.type: unknown type '" + type +
                                        "'");
        }
    }
    cfg.invariant_config.input_dim = input_dim;
    cfg.invariant_config.output_count = cfg.problem.model_count();
    cfg.sequence_config.input_dim = input_dim;
    cfg.sequence_config.output_count = cfg.problem.model_count();
    if (cfg.is_invariant) {
        cfg.invariant_config.validate();
    } else {
        cfg.sequence_config.validate();
    }

    if (root.contains("training")) {
        const json& t = root.at("training");
        reject_unknown(t, "$.training",
                       {"batch_size", "iterations", "lambda", "anneal_lambda", "lambda_ramp",
                        "learning_rate",
                        "lr_decay", "lr_decay_steps", "early_stop", "plateau_window",
                        "plateau_rel_change", "shards", "pipeline", "sim_threads",
                        "checkpoint_every"});
        auto& tc = cfg.training;
        tc.batch_size = get_field<std::size_t>(t, "$.training", "batch_size", tc.batch_size);
        tc.iterations = get_field<std::size_t>(t, "$.training", "iterations", tc.iterations);
        tc.lambda = get_field<double>(t, "$.training", "lambda", tc.lambda);
        tc.anneal_lambda = get_field<bool>(t, "$.training", "anneal_lambda", tc.anneal_lambda);
        tc.lambda_ramp = get_field<std::size_t>(t, "$.training", "lambda_ramp", tc.lambda_ramp);
        tc.adam.learning_rate =
            get_field<double>(t, "$.training", "learning_rate", tc.adam.learning_rate);
        tc.adam.decay_rate = get_field<double>(t, "$.training", "lr_decay", tc.adam.decay_rate);
        tc.adam.decay_steps =
            get_field<double>(t, "$.training", "lr_decay_steps", tc.adam.decay_steps);
        tc.early_stop = get_field<bool>(t, "$.training", "early_stop", tc.early_stop);
        tc.plateau_window =
            get_field<std::size_t>(t, "$.training", "plateau_window", tc.plateau_window);
        tc.plateau_rel_change =
            get_field<double>(t, "$.training", "plateau_rel_change", tc.plateau_rel_change);
        tc.shards = get_field<std::size_t>(t, "$.training", "shards", tc.shards);
        tc.pipeline = get_field<bool>(t, "$.training", "pipeline", tc.pipeline);
        tc.sim_threads = get_field<std::size_t>(t, "$.training", "sim_threads", tc.sim_threads);
        tc.checkpoint_every =
            get_field<std::size_t>(t, "$.training", "checkpoint_every", tc.checkpoint_every);
    }
    cfg.training.seed = cfg.seed;
    cfg.training.validate();

    if (root.contains("evaluation")) {
        const json& e = root.at("evaluation");
        reject_unknown(e, "$.evaluation", {"validation_sets", "sizes", "bins", "bootstrap"});
        cfg.validation_sets =
            get_field<std::size_t>(e, "$.evaluation", "validation_sets", cfg.validation_sets);
        cfg.eval_sizes = get_field<std::vector<std::size_t>>(e, "$.evaluation", "sizes", {});
        cfg.eval_bins = get_field<std::size_t>(e, "$.evaluation", "bins", cfg.eval_bins);
        cfg.eval_bootstrap =
            get_field<std::size_t>(e, "$.evaluation", "bootstrap", cfg.eval_bootstrap);
    }
    if (cfg.eval_sizes.empty()) cfg.eval_sizes = {cfg.problem.size_max};

    if (root.contains("sweep")) {
        const json& s = root.at("sweep");
        reject_unknown(s, "$.sweep", {"type", "grid", "sets_per_point", "size", "model",
                                      "pinned_theta", "sweep_index"});
        cfg.has_sweep = true;
        const std::string type = require_field<std::string>(s, "$.sweep", "type");
        if (type == "N") {
            cfg.sweep.kind = diag::SweepSpec::Kind::over_n;
        } else if (type == "K") {
            cfg.sweep.kind = diag::SweepSpec::Kind::over_k;
        } else if (type == "parameter") {
            cfg.sweep.kind = diag::SweepSpec::Kind::over_parameter;
        } else {
            throw std::invalid_argument("config: $.sweep.type: expected N, K or parameter");
        }
        cfg.sweep.grid = require_field<std::vector<double>>(s, "$.sweep", "grid");
        cfg.sweep.sets_per_point =
            get_field<std::size_t>(s, "$.sweep", "sets_per_point", cfg.sweep.sets_per_point);
        cfg.sweep.size = get_field<std::size_t>(s, "$.sweep", "size", 0);
        cfg.sweep.model = get_field<std::size_t>(s, "$.sweep", "model", 1);
        cfg.sweep.pinned_theta =
            get_field<std::vector<double>>(s, "$.sweep", "pinned_theta", {});
        cfg.sweep.sweep_index = get_field<std::size_t>(s, "$.sweep", "sweep_index", 0);
        cfg.sweep.seed = child_seed(cfg.seed, 0x51ee9);
        cfg.sweep.validate();
    }

    if (root.contains("simulate")) {
        const json& s = root.at("simulate");
        reject_unknown(s, "$.simulate", {"count", "size", "model"});
        cfg.sim_count = get_field<std::size_t>(s, "$.simulate", "count", cfg.sim_count);
        cfg.sim_size = get_field<std::size_t>(s, "$.simulate", "size", 0);
        cfg.sim_model = get_field<int>(s, "$.simulate", "model", 0);
        if (cfg.sim_model < 0 ||
            static_cast<std::size_t>(cfg.sim_model) > cfg.problem.model_count()) {
            throw std::invalid_argument("config: $.simulate.model: out of range");
        }
    }

    cfg.config_echo = root.dump();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

std::unique_ptr<arch::EvidentialNetwork> build_network(const ExperimentConfig& config,
                                                       std::uint64_t init_seed) {
    if (config.is_invariant) {
        return std::make_unique<arch::InvariantNetwork>(config.invariant_config, init_seed);
    }
    return std::make_unique<arch::SequenceNetwork>(config.sequence_config, init_seed);
}

} // namespace evmc::io
