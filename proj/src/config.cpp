#include "fedloc/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fedloc::config {

using nlohmann::json;

const char* kVersionTag = "fedloc-0.1.0";

ExperimentConfig default_config() { return {}; }

namespace {

template <typename T>
void get_to(const json& j, const std::string& key, T& out,
            const std::string& path) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

void check_known(const json& j, const std::vector<std::string>& known,
                 const std::string& path) {
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

void parse_train(const json& j, neural::TrainConfig& t,
                 const std::string& path) {
    check_known(j, {"eta", "local_steps", "batch_size"}, path);
    get_to(j, "eta", t.eta, path);
    get_to(j, "local_steps", t.local_steps, path);
    get_to(j, "batch_size", t.batch_size, path);
    if (t.eta <= 0.0) throw ConfigError(path + ".eta: must be positive");
    if (t.local_steps < 1)
        throw ConfigError(path + ".local_steps: must be >= 1");
    if (t.batch_size < 1) throw ConfigError(path + ".batch_size: must be >= 1");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }

    ExperimentConfig cfg;
    check_known(j, {"scenario", "training", "strategies", "centralized",
                    "verify", "uji", "seed", "out_dir"},
                "config");

    if (j.contains("scenario")) {
        const json& s = j["scenario"];
        check_known(s, {"aoi", "n_clients", "n_samples", "n_avg",
                        "sample_interval", "velocity_normal",
                        "velocity_straggler", "test_set_size",
                        "grid_resolution", "kinds"},
                    "scenario");
        if (s.contains("aoi")) {
            check_known(s["aoi"], {"width", "height"}, "scenario.aoi");
            get_to(s["aoi"], "width", cfg.scenario.aoi.width, "scenario.aoi");
            get_to(s["aoi"], "height", cfg.scenario.aoi.height, "scenario.aoi");
            if (cfg.scenario.aoi.width <= 0.0 || cfg.scenario.aoi.height <= 0.0)
                throw ConfigError("scenario.aoi: dimensions must be positive");
        }
        auto& sc = cfg.scenario.scenario;
        get_to(s, "n_clients", sc.n_clients, "scenario");
        get_to(s, "n_samples", sc.n_samples, "scenario");
        get_to(s, "n_avg", sc.n_avg, "scenario");
        get_to(s, "sample_interval", sc.sample_interval, "scenario");
        get_to(s, "velocity_normal", sc.velocity_normal, "scenario");
        get_to(s, "velocity_straggler", sc.velocity_straggler, "scenario");
        get_to(s, "test_set_size", sc.test_set_size, "scenario");
        get_to(s, "grid_resolution", cfg.scenario.grid_resolution, "scenario");
        get_to(s, "kinds", cfg.scenario.kinds, "scenario");
        if (sc.n_clients < 2)
            throw ConfigError("scenario.n_clients: must be >= 2");
        if (sc.n_samples < 1)
            throw ConfigError("scenario.n_samples: must be >= 1");
        if (sc.n_avg < 1) throw ConfigError("scenario.n_avg: must be >= 1");
        if (sc.sample_interval <= 0.0)
            throw ConfigError("scenario.sample_interval: must be positive");
        if (cfg.scenario.grid_resolution <= 0.0)
            throw ConfigError("scenario.grid_resolution: must be positive");
        for (const auto& k : cfg.scenario.kinds)
            if (k != "homogeneous" && k != "heterogeneous")
                throw ConfigError("scenario.kinds: unknown kind '" + k + "'");
    }

    if (j.contains("training")) {
        const json& t = j["training"];
        check_known(t, {"rounds", "eta", "local_steps", "batch_size",
                        "hidden_layers", "eval_stride", "init_gain"},
                    "training");
        get_to(t, "rounds", cfg.training.rounds, "training");
        get_to(t, "init_gain", cfg.training.init_gain, "training");
        get_to(t, "hidden_layers", cfg.training.hidden_layers, "training");
        get_to(t, "eval_stride", cfg.training.eval_stride, "training");
        get_to(t, "eta", cfg.training.train.eta, "training");
        get_to(t, "local_steps", cfg.training.train.local_steps, "training");
        get_to(t, "batch_size", cfg.training.train.batch_size, "training");
        if (cfg.training.rounds < 1)
            throw ConfigError("training.rounds: must be >= 1");
        if (cfg.training.train.eta <= 0.0)
            throw ConfigError("training.eta: must be positive");
        if (cfg.training.train.local_steps < 1)
            throw ConfigError("training.local_steps: must be >= 1");
        if (cfg.training.train.batch_size < 1)
            throw ConfigError("training.batch_size: must be >= 1");
        if (cfg.training.eval_stride < 1)
            throw ConfigError("training.eval_stride: must be >= 1");
        if (cfg.training.init_gain <= 0.0)
            throw ConfigError("training.init_gain: must be positive");
        for (int h : cfg.training.hidden_layers)
            if (h < 1)
                throw ConfigError("training.hidden_layers: sizes must be >= 1");
        if (cfg.training.train.eta >= 1.0)
            cfg.warnings.push_back(
                "training.eta >= 1: training may diverge; divergence will be "
                "reported, not masked");
    }

    get_to(j, "strategies", cfg.strategies, "config");
    for (const auto& s : cfg.strategies)
        federation::strategy_from_name(s);  // validates
    get_to(j, "centralized", cfg.centralized, "config");

    if (j.contains("verify")) {
        const json& v = j["verify"];
        check_known(v, {"n_users", "n_bins", "n_dbs", "train_steps", "eta",
                        "velocity_min", "velocity_max", "test_set_size"},
                    "verify");
        get_to(v, "n_users", cfg.verify.n_users, "verify");
        get_to(v, "n_bins", cfg.verify.n_bins, "verify");
        get_to(v, "n_dbs", cfg.verify.hull.n_dbs, "verify");
        get_to(v, "train_steps", cfg.verify.hull.train_steps, "verify");
        get_to(v, "eta", cfg.verify.hull.eta, "verify");
        get_to(v, "velocity_min", cfg.verify.hull.velocity_min, "verify");
        get_to(v, "velocity_max", cfg.verify.hull.velocity_max, "verify");
        get_to(v, "test_set_size", cfg.verify.hull.test_set_size, "verify");
        cfg.verify.hull.n_bins = cfg.verify.n_bins;
        if (cfg.verify.n_users < 1)
            throw ConfigError("verify.n_users: must be >= 1");
        if (cfg.verify.hull.n_dbs < 10)
            throw ConfigError("verify.n_dbs: must be >= 10");
    }

    if (j.contains("uji")) {
        const json& u = j["uji"];
        check_known(u, {"building", "n_clients", "regression_floor",
                        "sentinel_fill", "disc_fraction", "classifier_rounds",
                        "classifier_train", "classifier_hidden",
                        "regressor_rounds", "regressor_train",
                        "regressor_hidden"},
                    "uji");
        get_to(u, "building", cfg.uji.building, "uji");
        get_to(u, "n_clients", cfg.uji.n_clients, "uji");
        get_to(u, "regression_floor", cfg.uji.regression_floor, "uji");
        get_to(u, "sentinel_fill", cfg.uji.sentinel_fill, "uji");
        get_to(u, "disc_fraction", cfg.uji.disc_fraction, "uji");
        get_to(u, "classifier_rounds", cfg.uji.classifier_rounds, "uji");
        get_to(u, "classifier_hidden", cfg.uji.classifier_hidden, "uji");
        get_to(u, "regressor_rounds", cfg.uji.regressor_rounds, "uji");
        get_to(u, "regressor_hidden", cfg.uji.regressor_hidden, "uji");
        if (u.contains("classifier_train"))
            parse_train(u["classifier_train"], cfg.uji.classifier_train,
                        "uji.classifier_train");
        if (u.contains("regressor_train"))
            parse_train(u["regressor_train"], cfg.uji.regressor_train,
                        "uji.regressor_train");
        if (cfg.uji.n_clients < 2)
            throw ConfigError("uji.n_clients: must be >= 2");
    }

    get_to(j, "seed", cfg.seed, "config");
    get_to(j, "out_dir", cfg.out_dir, "config");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void apply_desk_scale(ExperimentConfig& cfg) {
    cfg.training.rounds = std::min(cfg.training.rounds, 100);
    cfg.verify.hull.n_dbs = std::min(cfg.verify.hull.n_dbs, 100);
    cfg.verify.hull.train_steps = std::min(cfg.verify.hull.train_steps, 3000);
    cfg.uji.classifier_rounds = std::min(cfg.uji.classifier_rounds, 30);
    cfg.uji.regressor_rounds = std::min(cfg.uji.regressor_rounds, 50);
}

std::string manifest_json(const ExperimentConfig& cfg,
                          const std::string& command) {
    json j;
    j["version"] = kVersionTag;
    j["command"] = command;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["scenario"] = {
        {"aoi", {{"width", cfg.scenario.aoi.width},
                 {"height", cfg.scenario.aoi.height}}},
        {"n_clients", cfg.scenario.scenario.n_clients},
        {"n_samples", cfg.scenario.scenario.n_samples},
        {"n_avg", cfg.scenario.scenario.n_avg},
        {"sample_interval", cfg.scenario.scenario.sample_interval},
        {"velocity_normal", cfg.scenario.scenario.velocity_normal},
        {"velocity_straggler", cfg.scenario.scenario.velocity_straggler},
        {"test_set_size", cfg.scenario.scenario.test_set_size},
        {"grid_resolution", cfg.scenario.grid_resolution},
        {"kinds", cfg.scenario.kinds}};
    j["training"] = {{"rounds", cfg.training.rounds},
                     {"eta", cfg.training.train.eta},
                     {"local_steps", cfg.training.train.local_steps},
                     {"batch_size", cfg.training.train.batch_size},
                     {"hidden_layers", cfg.training.hidden_layers},
                     {"eval_stride", cfg.training.eval_stride},
                     {"init_gain", cfg.training.init_gain}};
    j["strategies"] = cfg.strategies;
    j["centralized"] = cfg.centralized;
    j["verify"] = {{"n_users", cfg.verify.n_users},
                   {"n_bins", cfg.verify.n_bins},
                   {"n_dbs", cfg.verify.hull.n_dbs},
                   {"train_steps", cfg.verify.hull.train_steps},
                   {"eta", cfg.verify.hull.eta},
                   {"velocity_min", cfg.verify.hull.velocity_min},
                   {"velocity_max", cfg.verify.hull.velocity_max},
                   {"test_set_size", cfg.verify.hull.test_set_size}};
    j["uji"] = {{"building", cfg.uji.building},
                {"n_clients", cfg.uji.n_clients},
                {"regression_floor", cfg.uji.regression_floor},
                {"sentinel_fill", cfg.uji.sentinel_fill},
                {"disc_fraction", cfg.uji.disc_fraction},
                {"classifier_rounds", cfg.uji.classifier_rounds},
                {"classifier_eta", cfg.uji.classifier_train.eta},
                {"classifier_local_steps", cfg.uji.classifier_train.local_steps},
                {"classifier_hidden", cfg.uji.classifier_hidden},
                {"regressor_rounds", cfg.uji.regressor_rounds},
                {"regressor_eta", cfg.uji.regressor_train.eta},
                {"regressor_local_steps", cfg.uji.regressor_train.local_steps},
                {"regressor_hidden", cfg.uji.regressor_hidden}};
    j["warnings"] = cfg.warnings;
    return j.dump(2) + "\n";
}

}  // namespace fedloc::config
