#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedloc/analysis.hpp"
#include "fedloc/parallel.hpp"
#include "fedloc/config.hpp"
#include "fedloc/federation.hpp"
#include "fedloc/multifloor.hpp"

namespace fs = std::filesystem;
using namespace fedloc;

namespace {

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void check_divergence(const std::string& label,
                      const std::vector<federation::RoundMetrics>& metrics) {
    for (const auto& m : metrics) {
        if (!std::isfinite(m.test_mae)) {
            std::cerr << "warning: " << label << " diverged (non-finite MAE at round "
                      << m.round << ")\n";
            return;
        }
    }
    if (metrics.size() >= 2 &&
        metrics.back().test_mae > 10.0 * metrics.front().test_mae)
        std::cerr << "warning: " << label << " test MAE grew more than 10x; "
                  << "training likely diverged\n";
}

scenario::ScenarioKind kind_from_name(const std::string& name) {
    return name == "homogeneous" ? scenario::ScenarioKind::Homogeneous
                                 : scenario::ScenarioKind::Heterogeneous;
}

int run_simulate(const config::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const auto params = channel::default_channel(
        cfg.scenario.aoi, derive_seed(cfg.seed, 0x6368616e),
        cfg.scenario.grid_resolution);

    for (const auto& kind_name : cfg.scenario.kinds) {
        const auto sc = scenario::make_scenario(
            kind_from_name(kind_name), cfg.scenario.scenario, cfg.scenario.aoi,
            params, derive_seed(cfg.seed, 0x7363656e));

        if (cfg.centralized) {
            const auto res = federation::run_centralized(
                sc.databases, sc.test_set,
                cfg.training.rounds * cfg.training.train.local_steps,
                cfg.training.train, cfg.seed, cfg.training.hidden_layers,
                cfg.training.train.local_steps, cfg.training.init_gain);
            std::ostringstream ss;
            federation::write_metrics_csv(ss, "centralized", res.metrics);
            write_file(fs::path(cfg.out_dir) /
                           ("metrics_" + kind_name + "_centralized.csv"),
                       ss.str());
            check_divergence(kind_name + "/centralized", res.metrics);
        }
        for (const auto& strat_name : cfg.strategies) {
            federation::FederationConfig fc;
            fc.rounds = cfg.training.rounds;
            fc.train = cfg.training.train;
            fc.strategy = federation::strategy_from_name(strat_name);
            fc.seed = cfg.seed;
            fc.eval_stride = cfg.training.eval_stride;
            fc.init_gain = cfg.training.init_gain;
            fc.hidden_layers = cfg.training.hidden_layers;
            const auto res =
                federation::run_federated(sc.databases, sc.test_set, fc);
            if (res.weight_fallback)
                std::cerr << "warning: all hull areas were zero; "
                          << "fell back to data-size weights\n";
            std::ostringstream ss;
            federation::write_metrics_csv(ss, strat_name, res.metrics);
            write_file(fs::path(cfg.out_dir) /
                           ("metrics_" + kind_name + "_" + strat_name + ".csv"),
                       ss.str());
            check_divergence(kind_name + "/" + strat_name, res.metrics);
        }
    }
    write_file(fs::path(cfg.out_dir) / "manifest.json",
               config::manifest_json(cfg, "simulate"));
    return 0;
}

int run_verify(const config::ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    const auto params = channel::default_channel(
        cfg.scenario.aoi, derive_seed(cfg.seed, 0x6368616e),
        cfg.scenario.grid_resolution);

    // One well-trained single-client model for the min-distance relation.
    scenario::ClientMotionConfig motion;
    motion.start = {0.0, 0.0};
    motion.velocity = cfg.scenario.scenario.velocity_normal;
    motion.sample_interval = cfg.scenario.scenario.sample_interval;
    motion.n_samples = cfg.scenario.scenario.n_samples;
    motion.n_avg = cfg.scenario.scenario.n_avg;
    Rng rng = make_rng(cfg.seed, 0x766572);
    const auto db = scenario::build_database(0, motion, params,
                                             cfg.scenario.aoi, rng);
    neural::TrainConfig tc;
    tc.eta = cfg.verify.hull.eta;
    tc.local_steps = cfg.verify.hull.train_steps;
    tc.batch_size = cfg.training.train.batch_size;
    std::vector<int> layers = {static_cast<int>(params.n_aps())};
    layers.insert(layers.end(), cfg.training.hidden_layers.begin(),
                  cfg.training.hidden_layers.end());
    layers.push_back(2);
    auto model = neural::init_model(layers, neural::Head::Regression, cfg.seed);
    model = neural::train_local(model, neural::regression_set(db.records), tc,
                                derive_seed(cfg.seed, 0x76747261));

    const auto rep_md = analysis::verify_min_distance_relation(
        model, db.positions(), params, cfg.scenario.aoi, cfg.verify.n_users,
        cfg.verify.n_bins, cfg.scenario.scenario.n_avg,
        derive_seed(cfg.seed, 0x6d64));
    {
        std::ostringstream ss;
        analysis::write_report_csv(ss, rep_md);
        write_file(fs::path(cfg.out_dir) / "verify_min_distance.csv", ss.str());
    }

    const auto rep_ha = analysis::verify_hull_area_relation(
        cfg.verify.hull, cfg.scenario.aoi, params, derive_seed(cfg.seed, 0x6861));
    {
        std::ostringstream ss;
        analysis::write_report_csv(ss, rep_ha);
        write_file(fs::path(cfg.out_dir) / "verify_hull_area.csv", ss.str());
    }
    write_file(fs::path(cfg.out_dir) / "manifest.json",
               config::manifest_json(cfg, "verify"));
    std::cout << "min-distance relation: corr=" << rep_md.correlation
              << " verdict=" << rep_md.verdict << "\n";
    std::cout << "hull-area relation:    corr=" << rep_ha.correlation
              << " verdict=" << rep_ha.verdict << "\n";
    return 0;
}

int run_uji(const config::ExperimentConfig& cfg, const std::string& data_dir) {
    const fs::path train_path = fs::path(data_dir) / "trainingData.csv";
    const fs::path valid_path = fs::path(data_dir) / "validationData.csv";
    if (!fs::exists(train_path) || !fs::exists(valid_path)) {
        std::cerr << "UJIIndoorLoc dataset not found under " << data_dir
                  << ".\nDownload trainingData.csv and validationData.csv from "
                     "the UCI Machine Learning Repository (dataset "
                     "'UJIIndoorLoc') and place them there.\n";
        return 2;
    }

    multifloor::UjiLoadOptions opts;
    opts.building = cfg.uji.building;
    opts.sentinel_fill = cfg.uji.sentinel_fill;
    const auto train_records = multifloor::load_ujiindoorloc(train_path, opts);
    const auto valid_records = multifloor::load_ujiindoorloc(valid_path, opts);
    auto train_fp = multifloor::to_fingerprints(train_records);
    auto valid_fp = multifloor::to_fingerprints(valid_records);

    int n_floors = 0;
    for (const auto& r : train_fp) n_floors = std::max(n_floors, r.floor + 1);

    fs::create_directories(cfg.out_dir);

    // Stage 1 comparison: federated vs centralized floor classifier.
    const auto clients = multifloor::partition_clients(
        train_fp, cfg.uji.n_clients, multifloor::PartitionMode::Homogeneous,
        derive_seed(cfg.seed, 0x756a69));
    const auto cmp = multifloor::compare_floor_classifiers(
        clients, valid_fp, n_floors, cfg.uji.classifier_rounds,
        cfg.uji.classifier_train, cfg.uji.classifier_hidden,
        derive_seed(cfg.seed, 0x636c66));
    {
        std::ostringstream ss;
        ss.precision(17);
        ss << "round,federated_accuracy,centralized_accuracy\n";
        for (std::size_t t = 0; t < cmp.federated_accuracy.size(); ++t)
            ss << (t + 1) << ',' << cmp.federated_accuracy[t] << ','
               << cmp.centralized_accuracy[t] << "\n";
        write_file(fs::path(cfg.out_dir) / "uji_classifier.csv", ss.str());
    }

    // Stage 2 comparison on one floor, both partition modes.
    const multifloor::RssScaler scaler;
    const int floor = cfg.uji.regression_floor;
    std::vector<scenario::FingerprintRecord> floor_train, floor_test;
    for (const auto& r : train_fp)
        if (r.floor == floor) {
            auto rec = r;
            rec.rss = scaler.apply(rec.rss);
            floor_train.push_back(std::move(rec));
        }
    for (const auto& r : valid_fp)
        if (r.floor == floor) {
            auto rec = r;
            rec.rss = scaler.apply(rec.rss);
            floor_test.push_back(std::move(rec));
        }
    if (floor_train.empty() || floor_test.empty())
        throw std::runtime_error("no UJI records on floor " +
                                 std::to_string(floor));

    nlohmann::json sizes;
    for (const auto& mode_name : {std::string("homogeneous"),
                                  std::string("heterogeneous")}) {
        const auto mode = mode_name == "homogeneous"
                              ? multifloor::PartitionMode::Homogeneous
                              : multifloor::PartitionMode::Heterogeneous;
        const auto floor_clients = multifloor::partition_clients(
            floor_train, cfg.uji.n_clients, mode,
            derive_seed(cfg.seed, 0x666c72), cfg.uji.disc_fraction);
        for (const auto& db : floor_clients)
            sizes[mode_name].push_back(db.records.size());
        for (const auto& strat_name : cfg.strategies) {
            federation::FederationConfig fc;
            fc.rounds = cfg.uji.regressor_rounds;
            fc.train = cfg.uji.regressor_train;
            fc.strategy = federation::strategy_from_name(strat_name);
            fc.seed = cfg.seed;
            fc.hidden_layers = cfg.uji.regressor_hidden;
            fc.init_gain = 1.0;  // inputs are already scaled to unit order
            const auto res =
                federation::run_federated(floor_clients, floor_test, fc);
            std::ostringstream ss;
            federation::write_metrics_csv(ss, strat_name, res.metrics);
            write_file(fs::path(cfg.out_dir) /
                           ("uji_floor" + std::to_string(floor) + "_" +
                            mode_name + "_" + strat_name + ".csv"),
                       ss.str());
            check_divergence("uji/" + mode_name + "/" + strat_name,
                             res.metrics);
        }
    }

    // manifest with resolved parameters and client partition sizes
    nlohmann::json manifest =
        nlohmann::json::parse(config::manifest_json(cfg, "uji"));
    nlohmann::json cls_sizes;
    for (const auto& db : clients) cls_sizes.push_back(db.records.size());
    manifest["uji"]["classifier_client_sizes"] = cls_sizes;
    manifest["uji"]["floor_client_sizes"] = sizes;
    manifest["uji"]["n_floors"] = n_floors;
    write_file(fs::path(cfg.out_dir) / "manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int run_bound(const analysis::BoundParams& p) {
    double value = 0.0;
    try {
        value = analysis::convergence_bound(p);
    } catch (const std::domain_error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    std::cout.precision(12);
    std::cout << "bound(T=" << p.rounds << ", E=" << p.local_steps
              << ") = " << value << "\n\nT,bound\n";
    for (int t : {10, 20, 50, 100, 200, 500, 1000}) {
        analysis::BoundParams q = p;
        q.rounds = t;
        std::cout << t << ',' << analysis::convergence_bound(q) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated fingerprint localization simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, data_dir = ".";
    std::uint64_t seed = 0;
    bool have_seed = false, desk_scale = false, serial = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config (JSON)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "root seed override")
            ->each([&](const std::string&) { have_seed = true; });
        sub->add_flag("--desk-scale", desk_scale,
                      "shrink rounds/counts for quick runs");
        sub->add_flag("--serial", serial, "disable the OpenMP kernels");
    };

    auto* sim = app.add_subcommand("simulate",
                                   "scenario + strategy comparison runs");
    add_common(sim);
    auto* ver = app.add_subcommand("verify",
                                   "heterogeneity-characteristic experiments");
    add_common(ver);
    auto* uji = app.add_subcommand("uji", "UJIIndoorLoc multi-floor pipeline");
    add_common(uji);
    uji->add_option("--data-dir", data_dir, "directory with the UJI CSV files");

    auto* bnd = app.add_subcommand("bound", "convergence bound calculator");
    analysis::BoundParams bp;
    bnd->add_option("--rho", bp.rho, "Lipschitz constant");
    bnd->add_option("--beta", bp.beta, "smoothness constant");
    bnd->add_option("--eta", bp.eta, "learning rate");
    bnd->add_option("--delta", bp.delta, "gradient divergence bound");
    bnd->add_option("--omega", bp.omega, "1 / max distance to optimum");
    bnd->add_option("--T", bp.rounds, "global rounds");
    bnd->add_option("--E", bp.local_steps, "local steps");

    CLI11_PARSE(app, argc, argv);

    try {
        if (bnd->parsed()) return run_bound(bp);

        config::ExperimentConfig cfg = config_path.empty()
                                           ? config::default_config()
                                           : config::load_config(config_path);
        if (have_seed) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (desk_scale) config::apply_desk_scale(cfg);
        set_parallel_enabled(!serial);
        for (const auto& w : cfg.warnings)
            std::cerr << "warning: " << w << "\n";

        if (sim->parsed()) return run_simulate(cfg);
        if (ver->parsed()) return run_verify(cfg);
        if (uji->parsed()) return run_uji(cfg, data_dir);
    } catch (const config::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
