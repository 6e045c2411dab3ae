// Times the OpenMP kernels against the serial reference path and checks
// that both produce identical results.
#include <chrono>
#include <cstdio>

#include "fedloc/analysis.hpp"
#include "fedloc/federation.hpp"
#include "fedloc/parallel.hpp"

using namespace fedloc;
using Clock = std::chrono::steady_clock;

template <typename Fn>
static double time_ms(Fn&& fn) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

int main() {
    const channel::AoiSpec aoi;
    const auto params = channel::default_channel(aoi, 7);
    const scenario::ScenarioConfig sc_cfg;

    std::printf("%-28s %12s %12s %8s\n", "kernel", "serial ms", "openmp ms",
                "speedup");

    auto report = [](const char* name, double serial, double parallel) {
        std::printf("%-28s %12.1f %12.1f %7.2fx\n", name, serial, parallel,
                    serial / parallel);
    };

    // scenario generation (8 clients x 200 samples x 10 measurements)
    scenario::Scenario sc_s, sc_p;
    set_parallel_enabled(false);
    const double t_sc_s = time_ms([&] {
        sc_s = scenario::make_scenario(scenario::ScenarioKind::Heterogeneous,
                                       sc_cfg, aoi, params, 42);
    });
    set_parallel_enabled(true);
    const double t_sc_p = time_ms([&] {
        sc_p = scenario::make_scenario(scenario::ScenarioKind::Heterogeneous,
                                       sc_cfg, aoi, params, 42);
    });
    report("make_scenario", t_sc_s, t_sc_p);
    for (std::size_t i = 0; i < sc_s.databases.size(); ++i)
        for (std::size_t r = 0; r < sc_s.databases[i].records.size(); ++r)
            if (sc_s.databases[i].records[r].rss !=
                sc_p.databases[i].records[r].rss) {
                std::fprintf(stderr, "MISMATCH: scenario results differ\n");
                return 1;
            }

    // federated rounds (the dominant cost of a simulate run)
    federation::FederationConfig fc;
    fc.rounds = 10;
    fc.train.local_steps = 40;
    fc.seed = 42;
    federation::FederatedResult fr_s, fr_p;
    set_parallel_enabled(false);
    const double t_fd_s = time_ms([&] {
        fr_s = federation::run_federated(sc_s.databases, sc_s.test_set, fc);
    });
    set_parallel_enabled(true);
    const double t_fd_p = time_ms([&] {
        fr_p = federation::run_federated(sc_s.databases, sc_s.test_set, fc);
    });
    report("run_federated (10 rounds)", t_fd_s, t_fd_p);
    for (std::size_t i = 0; i < fr_s.metrics.size(); ++i)
        if (fr_s.metrics[i].test_mae != fr_p.metrics[i].test_mae) {
            std::fprintf(stderr, "MISMATCH: federated metrics differ\n");
            return 1;
        }

    // coverage-gap Monte Carlo
    double cg_s = 0.0, cg_p = 0.0;
    set_parallel_enabled(false);
    const double t_cg_s = time_ms(
        [&] { cg_s = analysis::coverage_gap(sc_s.databases[0], aoi, 2000000, 3); });
    set_parallel_enabled(true);
    const double t_cg_p = time_ms(
        [&] { cg_p = analysis::coverage_gap(sc_s.databases[0], aoi, 2000000, 3); });
    report("coverage_gap (2e6 samples)", t_cg_s, t_cg_p);
    if (cg_s != cg_p) {
        std::fprintf(stderr, "MISMATCH: coverage gap differs\n");
        return 1;
    }

    std::printf("all parallel/serial results identical\n");
    return 0;
}
