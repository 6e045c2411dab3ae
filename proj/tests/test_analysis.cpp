#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fedloc/analysis.hpp"

using namespace fedloc;
using namespace fedloc::analysis;

namespace {

// high-precision reference computed with long doubles, independent of
// the library implementation
long double bound_oracle(long double rho, long double beta, long double eta,
                         long double delta, long double omega, int rounds,
                         int local_steps) {
    const long double h =
        (delta / beta) * (powl(eta * beta + 1.0L, local_steps) - 1.0L) -
        eta * delta * local_steps;
    const long double phi = omega * (1.0L - beta * eta / 2.0L);
    const long double a = 1.0L / (2.0L * eta * phi * rounds);
    return a + sqrtl(a * a + rho * h / (eta * phi * local_steps)) + rho * h;
}

FingerprintDatabase grid_db(double pitch, double extent) {
    FingerprintDatabase db;
    for (double x = pitch / 2; x < extent; x += pitch)
        for (double y = pitch / 2; y < extent; y += pitch)
            db.records.push_back({{-40.0}, {x, y}});
    db.refresh_hull();
    return db;
}

}  // namespace

TEST_CASE("h vanishes at zero and one local step") {
    CHECK(h_function(0, 0.1, 2.0, 3.0) == 0.0);
    CHECK(h_function(1, 0.1, 2.0, 3.0) == 0.0);
}

TEST_CASE("h at two steps has the closed form eta^2 beta delta") {
    // (d/b)((eb+1)^2 - 1) - 2ed = (d/b)(e^2 b^2 + 2eb) - 2ed = e^2 b d
    CHECK(h_function(2, 0.1, 1.0, 1.0) ==
          doctest::Approx(0.01).epsilon(1e-12));
    CHECK(h_function(2, 0.05, 2.0, 3.0) ==
          doctest::Approx(0.05 * 0.05 * 2.0 * 3.0).epsilon(1e-12));
}

TEST_CASE("h grows with the number of local steps") {
    double prev = h_function(1, 0.01, 1.0, 0.5);
    for (int e = 2; e <= 64; e *= 2) {
        const double cur = h_function(e, 0.01, 1.0, 0.5);
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("bound collapses to 1/(eta phi T) when clients agree") {
    BoundParams p;
    p.rho = 1.0;
    p.beta = 1.0;
    p.eta = 0.01;
    p.delta = 0.0;
    p.omega = 1.0;
    p.rounds = 100;
    p.local_steps = 40;
    const double phi = p.omega * (1.0 - p.beta * p.eta / 2.0);
    CHECK(convergence_bound(p) ==
          doctest::Approx(1.0 / (p.eta * phi * p.rounds)).epsilon(1e-12));
}

TEST_CASE("bound matches a long-double oracle") {
    BoundParams p;
    p.rho = 1.0;
    p.beta = 1.0;
    p.eta = 0.01;
    p.delta = 0.1;
    p.omega = 1.0;
    p.rounds = 100;
    p.local_steps = 40;
    const double expect = static_cast<double>(
        bound_oracle(p.rho, p.beta, p.eta, p.delta, p.omega, p.rounds,
                     p.local_steps));
    CHECK(convergence_bound(p) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("bound decreases monotonically in the number of rounds") {
    BoundParams p;
    p.eta = 0.01;
    p.delta = 0.1;
    double prev = std::numeric_limits<double>::infinity();
    for (int t : {10, 20, 50, 100, 200, 500, 1000}) {
        p.rounds = t;
        const double b = convergence_bound(p);
        CHECK(b < prev);
        CHECK(b > 0.0);
        prev = b;
    }
}

TEST_CASE("bound rejects eta >= 1/beta") {
    BoundParams p;
    p.beta = 2.0;
    p.eta = 0.5;
    CHECK_THROWS_AS(convergence_bound(p), std::domain_error);
    p.eta = 0.7;
    CHECK_THROWS_WITH(convergence_bound(p),
                      doctest::Contains("bound inapplicable"));
}

TEST_CASE("pearson fixtures") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0));
    CHECK(pearson({1, 2, 3}, {5, 5, 5}) == 0.0);  // zero variance
    CHECK(pearson({1, 1, 1}, {1, 2, 3}) == 0.0);
}

TEST_CASE("binned correlation verdicts") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 200; ++i) {
        xs.push_back(i * 0.1);
        ys.push_back(3.0 + i * 0.1 * 2.0);
    }
    auto rep = binned_correlation(xs, ys, 10);
    CHECK(rep.verdict == "positive");
    CHECK(rep.correlation > 0.99);
    CHECK(rep.n_points == 200);
    CHECK(rep.bin_edges.size() == 11);

    for (double& y : ys) y = 42.0;
    rep = binned_correlation(xs, ys, 10);
    CHECK(rep.verdict == "flat");

    for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = 100.0 - xs[i];
    rep = binned_correlation(xs, ys, 10);
    CHECK(rep.verdict == "negative");
    CHECK(rep.correlation < -0.99);

    std::ostringstream ss;
    write_report_csv(ss, rep);
    CHECK(ss.str().rfind("bin_lo,bin_hi,count,mean", 0) == 0);
    CHECK(ss.str().find("verdict=negative") != std::string::npos);

    rep = binned_correlation(xs, ys, 1);
    CHECK(rep.verdict == "insufficient bins");

    // all points in one spot: no x spread to bin over
    rep = binned_correlation({1, 1, 1, 1}, {2, 3, 4, 5}, 5);
    CHECK(rep.verdict == "flat");
}

TEST_CASE("coverage gap of a center point matches the analytic constant") {
    // mean distance from a uniform point in a 50x50 square to its
    // center: 50 * (sqrt(2) + ln(1 + sqrt(2))) / 6
    FingerprintDatabase db;
    db.records.push_back({{-40.0}, {25.0, 25.0}});
    const AoiSpec aoi;
    const double expect = 50.0 * (std::sqrt(2.0) + std::log(1.0 + std::sqrt(2.0))) / 6.0;
    const double got = coverage_gap(db, aoi, 1000000, 3);
    CHECK(got == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("coverage gap of a dense grid scales with the pitch") {
    // for a fine grid of pitch h, a uniform point lands in some cell
    // and the expected distance to the nearest center is
    // h * (sqrt(2) + ln(1 + sqrt(2))) / 6 ~= 0.3826 h
    const double k = (std::sqrt(2.0) + std::log(1.0 + std::sqrt(2.0))) / 6.0;
    for (double pitch : {5.0, 2.0}) {
        const auto db = grid_db(pitch, 50.0);
        const double got = coverage_gap(db, AoiSpec{}, 400000, 11);
        CHECK(got == doctest::Approx(k * pitch).epsilon(0.02));
    }
}

TEST_CASE("coverage gap shrinks when positions are added") {
    const AoiSpec aoi;
    FingerprintDatabase sparse = grid_db(25.0, 50.0);
    FingerprintDatabase dense = sparse;
    dense.records.push_back({{-40.0}, {5.0, 45.0}});
    dense.records.push_back({{-40.0}, {45.0, 5.0}});
    CHECK(coverage_gap(dense, aoi, 200000, 5) <
          coverage_gap(sparse, aoi, 200000, 5));
}

TEST_CASE("coverage gap is deterministic and converges with samples") {
    const auto db = grid_db(10.0, 50.0);
    const AoiSpec aoi;
    CHECK(coverage_gap(db, aoi, 50000, 9) == coverage_gap(db, aoi, 50000, 9));
    const double big = coverage_gap(db, aoi, 2000000, 9);
    const double mid = coverage_gap(db, aoi, 500000, 10);
    CHECK(mid == doctest::Approx(big).epsilon(0.01));
}

TEST_CASE("gradient divergence proxy is zero for identical clients") {
    FingerprintDatabase db;
    for (int i = 0; i < 6; ++i)
        db.records.push_back({{-40.0 - i, -50.0 + i}, {1.0 * i, 2.0 * i}});
    db.refresh_hull();
    auto db2 = db;
    db2.client_id = 1;
    const auto model = neural::init_model({2, 8, 2}, neural::Head::Regression, 3);
    CHECK(delta_from_gradients({db, db2}, model, {0.5, 0.5}) == 0.0);
}

TEST_CASE("gradient divergence proxy closed form on a linear model") {
    // single linear layer, zero parameters: prediction (0,0), unit
    // error vector -pos/||pos||, grad_w = outer(unit err, x).
    neural::MlpModel m2;
    m2.layer_sizes = {1, 2};
    m2.head = neural::Head::Regression;
    m2.weights = {{0.0, 0.0}};
    m2.biases = {{0.0, 0.0}};
    // client a: x=2, pos (3, 4), ||err|| = 5, unit err = (-0.6, -0.8)
    // grad_w = (-0.6*2, -0.8*2) = (-1.2, -1.6); grad_b = (-0.6, -0.8)
    FingerprintDatabase ca, cb;
    ca.records.push_back({{2.0}, {3.0, 4.0}});
    // client b: x=2, pos (-3, 4): unit err = (0.6, -0.8)
    // grad_w = (1.2, -1.6); grad_b = (0.6, -0.8)
    cb.records.push_back({{2.0}, {-3.0, 4.0}});
    // global grad (uniform merge of both records):
    //   w: (0, -1.6), b: (0, -0.8)
    // delta_a = ||(-1.2, 0, -0.6, 0)|| = sqrt(1.8); same for b
    const double expect = std::sqrt(1.44 + 0.36);
    CHECK(delta_from_gradients({ca, cb}, m2, {0.5, 0.5}) ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("heterogeneous scenarios show larger divergence than homogeneous") {
    const AoiSpec aoi;
    int larger = 0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto params = channel::default_channel(aoi, seed);
        scenario::ScenarioConfig cfg;
        cfg.n_samples = 60;
        cfg.n_avg = 2;
        cfg.test_set_size = 10;
        const auto homo = scenario::make_scenario(
            scenario::ScenarioKind::Homogeneous, cfg, aoi, params, seed);
        const auto hetero = scenario::make_scenario(
            scenario::ScenarioKind::Heterogeneous, cfg, aoi, params, seed);
        const auto model = neural::init_model(
            {static_cast<int>(params.n_aps()), 64, 2},
            neural::Head::Regression, seed);
        const auto wh =
            federation::compute_weights(homo.databases,
                                        federation::Strategy::Uniform);
        const auto we =
            federation::compute_weights(hetero.databases,
                                        federation::Strategy::Uniform);
        if (delta_from_gradients(hetero.databases, model, we.weights) >
            delta_from_gradients(homo.databases, model, wh.weights))
            ++larger;
    }
    CHECK(larger >= 4);
}
