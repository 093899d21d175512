// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "witl/channel_model.hpp"
#include "witl/scenario.hpp"
#include "witl/synth.hpp"

using namespace witl;
using namespace witl::channel_model;

namespace {

constexpr double pi = std::numbers::pi;

double residual(const FresnelGeometry &g, const Point2 &q, int n) {
    const double d_tx = std::hypot(q.x - g.tx.x, q.y - g.tx.y);
    const double d_rx = std::hypot(q.x - g.rx.x, q.y - g.rx.y);
    const double d = std::hypot(g.rx.x - g.tx.x, g.rx.y - g.tx.y);
    return d_tx + d_rx - d - n * g.lambda / 2.0;
}

// Independent evaluation of the fluctuation term; the algebraic form extends
// smoothly past the parameter domain, which keeps central differences valid
// at the rho boundaries.
double fluct(double k, double rho, double theta) {
    return 2.0 * (k + rho) * (1.0 - rho) * std::cos(theta) / ((k + 1.0) * (k + 1.0));
}

// Central finite difference oracles for the fluctuation calculus.
double fd_dk(double k, double rho, double theta) {
    const double h = 1e-5 * (1.0 + k);
    return (fluct(k + h, rho, theta) - fluct(k - h, rho, theta)) / (2.0 * h);
}

double fd_drho(double k, double rho, double theta) {
    const double h = 1e-6;
    return (fluct(k, rho + h, theta) - fluct(k, rho - h, theta)) / (2.0 * h);
}

RiceanChannelParams params(double k, double rho, double theta) {
    RiceanChannelParams p;
    p.k_factor = k;
    p.rho = rho;
    p.theta = theta;
    return p;
}

// Independent Ricean sample generator for the moment-estimator oracle.
CsiTrace ricean_trace(double k, std::size_t n, std::uint64_t seed) {
    CsiTrace t;
    t.sample_rate_hz = 1000;
    t.n_streams = 1;
    t.n_subcarriers = 1;
    t.samples.resize(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double los = std::sqrt(k / (k + 1.0));
    const double sigma = std::sqrt(1.0 / (k + 1.0) / 2.0);
    const std::complex<double> los_c = std::polar(los, 0.7);
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> v = los_c + sigma * std::complex<double>(g(rng), g(rng));
        t.samples[i] = std::complex<float>(static_cast<float>(v.real()),
                                           static_cast<float>(v.imag()));
    }
    return t;
}

double peak_to_peak_amplitude(const CsiTrace &t) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < t.n_frames(); ++i) {
        const double a = std::abs(std::complex<double>(t.at(i, 0, 0)));
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    return hi - lo;
}

} // namespace

TEST_CASE("fresnel boundary point at the semi-minor vertex") {
    FresnelGeometry g{{0.0, 0.0}, {1.2, 0.0}, 0.06};
    const Point2 q = fresnel_boundary_point(g, 1, pi / 2.0);
    // Ellipse identity: b = sqrt(a^2 - c^2) = sqrt(0.615^2 - 0.6^2) = 0.135.
    CHECK(q.x == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(q.y == doctest::Approx(0.135).epsilon(1e-9));
    CHECK(std::abs(residual(g, q, 1)) < 1e-9);
}

TEST_CASE("fresnel boundary point on the axis lies n*lambda/4 beyond rx") {
    FresnelGeometry g{{0.0, 0.0}, {1.2, 0.0}, 0.06};
    const Point2 q = fresnel_boundary_point(g, 1, 0.0);
    CHECK(q.y == doctest::Approx(0.0));
    CHECK(q.x - g.rx.x == doctest::Approx(0.06 / 4.0).epsilon(1e-12));
    CHECK(std::abs(residual(g, q, 1)) < 1e-9);
}

TEST_CASE("fresnel residual holds over random geometries") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-10.0, 10.0);
    std::uniform_real_distribution<double> az(0.0, 2.0 * pi);
    std::uniform_int_distribution<int> zone(1, 12);
    for (int i = 0; i < 2000; ++i) {
        FresnelGeometry g{{coord(rng), coord(rng)}, {coord(rng), coord(rng)}, 0.0571};
        if (std::hypot(g.rx.x - g.tx.x, g.rx.y - g.tx.y) < 1e-3)
            continue;
        const int n = zone(rng);
        const Point2 q = fresnel_boundary_point(g, n, az(rng));
        CHECK(std::abs(residual(g, q, n)) < 1e-9);
    }
}

TEST_CASE("fresnel rejects degenerate geometry and bad zone index") {
    FresnelGeometry g{{1.0, 2.0}, {1.0, 2.0}, 0.06};
    CHECK_THROWS_AS(fresnel_boundary_point(g, 1, 0.0), std::invalid_argument);
    FresnelGeometry ok{{0.0, 0.0}, {1.0, 0.0}, 0.06};
    CHECK_THROWS_AS(fresnel_boundary_point(ok, 0, 0.0), std::invalid_argument);
}

TEST_CASE("amplitude fluctuation closed form") {
    CHECK(amplitude_fluctuation(params(1.0, 0.5, 0.0)) ==
          doctest::Approx(0.375).epsilon(1e-14));
    CHECK(amplitude_fluctuation(params(7.3, 1.0, 0.4)) == doctest::Approx(0.0));
    CHECK(std::abs(amplitude_fluctuation(params(3.0, 0.2, pi / 2.0))) < 1e-12);
}

TEST_CASE("power split |Hs| + |Hd| = 1") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uk(0.0, 500.0);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const RiceanChannelParams p = params(uk(rng), ur(rng), 0.0);
        CHECK(p.static_magnitude() + p.dynamic_magnitude() ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("derivative in K: stationary point, sign, and FD agreement") {
    // Zero of f'(K) at K = 1 - 2*rho.
    CHECK(std::abs(d_fluctuation_dk(params(0.4, 0.3, 0.0))) < 1e-15);
    // rho = 0.7, K = 52: negative slope, matching the finite difference.
    const double analytic = d_fluctuation_dk(params(52.0, 0.7, 0.0));
    CHECK(analytic < 0.0);
    CHECK(std::abs(analytic - fd_dk(52.0, 0.7, 0.0)) < 1e-6);
    // (1 - rho) factor kills the derivative at rho = 1.
    CHECK(d_fluctuation_dk(params(3.0, 1.0, 0.0)) == doctest::Approx(0.0));
}

TEST_CASE("derivative in rho: value, stationary point, sign flip") {
    // K = 1, rho = 1: f'(rho) = -1 under both the closed form and the FD
    // oracle of the fluctuation term.
    CHECK(d_fluctuation_drho(params(1.0, 1.0, 0.0)) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(d_fluctuation_drho(params(1.0, 1.0, 0.0)) - fd_drho(1.0, 1.0, 0.0)) <
          1e-6);
    // At K = 1, rho = 0 the slope vanishes (stationary locus rho = (1-K)/2).
    CHECK(std::abs(d_fluctuation_drho(params(1.0, 0.0, 0.0))) < 1e-12);
    CHECK(std::abs(fd_drho(1.0, 0.0, 0.0)) < 1e-9);
    // Stationary point inside [0,1] for K < 1.
    const double k = 0.5;
    const double rho_star = (1.0 - k) / 2.0;
    CHECK(std::abs(d_fluctuation_drho(params(k, rho_star, 0.0))) < 1e-15);
    // FD sweep: positive below the stationary point, negative above.
    CHECK(fd_drho(k, rho_star - 0.1, 0.0) > 0.0);
    CHECK(fd_drho(k, rho_star + 0.1, 0.0) < 0.0);
    CHECK(d_fluctuation_drho(params(k, rho_star - 0.1, 0.0)) > 0.0);
    CHECK(d_fluctuation_drho(params(k, rho_star + 0.1, 0.0)) < 0.0);
}

TEST_CASE("analytic derivatives match central finite differences on a grid") {
    for (int i = 0; i < 100; ++i) {
        const double k = 0.05 + 10.0 * i / 99.0;
        for (int j = 0; j < 100; ++j) {
            const double rho = 0.004 + 0.99 * j / 99.0;
            const double a_k = d_fluctuation_dk(params(k, rho, 0.3));
            const double f_k = fd_dk(k, rho, 0.3);
            CHECK(std::abs(a_k - f_k) <= 1e-6 * std::max({std::abs(a_k), std::abs(f_k), 1e-3}));
            const double a_r = d_fluctuation_drho(params(k, rho, 0.3));
            const double f_r = fd_drho(k, rho, 0.3);
            CHECK(std::abs(a_r - f_r) <= 1e-6 * std::max({std::abs(a_r), std::abs(f_r), 1e-3}));
        }
    }
}

TEST_CASE("blocking monotonicity: f decreases in K when rho > 0.5 and cos(theta) > 0") {
    for (double rho : {0.55, 0.7, 0.9, 0.99}) {
        double prev = amplitude_fluctuation(params(0.0, rho, 0.8));
        for (double k = 0.25; k < 300.0; k *= 1.7) {
            const double cur = amplitude_fluctuation(params(k, rho, 0.8));
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

TEST_CASE("sensing ability equals 2*min and the brute-force theta sweep") {
    CHECK(sensing_ability(0.8, 0.3) == doctest::Approx(0.6));
    CHECK(sensing_ability(0.1, 0.4) == doctest::Approx(0.2));
    CHECK(sensing_ability(0.5, 0.0) == doctest::Approx(0.0));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double hs = u(rng), hd = u(rng);
        double lo = 1e300, hi = -1e300;
        for (int i = 0; i < 10000; ++i) {
            const double theta = 2.0 * pi * i / 10000.0;
            const double a = std::abs(std::complex<double>(hs, 0.0) +
                                      std::polar(hd, theta));
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        CHECK(std::abs(sensing_ability(hs, hd) - (hi - lo)) < 1e-6);
    }
}

TEST_CASE("model sweep over K") {
    const std::vector<double> grid{1.0, 10.0, 50.0, 200.0};
    const auto sweep = model_sweep(0.7, 0.0, grid);
    REQUIRE(sweep.size() == 4);
    for (std::size_t i = 1; i < sweep.size(); ++i)
        CHECK(sweep[i].f_value < sweep[i - 1].f_value);

    const std::vector<double> single{3.7};
    const auto one = model_sweep(0.31, 0.2, single);
    REQUIRE(one.size() == 1);
    CHECK(std::abs(one[0].df_dk - fd_dk(3.7, 0.31, 0.2)) <=
          1e-6 * std::abs(one[0].df_dk));
    CHECK(std::abs(one[0].df_drho - fd_drho(3.7, 0.31, 0.2)) <=
          1e-6 * std::abs(one[0].df_drho));

    for (const auto &pt : model_sweep(1.0, 0.0, grid))
        CHECK(pt.f_value == doctest::Approx(0.0));

    CHECK_THROWS_AS(model_sweep(0.5, 0.0, std::span<const double>{}),
                    std::invalid_argument);
    const std::vector<double> unsorted{2.0, 1.0};
    CHECK_THROWS_AS(model_sweep(0.5, 0.0, unsorted), std::invalid_argument);
}

TEST_CASE("static channel synthesizes a constant amplitude") {
    SimScenario s;
    s.duration = 5.0;
    s.sample_rate = 500;
    s.noise_sigma = 0.0;
    s.seed = 3;
    const auto result = synthesize_trace(s);
    const auto first = result.trace.at(0, 0, 0);
    for (std::size_t i = 1; i < result.trace.n_frames(); ++i)
        CHECK(result.trace.at(i, 0, 0) == first);
}

TEST_CASE("breathing-only synthesis is periodic with a 0.25 Hz dominant tone") {
    SimScenario s;
    s.duration = 40.0;
    s.sample_rate = 100;
    s.breathing = {0.25, 0.005};
    s.noise_sigma = 0.0;
    const auto result = synthesize_trace(s);
    const std::size_t n = result.trace.n_frames();
    REQUIRE(n == 4000);

    std::vector<double> amp(n);
    for (std::size_t i = 0; i < n; ++i)
        amp[i] = std::abs(std::complex<double>(result.trace.at(i, 0, 0)));

    // Period 1/0.25 s = 400 samples at 100 Hz.
    for (std::size_t i = 0; i + 400 < n; i += 37)
        CHECK(amp[i] == doctest::Approx(amp[i + 400]).epsilon(1e-4));

    // Naive DFT oracle: dominant non-DC bin at 0.25 Hz.
    double mean = 0.0;
    for (double v : amp)
        mean += v;
    mean /= static_cast<double>(n);
    double best_power = -1.0;
    std::size_t best_bin = 0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i)
            acc += (amp[i] - mean) * std::polar(1.0, -2.0 * pi * double(k * i) / double(n));
        if (std::norm(acc) > best_power) {
            best_power = std::norm(acc);
            best_bin = k;
        }
    }
    CHECK(best_bin * 100.0 / n == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("lower K swings harder for the same displacement") {
    SimScenario weak;
    weak.duration = 20.0;
    weak.sample_rate = 200;
    weak.breathing = {0.3, 0.005};
    weak.noise_sigma = 0.0;
    weak.channel.k_factor = 201.1;
    SimScenario strong = weak;
    strong.channel.k_factor = 12.4;

    const double pp_weak = peak_to_peak_amplitude(synthesize_trace(weak).trace);
    const double pp_strong = peak_to_peak_amplitude(synthesize_trace(strong).trace);
    CHECK(pp_strong > pp_weak);
}

TEST_CASE("synthesis is deterministic for a fixed seed") {
    SimScenario s;
    s.duration = 4.0;
    s.sample_rate = 250;
    s.breathing = {0.3, 0.004};
    s.noise_sigma = 0.05;
    s.n_subcarriers = 3;
    s.n_streams = 2;
    s.seed = 99;
    s.motion_events.push_back({1.0, 2.0, 0.01});
    const auto a = synthesize_trace(s);
    const auto b = synthesize_trace(s);
    CHECK(a.trace.samples == b.trace.samples);

    s.seed = 100;
    const auto c = synthesize_trace(s);
    CHECK(a.trace.samples != c.trace.samples);
}

TEST_CASE("synthesis rejects invalid scenarios") {
    SimScenario overlap;
    overlap.duration = 10.0;
    overlap.motion_events.push_back({1.0, 4.0, 0.01});
    overlap.motion_events.push_back({3.0, 5.0, 0.01});
    CHECK_THROWS_AS(synthesize_trace(overlap), std::invalid_argument);

    SimScenario alias;
    alias.duration = 10.0;
    alias.sample_rate = 2;
    alias.heartbeat = {1.2, 0.001};
    CHECK_THROWS_AS(synthesize_trace(alias), std::invalid_argument);
}

TEST_CASE("ground truth echoes the scenario") {
    SimScenario s;
    s.duration = 12.0;
    s.sample_rate = 100;
    s.breathing = {0.3, 0.005};
    s.heartbeat = {1.2, 0.0005};
    s.motion_events.push_back({2.0, 4.0, 0.01});
    s.motion_events.push_back({7.0, 8.5, 0.01});
    const auto result = synthesize_trace(s);
    CHECK(result.truth.breathing_freq_hz == doctest::Approx(0.3));
    CHECK(result.truth.heart_freq_hz == doctest::Approx(1.2));
    REQUIRE(result.truth.motion_events.size() == 2);
    CHECK(result.truth.motion_events[0].first == doctest::Approx(2.0));
    CHECK(result.truth.motion_events[1].second == doctest::Approx(8.5));
    CHECK(result.truth.scenario.sample_rate == doctest::Approx(100));
}

TEST_CASE("K estimator saturates on a constant signal") {
    CsiTrace t;
    t.sample_rate_hz = 1000;
    t.n_streams = 1;
    t.n_subcarriers = 1;
    t.samples.assign(2000, std::complex<float>(0.7f, -0.2f));
    CHECK(estimate_ricean_k(t, 0, 0) == doctest::Approx(k_estimate_max));
}

TEST_CASE("K estimator rejects short traces") {
    CsiTrace t;
    t.sample_rate_hz = 1000;
    t.n_streams = 1;
    t.n_subcarriers = 1;
    t.samples.assign(999, std::complex<float>(1.0f, 0.0f));
    CHECK_THROWS_AS(estimate_ricean_k(t, 0, 0), std::invalid_argument);
}

TEST_CASE("K estimator recovers the true factor from Ricean draws") {
    const double k10 = estimate_ricean_k(ricean_trace(10.0, 100000, 21), 0, 0);
    CHECK(k10 > 9.0);
    CHECK(k10 < 11.0);
    const double k50 = estimate_ricean_k(ricean_trace(50.0, 100000, 22), 0, 0);
    CHECK(k50 > 45.0);
    CHECK(k50 < 55.0);
}

TEST_CASE("K estimator median over 50 runs stays within 10%") {
    for (double k : {1.0, 10.0, 50.0}) {
        std::vector<double> estimates;
        for (std::uint64_t run = 0; run < 50; ++run)
            estimates.push_back(
                estimate_ricean_k(ricean_trace(k, 100000, 1000 + run), 0, 0));
        std::sort(estimates.begin(), estimates.end());
        const double median = 0.5 * (estimates[24] + estimates[25]);
        CHECK(std::abs(median - k) <= 0.10 * k);
    }
}
