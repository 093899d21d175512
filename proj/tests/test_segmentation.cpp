// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "witl/dsp.hpp"
#include "witl/scenario.hpp"
#include "witl/segmentation.hpp"
#include "witl/synth.hpp"

using namespace witl;
using namespace witl::segmentation;

namespace {

constexpr double pi = std::numbers::pi;

dsp::AmplitudeSeries make_series(std::vector<double> samples, double fs) {
    dsp::AmplitudeSeries s;
    s.samples = std::move(samples);
    s.sample_rate_hz = fs;
    return s;
}

channel_model::SimScenario event_scenario(double fs, double duration,
                                          std::vector<channel_model::MotionEvent> events,
                                          std::uint64_t seed) {
    channel_model::SimScenario s;
    s.duration = duration;
    s.sample_rate = fs;
    s.channel.k_factor = 12.4; // blocked-LOS operating point
    s.breathing = {0.3, 0.005};
    s.noise_sigma = 0.002;
    s.seed = seed;
    s.motion_events = std::move(events);
    return s;
}

dsp::AmplitudeSeries scenario_amplitude(const channel_model::SimScenario &s) {
    const auto result = channel_model::synthesize_trace(s);
    return dsp::hampel_filter(dsp::amplitude_series(result.trace, 0, 0));
}

void check_partition(const std::vector<MotionSegment> &segments, std::size_t n) {
    REQUIRE(!segments.empty());
    CHECK(segments.front().start == 0);
    CHECK(segments.back().end == n);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        CHECK(segments[i].start < segments[i].end);
        if (i > 0)
            CHECK(segments[i].start == segments[i - 1].end);
    }
}

std::size_t count_other(const std::vector<MotionSegment> &segments) {
    std::size_t k = 0;
    for (const auto &s : segments)
        k += s.label == SegmentLabel::OtherMotion;
    return k;
}

} // namespace

TEST_CASE("MED of an exact subsequence copy is zero") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> history(5000);
    for (double &v : history)
        v = g(rng);
    const std::vector<double> probe(history.begin() + 1712, history.begin() + 1712 + 800);
    CHECK(min_euclidean_distance(history, probe, 1) == 0.0);
}

TEST_CASE("MED of all-zeros history vs all-ones probe of length 100 is 10") {
    const std::vector<double> history(400, 0.0);
    const std::vector<double> probe(100, 1.0);
    CHECK(min_euclidean_distance(history, probe, 1) == doctest::Approx(10.0));
}

TEST_CASE("MED with a coarser stride never decreases") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> history(2000);
        for (double &v : history)
            v = g(rng);
        std::vector<double> probe(300);
        for (double &v : probe)
            v = g(rng);
        const double fine = min_euclidean_distance(history, probe, 1);
        const double coarse = min_euclidean_distance(history, probe, 10);
        CHECK(fine <= coarse);
    }
}

TEST_CASE("MED rejects probes longer than the history") {
    const std::vector<double> history(10, 0.0);
    const std::vector<double> probe(11, 0.0);
    CHECK_THROWS_AS(min_euclidean_distance(history, probe, 1), std::invalid_argument);
}

TEST_CASE("profile of a periodic series stays near zero") {
    // Period 500 divides the 2000-sample initial window.
    const double fs = 1000;
    std::vector<double> x(7000);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = 2.0 + std::sin(2.0 * pi * i / 500.0);
    SegmentationConfig cfg;
    const auto profile = regularity_profile(make_series(x, fs), cfg);
    double probe_norm = 0.0;
    for (std::size_t i = 0; i < cfg.init_window_len; ++i)
        probe_norm += x[i] * x[i];
    probe_norm = std::sqrt(probe_norm);
    for (const auto &p : profile.points)
        CHECK(p.med < 1e-6 * probe_norm);
}

TEST_CASE("profile length follows the counting formula") {
    SegmentationConfig cfg;
    for (std::size_t n : {4000u, 4099u, 4100u, 7777u, 12345u}) {
        const auto profile =
            regularity_profile(make_series(std::vector<double>(n, 1.0), 100), cfg);
        CHECK(profile.points.size() == (n - 2 * cfg.init_window_len) / cfg.step + 1);
    }
}

TEST_CASE("profile positions are the probe end and strictly increase") {
    SegmentationConfig cfg;
    const auto profile =
        regularity_profile(make_series(std::vector<double>(5000, 1.0), 100), cfg);
    REQUIRE(!profile.points.empty());
    CHECK(profile.points.front().position == 2 * cfg.init_window_len);
    for (std::size_t i = 1; i < profile.points.size(); ++i)
        CHECK(profile.points[i].position > profile.points[i - 1].position);
}

TEST_CASE("profile rejects series shorter than two windows") {
    SegmentationConfig cfg;
    CHECK_THROWS_AS(
        regularity_profile(make_series(std::vector<double>(3999, 1.0), 100), cfg),
        std::invalid_argument);
}

TEST_CASE("profile spikes at a random-walk burst") {
    auto scenario = event_scenario(500, 40.0, {{20.0, 24.0, 0.01}}, 77);
    scenario.motion_events[0].displacement_walk_scale = 0.01;
    SegmentationConfig cfg;
    cfg.med_stride = 5;
    const auto series = scenario_amplitude(scenario);
    const auto profile = regularity_profile(series, cfg);
    std::size_t arg_max = 0;
    for (std::size_t i = 1; i < profile.points.size(); ++i)
        if (profile.points[i].med > profile.points[arg_max].med)
            arg_max = i;
    // Max MED is recorded at or after the burst onset (20 s = sample 10000).
    CHECK(profile.points[arg_max].position >= 10000);
}

TEST_CASE("activation detector thresholds against the running mean") {
    std::vector<double> ma{1.0, 1.0, 1.0};
    CHECK(detect_activation(ma, 2.6, 4200, 2.5) == 4200);
    CHECK(ma.size() == 3); // activation does not grow the set

    std::vector<double> ma2{1.0};
    CHECK(!detect_activation(ma2, 2.4, 4300, 2.5));
    CHECK(ma2 == std::vector<double>{1.0, 2.4});

    std::vector<double> empty;
    CHECK(!detect_activation(empty, 100.0, 4000, 2.5));
    CHECK(empty == std::vector<double>{100.0});
}

TEST_CASE("locate_start recovers a constructed baseline-then-ramp knee") {
    // Points every tp_step packets so candidates align with profile samples;
    // knee at 450, ramp to the activation MED over tp_wep_gap = 20.
    SegmentationConfig cfg;
    RegularityProfile profile;
    const double knee = 450.0, top = 11.0, base = 1.0;
    for (std::size_t pos = 0; pos <= 600; pos += cfg.tp_step) {
        double v;
        if (pos <= knee)
            v = base;
        else if (pos >= knee + cfg.tp_wep_gap)
            v = top;
        else
            v = base + (top - base) * (pos - knee) / double(cfg.tp_wep_gap);
        profile.points.push_back({pos, v});
    }
    const auto loc = locate_start(profile, profile.points.size() - 1, cfg);
    CHECK(!loc.insufficient_history);
    CHECK(loc.position == 450);
}

TEST_CASE("locate_start ties break to the earliest candidate on a flat profile") {
    SegmentationConfig cfg;
    RegularityProfile profile;
    for (std::size_t pos = 0; pos <= 1000; pos += cfg.tp_step)
        profile.points.push_back({pos, 1.0});
    const auto loc = locate_start(profile, profile.points.size() - 1, cfg);
    CHECK(!loc.insufficient_history);
    CHECK(loc.position == 1000 - cfg.tp_iterations * cfg.tp_step);
}

TEST_CASE("locate_start flags insufficient history") {
    SegmentationConfig cfg;
    RegularityProfile profile;
    for (std::size_t pos = 4000; pos <= 4200; pos += 100)
        profile.points.push_back({pos, 1.0});
    const auto loc = locate_start(profile, profile.points.size() - 1, cfg);
    CHECK(loc.insufficient_history);
    CHECK(loc.position == 4000); // earliest available candidate
}

TEST_CASE("pure breathing yields a single vital segment") {
    auto scenario = event_scenario(250, 60.0, {}, 5);
    SegmentationConfig cfg;
    cfg.med_stride = 5;
    const auto series = scenario_amplitude(scenario);
    const auto segments = segment_trace(series, cfg);
    check_partition(segments, series.samples.size());
    REQUIRE(segments.size() == 1);
    CHECK(segments[0].label == SegmentLabel::Vital);
}

TEST_CASE("one turning-over event produces three segments with tight boundaries") {
    const double fs = 1000;
    auto scenario = event_scenario(fs, 60.0, {{30.0, 35.0, 0.02}}, 21);
    SegmentationConfig cfg;
    cfg.med_stride = 10;
    const auto series = scenario_amplitude(scenario);
    const auto segments = segment_trace(series, cfg);
    check_partition(segments, series.samples.size());
    REQUIRE(segments.size() == 3);
    CHECK(segments[0].label == SegmentLabel::Vital);
    CHECK(segments[1].label == SegmentLabel::OtherMotion);
    CHECK(segments[2].label == SegmentLabel::Vital);
    CHECK(std::abs(segments[1].start / fs - 30.0) <= 0.5);
    CHECK(std::abs(segments[1].end / fs - 35.0) <= 0.5);
}

TEST_CASE("two well-separated events produce five alternating segments") {
    const double fs = 500;
    auto scenario =
        event_scenario(fs, 90.0, {{25.0, 29.0, 0.02}, {60.0, 64.0, 0.02}}, 33);
    SegmentationConfig cfg;
    cfg.med_stride = 5;
    const auto series = scenario_amplitude(scenario);
    const auto segments = segment_trace(series, cfg);
    check_partition(segments, series.samples.size());
    REQUIRE(segments.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(segments[i].label ==
              (i % 2 ? SegmentLabel::OtherMotion : SegmentLabel::Vital));
    CHECK(std::abs(segments[1].start / fs - 25.0) <= 1.0);
    CHECK(std::abs(segments[1].end / fs - 29.0) <= 1.0);
    CHECK(std::abs(segments[3].start / fs - 60.0) <= 1.0);
    CHECK(std::abs(segments[3].end / fs - 64.0) <= 1.0);
}

TEST_CASE("segmentation always partitions and is reproducible") {
    SegmentationConfig cfg;
    cfg.med_stride = 5;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto scenario = event_scenario(250, 50.0, {}, seed);
        if (seed % 2)
            scenario.motion_events.push_back({18.0, 22.0, 0.015});
        const auto series = scenario_amplitude(scenario);
        const auto a = segment_trace(series, cfg);
        const auto b = segment_trace(series, cfg);
        check_partition(a, series.samples.size());
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].start == b[i].start);
            CHECK(a[i].end == b[i].end);
            CHECK(a[i].label == b[i].label);
        }
    }
}

TEST_CASE("raising the activation factor never adds motion segments") {
    SegmentationConfig base;
    base.med_stride = 5;
    for (std::uint64_t seed = 40; seed < 46; ++seed) {
        auto scenario = event_scenario(250, 50.0, {{20.0, 23.0, 0.01}}, seed);
        const auto series = scenario_amplitude(scenario);
        std::size_t prev = std::numeric_limits<std::size_t>::max();
        for (double v : {2.5, 3.5, 5.0, 8.0}) {
            SegmentationConfig cfg = base;
            cfg.activation_factor = v;
            const std::size_t count = count_other(segment_trace(series, cfg));
            CHECK(count <= prev);
            prev = count;
        }
    }
}

TEST_CASE("coarser MED stride in segmentation still partitions") {
    auto scenario = event_scenario(250, 40.0, {{15.0, 18.0, 0.02}}, 71);
    const auto series = scenario_amplitude(scenario);
    for (std::size_t stride : {1u, 10u}) {
        SegmentationConfig cfg;
        cfg.med_stride = stride;
        check_partition(segment_trace(series, cfg), series.samples.size());
    }
}
