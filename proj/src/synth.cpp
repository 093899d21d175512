// SPDX-License-Identifier: Apache-2.0

#include "witl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace witl::channel_model {

namespace {

// Fixed deterministic phase offsets emulating a constant delay skew across
// OFDM bins and receive chains; amplitudes are unaffected.
constexpr double subcarrier_phase_step = 0.19; // radians per subcarrier index
constexpr double stream_phase_step = 0.73;     // radians per stream index

// splitmix64; decorrelates per-(stream, subcarrier) noise engines from the
// scenario seed.
std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

SynthesisResult synthesize_trace(const SimScenario &scenario) {
    scenario.validate();

    const double fs = scenario.sample_rate;
    const std::size_t n_frames =
        static_cast<std::size_t>(std::llround(scenario.duration * fs));
    const RiceanChannelParams &ch = scenario.channel;
    const double hs = ch.static_magnitude();
    const double hd = ch.dynamic_magnitude();
    const double scale = std::sqrt(ch.omega);
    const double two_pi = 2.0 * std::numbers::pi;
    const double walk_clamp = 10.0 * ch.lambda;

    // Effective reflected-path displacement d(t), shared by every stream and
    // subcarrier: vital sinusoids plus the per-event random walk.
    std::vector<double> displacement(n_frames);
    {
        std::mt19937_64 walk_rng(mix_seed(scenario.seed ^ 0x57414C4BULL));
        std::normal_distribution<double> unit_normal(0.0, 1.0);
        std::vector<MotionEvent> events = scenario.motion_events;
        std::sort(events.begin(), events.end(),
                  [](const MotionEvent &a, const MotionEvent &b) { return a.start < b.start; });
        std::size_t ev = 0;
        double walk = 0.0;
        bool in_event_prev = false;
        for (std::size_t i = 0; i < n_frames; ++i) {
            const double t = static_cast<double>(i) / fs;
            while (ev < events.size() && t >= events[ev].end)
                ++ev;
            const bool in_event = ev < events.size() && t >= events[ev].start && t < events[ev].end;
            if (in_event) {
                if (!in_event_prev)
                    walk = 0.0;
                walk += events[ev].displacement_walk_scale * unit_normal(walk_rng);
                walk = std::clamp(walk, -walk_clamp, walk_clamp);
            } else {
                walk = 0.0;
            }
            in_event_prev = in_event;

            double d = walk;
            if (scenario.breathing.displacement_amp > 0.0)
                d += scenario.breathing.displacement_amp *
                     std::sin(two_pi * scenario.breathing.freq * t);
            if (scenario.heartbeat.displacement_amp > 0.0)
                d += scenario.heartbeat.displacement_amp *
                     std::sin(two_pi * scenario.heartbeat.freq * t);
            displacement[i] = d;
        }
    }

    // Noiseless unit-power waveform, common to all streams/subcarriers up to
    // a constant rotation.
    std::vector<std::complex<double>> base(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) {
        const double dyn_phase = ch.theta - two_pi * displacement[i] / ch.lambda;
        base[i] = std::complex<double>(hs + hd * std::cos(dyn_phase),
                                       hd * std::sin(dyn_phase));
    }

    CsiTrace trace;
    trace.sample_rate_hz = static_cast<std::uint32_t>(fs);
    trace.n_streams = static_cast<std::uint16_t>(scenario.n_streams);
    trace.n_subcarriers = static_cast<std::uint16_t>(scenario.n_subcarriers);
    trace.t0_ns = 0;
    trace.samples.resize(n_frames * trace.frame_stride());

    for (std::uint32_t s = 0; s < scenario.n_streams; ++s) {
        for (std::uint32_t c = 0; c < scenario.n_subcarriers; ++c) {
            const double offset =
                ch.phi0 + stream_phase_step * s + subcarrier_phase_step * c;
            const std::complex<double> rot =
                scale * std::complex<double>(std::cos(offset), std::sin(offset));
            std::mt19937_64 rng(
                mix_seed(scenario.seed ^ (static_cast<std::uint64_t>(s) << 32 ^ c)));
            std::normal_distribution<double> noise(0.0, 1.0);
            for (std::size_t i = 0; i < n_frames; ++i) {
                std::complex<double> v = rot * base[i];
                if (scenario.noise_sigma > 0.0) {
                    const double re = noise(rng);
                    const double im = noise(rng);
                    v += scenario.noise_sigma * std::complex<double>(re, im);
                }
                trace.at(i, s, c) = std::complex<float>(static_cast<float>(v.real()),
                                                        static_cast<float>(v.imag()));
            }
        }
    }

    GroundTruth truth;
    truth.breathing_freq_hz =
        scenario.breathing.displacement_amp > 0.0 ? scenario.breathing.freq : 0.0;
    truth.heart_freq_hz =
        scenario.heartbeat.displacement_amp > 0.0 ? scenario.heartbeat.freq : 0.0;
    for (const MotionEvent &e : scenario.motion_events)
        truth.motion_events.emplace_back(e.start, e.end);
    std::sort(truth.motion_events.begin(), truth.motion_events.end());
    truth.scenario = scenario;

    return {std::move(trace), std::move(truth)};
}

} // namespace witl::channel_model
