// SPDX-License-Identifier: Apache-2.0
//
// Declarative simulation scenarios (breathing / heartbeat / body motion /
// noise) and the flat key=value config format that describes them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "witl/channel_model.hpp"

namespace witl::channel_model {

struct VitalComponent {
    double freq = 0.0;             // Hz
    double displacement_amp = 0.0; // meters of reflected-path-length swing
};

// Random-walk path-length perturbation over [start, end): one Gaussian step of
// standard deviation displacement_walk_scale per sample, clamped to +-10
// wavelengths, zero outside the event.
struct MotionEvent {
    double start = 0.0;                  // seconds
    double end = 0.0;                    // seconds
    double displacement_walk_scale = 0.0; // meters per sample
};

struct SimScenario {
    double duration = 60.0;       // seconds, > 0
    double sample_rate = 1000.0;  // Hz, integral, > 0
    RiceanChannelParams channel;
    VitalComponent breathing{0.3, 0.0};
    VitalComponent heartbeat{1.2, 0.0};
    std::vector<MotionEvent> motion_events;
    double noise_sigma = 0.0;     // AWGN std-dev per complex component
    std::uint32_t n_subcarriers = 1;
    std::uint32_t n_streams = 1;
    std::uint64_t seed = 0;

    // Rejects overlapping motion events, events outside [0, duration], a
    // sample rate that would alias the heartbeat, and out-of-domain fields.
    void validate() const;
};

struct GroundTruth {
    double breathing_freq_hz = 0.0;
    double heart_freq_hz = 0.0;
    std::vector<std::pair<double, double>> motion_events; // (start_s, end_s)
    SimScenario scenario;                                 // echo of the input
};

class ScenarioParseError : public std::runtime_error {
  public:
    ScenarioParseError(int line, const std::string &what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

// Parses the flat key=value scenario format: one `path.to.field=value` pair
// per line, `#` starts a comment, blank lines ignored. Motion events use
// indexed paths, e.g. `motion_events[0].start=30`. Unknown keys and malformed
// values raise ScenarioParseError with the offending line number. The result
// is not validated; call SimScenario::validate() before use.
SimScenario parse_scenario_text(std::string_view text);

SimScenario load_scenario_file(const std::filesystem::path &path);

// Serializes a scenario back to the key=value format (used for sidecar echo).
std::string scenario_to_text(const SimScenario &scenario);

} // namespace witl::channel_model
