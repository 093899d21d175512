// SPDX-License-Identifier: Apache-2.0

#include "witl/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace witl::channel_model {

void SimScenario::validate() const {
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw std::invalid_argument("duration must be > 0");
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
        throw std::invalid_argument("sample_rate must be > 0");
    if (sample_rate != std::floor(sample_rate) || sample_rate > 4294967295.0)
        throw std::invalid_argument("sample_rate must be an integral Hz value");
    channel.validate();
    if (breathing.displacement_amp > 0.0 && !(breathing.freq > 0.0))
        throw std::invalid_argument("breathing.freq must be > 0 when its amplitude is set");
    if (heartbeat.displacement_amp > 0.0 && !(heartbeat.freq > 0.0))
        throw std::invalid_argument("heartbeat.freq must be > 0 when its amplitude is set");
    if (breathing.displacement_amp < 0.0 || heartbeat.displacement_amp < 0.0)
        throw std::invalid_argument("displacement amplitudes must be >= 0");
    if (heartbeat.displacement_amp > 0.0 && sample_rate <= 2.0 * heartbeat.freq)
        throw std::invalid_argument("sample_rate must exceed twice the heartbeat frequency");
    if (!(noise_sigma >= 0.0))
        throw std::invalid_argument("noise_sigma must be >= 0");
    if (n_subcarriers < 1 || n_subcarriers > 65535)
        throw std::invalid_argument("n_subcarriers must be in [1, 65535]");
    if (n_streams < 1 || n_streams > 65535)
        throw std::invalid_argument("n_streams must be in [1, 65535]");

    std::vector<MotionEvent> sorted = motion_events;
    std::sort(sorted.begin(), sorted.end(),
              [](const MotionEvent &a, const MotionEvent &b) { return a.start < b.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const MotionEvent &e = sorted[i];
        if (!(e.start >= 0.0) || !(e.end <= duration) || !(e.start < e.end))
            throw std::invalid_argument("motion event [" + std::to_string(e.start) + ", " +
                                        std::to_string(e.end) + "] outside [0, duration]");
        if (!(e.displacement_walk_scale >= 0.0))
            throw std::invalid_argument("displacement_walk_scale must be >= 0");
        if (i > 0 && sorted[i - 1].end > e.start)
            throw std::invalid_argument(
                "motion events [" + std::to_string(sorted[i - 1].start) + ", " +
                std::to_string(sorted[i - 1].end) + "] and [" + std::to_string(e.start) +
                ", " + std::to_string(e.end) + "] overlap");
    }
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view value, int line) {
    const std::string tmp(value);
    char *end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (end != tmp.c_str() + tmp.size() || tmp.empty())
        throw ScenarioParseError(line, "malformed number '" + tmp + "'");
    return v;
}

std::uint64_t parse_u64(std::string_view value, int line) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        throw ScenarioParseError(line, "malformed integer '" + std::string(value) + "'");
    return v;
}

// Accepts "motion_events[<idx>].<field>"; returns false when key is not an
// event path.
bool parse_event_key(std::string_view key, std::size_t &index, std::string_view &field,
                     int line) {
    constexpr std::string_view prefix = "motion_events[";
    if (!key.starts_with(prefix))
        return false;
    const std::size_t close = key.find(']', prefix.size());
    if (close == std::string_view::npos || close + 1 >= key.size() || key[close + 1] != '.')
        throw ScenarioParseError(line, "malformed motion event key '" + std::string(key) + "'");
    const std::string_view idx_text = key.substr(prefix.size(), close - prefix.size());
    const auto [ptr, ec] =
        std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), index);
    if (ec != std::errc{} || ptr != idx_text.data() + idx_text.size())
        throw ScenarioParseError(line, "malformed motion event index '" +
                                           std::string(idx_text) + "'");
    field = key.substr(close + 2);
    return true;
}

} // namespace

SimScenario parse_scenario_text(std::string_view text) {
    SimScenario s;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view sv(raw);
        if (const std::size_t hash = sv.find('#'); hash != std::string_view::npos)
            sv = sv.substr(0, hash);
        sv = trim(sv);
        if (sv.empty())
            continue;
        const std::size_t eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw ScenarioParseError(line, "expected key=value");
        const std::string_view key = trim(sv.substr(0, eq));
        const std::string_view value = trim(sv.substr(eq + 1));
        if (key.empty())
            throw ScenarioParseError(line, "empty key");

        std::size_t ev_index = 0;
        std::string_view ev_field;
        if (parse_event_key(key, ev_index, ev_field, line)) {
            if (ev_index >= 4096)
                throw ScenarioParseError(line, "motion event index too large");
            if (s.motion_events.size() <= ev_index)
                s.motion_events.resize(ev_index + 1);
            MotionEvent &e = s.motion_events[ev_index];
            if (ev_field == "start")
                e.start = parse_double(value, line);
            else if (ev_field == "end")
                e.end = parse_double(value, line);
            else if (ev_field == "displacement_walk_scale")
                e.displacement_walk_scale = parse_double(value, line);
            else
                throw ScenarioParseError(line, "unknown motion event field '" +
                                                   std::string(ev_field) + "'");
            continue;
        }

        if (key == "duration")
            s.duration = parse_double(value, line);
        else if (key == "sample_rate")
            s.sample_rate = parse_double(value, line);
        else if (key == "channel.k_factor")
            s.channel.k_factor = parse_double(value, line);
        else if (key == "channel.omega")
            s.channel.omega = parse_double(value, line);
        else if (key == "channel.rho")
            s.channel.rho = parse_double(value, line);
        else if (key == "channel.phi0")
            s.channel.phi0 = parse_double(value, line);
        else if (key == "channel.theta")
            s.channel.theta = parse_double(value, line);
        else if (key == "channel.lambda")
            s.channel.lambda = parse_double(value, line);
        else if (key == "breathing.freq")
            s.breathing.freq = parse_double(value, line);
        else if (key == "breathing.displacement_amp")
            s.breathing.displacement_amp = parse_double(value, line);
        else if (key == "heartbeat.freq")
            s.heartbeat.freq = parse_double(value, line);
        else if (key == "heartbeat.displacement_amp")
            s.heartbeat.displacement_amp = parse_double(value, line);
        else if (key == "noise_sigma")
            s.noise_sigma = parse_double(value, line);
        else if (key == "n_subcarriers")
            s.n_subcarriers = static_cast<std::uint32_t>(parse_u64(value, line));
        else if (key == "n_streams")
            s.n_streams = static_cast<std::uint32_t>(parse_u64(value, line));
        else if (key == "seed")
            s.seed = parse_u64(value, line);
        else
            throw ScenarioParseError(line, "unknown key '" + std::string(key) + "'");
    }
    return s;
}

SimScenario load_scenario_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open scenario file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::string scenario_to_text(const SimScenario &s) {
    std::ostringstream out;
    char num[64];
    const auto put = [&](const char *key, double v) {
        std::snprintf(num, sizeof(num), "%.17g", v);
        out << key << '=' << num << '\n';
    };
    put("duration", s.duration);
    put("sample_rate", s.sample_rate);
    put("channel.k_factor", s.channel.k_factor);
    put("channel.omega", s.channel.omega);
    put("channel.rho", s.channel.rho);
    put("channel.phi0", s.channel.phi0);
    put("channel.theta", s.channel.theta);
    put("channel.lambda", s.channel.lambda);
    put("breathing.freq", s.breathing.freq);
    put("breathing.displacement_amp", s.breathing.displacement_amp);
    put("heartbeat.freq", s.heartbeat.freq);
    put("heartbeat.displacement_amp", s.heartbeat.displacement_amp);
    put("noise_sigma", s.noise_sigma);
    out << "n_subcarriers=" << s.n_subcarriers << '\n';
    out << "n_streams=" << s.n_streams << '\n';
    out << "seed=" << s.seed << '\n';
    for (std::size_t i = 0; i < s.motion_events.size(); ++i) {
        const MotionEvent &e = s.motion_events[i];
        std::snprintf(num, sizeof(num), "%.17g", e.start);
        out << "motion_events[" << i << "].start=" << num << '\n';
        std::snprintf(num, sizeof(num), "%.17g", e.end);
        out << "motion_events[" << i << "].end=" << num << '\n';
        std::snprintf(num, sizeof(num), "%.17g", e.displacement_walk_scale);
        out << "motion_events[" << i << "].displacement_walk_scale=" << num << '\n';
    }
    return out.str();
}

} // namespace witl::channel_model
