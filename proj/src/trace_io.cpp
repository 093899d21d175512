// SPDX-License-Identifier: Apache-2.0

#include "witl/trace_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace witl::trace_io {

namespace {

constexpr std::array<unsigned char, 4> witl_magic = {0x57, 0x49, 0x54, 0x4C}; // "WITL"

// Largest payload accepted on read; anything bigger is treated as a corrupt
// shape rather than an allocation request.
constexpr std::uint64_t max_payload_bytes = 1ULL << 40;

template <typename T> void put_le(std::string &buf, T value) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T> T get_le(const unsigned char *p) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        value |= static_cast<T>(p[i]) << (8 * i);
    return value;
}

std::uint32_t float_bits(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, sizeof(u));
    return u;
}

float bits_float(std::uint32_t u) {
    float f;
    std::memcpy(&f, &u, sizeof(f));
    return f;
}

} // namespace

void write_trace(std::ostream &out, const CsiTrace &trace) {
    trace.validate();
    std::string header;
    header.reserve(witl_header_bytes);
    header.append(reinterpret_cast<const char *>(witl_magic.data()), witl_magic.size());
    put_le<std::uint8_t>(header, witl_version);
    put_le<std::uint8_t>(header, 0); // flags
    put_le<std::uint16_t>(header, 0); // reserved
    put_le<std::uint32_t>(header, trace.sample_rate_hz);
    put_le<std::uint16_t>(header, trace.n_streams);
    put_le<std::uint16_t>(header, trace.n_subcarriers);
    put_le<std::uint64_t>(header, trace.n_frames());
    put_le<std::uint64_t>(header, trace.t0_ns);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    std::string payload;
    payload.reserve(trace.samples.size() * 8);
    for (const std::complex<float> &v : trace.samples) {
        put_le<std::uint32_t>(payload, float_bits(v.real()));
        put_le<std::uint32_t>(payload, float_bits(v.imag()));
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "write failed");
}

void write_trace(const std::filesystem::path &path, const CsiTrace &trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "cannot open for writing: " + path.string());
    write_trace(out, trace);
}

CsiTrace read_trace(std::istream &in) {
    std::array<unsigned char, witl_header_bytes> header;
    in.read(reinterpret_cast<char *>(header.data()), header.size());
    if (static_cast<std::size_t>(in.gcount()) != header.size())
        throw TraceIoError(IoErrorKind::Truncated, "file shorter than the fixed header");
    if (!std::equal(witl_magic.begin(), witl_magic.end(), header.begin()))
        throw TraceIoError(IoErrorKind::BadMagic, "bad magic (expected WITL)");
    const std::uint8_t version = header[4];
    if (version != witl_version)
        throw TraceIoError(IoErrorKind::VersionMismatch,
                           "unsupported version " + std::to_string(version));

    CsiTrace trace;
    trace.sample_rate_hz = get_le<std::uint32_t>(header.data() + 8);
    trace.n_streams = get_le<std::uint16_t>(header.data() + 12);
    trace.n_subcarriers = get_le<std::uint16_t>(header.data() + 14);
    const std::uint64_t n_frames = get_le<std::uint64_t>(header.data() + 16);
    trace.t0_ns = get_le<std::uint64_t>(header.data() + 24);

    const std::uint64_t stride =
        static_cast<std::uint64_t>(trace.n_streams) * trace.n_subcarriers;
    if (n_frames > 0 && stride == 0)
        throw TraceIoError(IoErrorKind::ShapeOverflow,
                           "frames present but zero streams/subcarriers");
    const std::uint64_t n_values = stride * n_frames; // stride < 2^32, frames checked below
    if (n_frames > max_payload_bytes / 8 / std::max<std::uint64_t>(stride, 1) ||
        n_values * 8 > max_payload_bytes)
        throw TraceIoError(IoErrorKind::ShapeOverflow, "declared shape exceeds limits");

    std::string payload(static_cast<std::size_t>(n_values) * 8, '\0');
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size())
        throw TraceIoError(IoErrorKind::Truncated,
                           "payload shorter than the declared frame count");
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0)
        throw TraceIoError(IoErrorKind::Malformed, "trailing bytes after payload");

    trace.samples.resize(static_cast<std::size_t>(n_values));
    const unsigned char *p = reinterpret_cast<const unsigned char *>(payload.data());
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const float re = bits_float(get_le<std::uint32_t>(p + i * 8));
        const float im = bits_float(get_le<std::uint32_t>(p + i * 8 + 4));
        trace.samples[i] = {re, im};
    }
    return trace;
}

CsiTrace read_trace(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TraceIoError(IoErrorKind::Io, "cannot open for reading: " + path.string());
    return read_trace(in);
}

void export_csv(std::ostream &out, const CsiTrace &trace) {
    trace.validate();
    out << "t_ns,stream,subcarrier,re,im\n";
    char line[160];
    const std::size_t frames = trace.n_frames();
    for (std::size_t i = 0; i < frames; ++i) {
        const std::uint64_t t = trace.timestamp_ns(i);
        for (std::size_t s = 0; s < trace.n_streams; ++s)
            for (std::size_t c = 0; c < trace.n_subcarriers; ++c) {
                const std::complex<float> v = trace.at(i, s, c);
                // %.9g round-trips IEEE f32 exactly.
                std::snprintf(line, sizeof(line), "%llu,%zu,%zu,%.9g,%.9g\n",
                              static_cast<unsigned long long>(t), s, c,
                              static_cast<double>(v.real()),
                              static_cast<double>(v.imag()));
                out << line;
            }
    }
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "write failed");
}

void export_csv(const std::filesystem::path &path, const CsiTrace &trace) {
    std::ofstream out(path, std::ios::binary); // LF line endings everywhere
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "cannot open for writing: " + path.string());
    export_csv(out, trace);
}

CsiTrace import_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line) || line != "t_ns,stream,subcarrier,re,im")
        throw TraceIoError(IoErrorKind::Malformed, "missing or wrong CSV header");

    struct Row {
        std::uint64_t t_ns;
        std::size_t stream, subcarrier;
        float re, im;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        Row r;
        unsigned long long t;
        unsigned long s, c;
        if (std::sscanf(line.c_str(), "%llu,%lu,%lu,%f,%f", &t, &s, &c, &r.re, &r.im) != 5)
            throw TraceIoError(IoErrorKind::Malformed,
                               "malformed CSV row at line " + std::to_string(line_no));
        r.t_ns = t;
        r.stream = s;
        r.subcarrier = c;
        rows.push_back(r);
    }
    if (rows.empty())
        throw TraceIoError(IoErrorKind::Malformed, "CSV has no data rows");

    std::size_t n_streams = 0, n_subcarriers = 0;
    std::vector<std::uint64_t> stamps;
    for (const Row &r : rows) {
        n_streams = std::max(n_streams, r.stream + 1);
        n_subcarriers = std::max(n_subcarriers, r.subcarrier + 1);
        if (stamps.empty() || stamps.back() != r.t_ns)
            stamps.push_back(r.t_ns);
    }
    if (n_streams > 65535 || n_subcarriers > 65535)
        throw TraceIoError(IoErrorKind::ShapeOverflow, "stream/subcarrier index too large");
    for (std::size_t i = 1; i < stamps.size(); ++i)
        if (stamps[i] <= stamps[i - 1])
            throw TraceIoError(IoErrorKind::Malformed, "timestamps not strictly increasing");
    if (rows.size() != stamps.size() * n_streams * n_subcarriers)
        throw TraceIoError(IoErrorKind::Malformed, "incomplete frames in CSV");

    CsiTrace trace;
    trace.n_streams = static_cast<std::uint16_t>(n_streams);
    trace.n_subcarriers = static_cast<std::uint16_t>(n_subcarriers);
    trace.t0_ns = stamps.front();
    if (stamps.size() > 1) {
        const double dt =
            static_cast<double>(stamps.back() - stamps.front()) /
            static_cast<double>(stamps.size() - 1);
        trace.sample_rate_hz = static_cast<std::uint32_t>(std::llround(1e9 / dt));
        for (std::size_t i = 0; i < stamps.size(); ++i) {
            const std::uint64_t expect = trace.timestamp_ns(i);
            const std::uint64_t got = stamps[i];
            if (got + 1 < expect || got > expect + 1)
                throw TraceIoError(IoErrorKind::Malformed,
                                   "timestamps are not uniformly spaced");
        }
    } else {
        trace.sample_rate_hz = 1;
    }

    trace.samples.resize(rows.size());
    std::size_t frame = 0;
    std::uint64_t current = stamps.front();
    for (const Row &r : rows) {
        if (r.t_ns != current) {
            ++frame;
            current = r.t_ns;
        }
        trace.at(frame, r.stream, r.subcarrier) = {r.re, r.im};
    }
    return trace;
}

CsiTrace import_csv(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TraceIoError(IoErrorKind::Io, "cannot open for reading: " + path.string());
    return import_csv(in);
}

namespace {

using json = nlohmann::ordered_json;

json scenario_to_json(const channel_model::SimScenario &s) {
    json j;
    j["duration"] = s.duration;
    j["sample_rate"] = s.sample_rate;
    j["channel"] = {{"k_factor", s.channel.k_factor}, {"omega", s.channel.omega},
                    {"rho", s.channel.rho},           {"phi0", s.channel.phi0},
                    {"theta", s.channel.theta},       {"lambda", s.channel.lambda}};
    j["breathing"] = {{"freq", s.breathing.freq},
                      {"displacement_amp", s.breathing.displacement_amp}};
    j["heartbeat"] = {{"freq", s.heartbeat.freq},
                      {"displacement_amp", s.heartbeat.displacement_amp}};
    j["motion_events"] = json::array();
    for (const auto &e : s.motion_events)
        j["motion_events"].push_back({{"start", e.start},
                                      {"end", e.end},
                                      {"displacement_walk_scale",
                                       e.displacement_walk_scale}});
    j["noise_sigma"] = s.noise_sigma;
    j["n_subcarriers"] = s.n_subcarriers;
    j["n_streams"] = s.n_streams;
    j["seed"] = s.seed;
    return j;
}

channel_model::SimScenario scenario_from_json(const json &j) {
    channel_model::SimScenario s;
    s.duration = j.at("duration").get<double>();
    s.sample_rate = j.at("sample_rate").get<double>();
    const json &ch = j.at("channel");
    s.channel.k_factor = ch.at("k_factor").get<double>();
    s.channel.omega = ch.at("omega").get<double>();
    s.channel.rho = ch.at("rho").get<double>();
    s.channel.phi0 = ch.at("phi0").get<double>();
    s.channel.theta = ch.at("theta").get<double>();
    s.channel.lambda = ch.at("lambda").get<double>();
    s.breathing.freq = j.at("breathing").at("freq").get<double>();
    s.breathing.displacement_amp =
        j.at("breathing").at("displacement_amp").get<double>();
    s.heartbeat.freq = j.at("heartbeat").at("freq").get<double>();
    s.heartbeat.displacement_amp =
        j.at("heartbeat").at("displacement_amp").get<double>();
    for (const json &e : j.at("motion_events"))
        s.motion_events.push_back({e.at("start").get<double>(),
                                   e.at("end").get<double>(),
                                   e.at("displacement_walk_scale").get<double>()});
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.n_subcarriers = j.at("n_subcarriers").get<std::uint32_t>();
    s.n_streams = j.at("n_streams").get<std::uint32_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

} // namespace

void write_ground_truth(const std::filesystem::path &path,
                        const channel_model::GroundTruth &truth) {
    json j;
    j["breathing_freq_hz"] = truth.breathing_freq_hz;
    j["heart_freq_hz"] = truth.heart_freq_hz;
    j["motion_events"] = json::array();
    for (const auto &[start, end] : truth.motion_events)
        j["motion_events"].push_back({{"start_s", start}, {"end_s", end}});
    j["scenario"] = scenario_to_json(truth.scenario);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "write failed");
}

channel_model::GroundTruth read_ground_truth(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TraceIoError(IoErrorKind::Io, "cannot open for reading: " + path.string());
    json j;
    try {
        in >> j;
        channel_model::GroundTruth truth;
        truth.breathing_freq_hz = j.at("breathing_freq_hz").get<double>();
        truth.heart_freq_hz = j.at("heart_freq_hz").get<double>();
        for (const json &e : j.at("motion_events"))
            truth.motion_events.emplace_back(e.at("start_s").get<double>(),
                                             e.at("end_s").get<double>());
        truth.scenario = scenario_from_json(j.at("scenario"));
        return truth;
    } catch (const json::exception &e) {
        throw TraceIoError(IoErrorKind::Malformed,
                           "ground truth schema violation: " + std::string(e.what()));
    }
}

namespace {

json rate_to_json(const dsp::RateEstimate &r) {
    if (!r.bpm)
        return nullptr;
    json j;
    j["bpm"] = *r.bpm;
    j["peak_freq_hz"] = r.peak_freq_hz;
    j["prominence_ratio"] = r.prominence_ratio;
    return j;
}

dsp::RateEstimate rate_from_json(const json &j) {
    dsp::RateEstimate r;
    if (j.is_null())
        return r;
    r.bpm = j.at("bpm").get<double>();
    r.peak_freq_hz = j.at("peak_freq_hz").get<double>();
    r.prominence_ratio = j.at("prominence_ratio").get<double>();
    return r;
}

const char *label_name(segmentation::SegmentLabel label) {
    return label == segmentation::SegmentLabel::Vital ? "Vital" : "OtherMotion";
}

} // namespace

std::string report_to_json(const pipeline::VitalReport &report) {
    json j;
    j["selected_subcarrier"] = report.selected_subcarrier;
    j["stream"] = report.stream;
    j["windows"] = json::array();
    for (const pipeline::WindowEstimate &w : report.windows)
        j["windows"].push_back({{"start_s", w.start_s},
                                {"end_s", w.end_s},
                                {"breathing", rate_to_json(w.breathing)},
                                {"heart", rate_to_json(w.heart)}});
    j["segments"] = json::array();
    for (const segmentation::MotionSegment &seg : report.segments)
        j["segments"].push_back(
            {{"start", seg.start}, {"end", seg.end}, {"label", label_name(seg.label)}});
    json diag;
    diag["k_estimate_per_stream"] = json::array();
    for (const std::optional<double> &k : report.diagnostics.k_estimate_per_stream)
        diag["k_estimate_per_stream"].push_back(k ? json(*k) : json(nullptr));
    diag["selected_subcarrier_variance"] =
        report.diagnostics.selected_subcarrier_variance;
    j["diagnostics"] = diag;
    return j.dump(2) + "\n";
}

pipeline::VitalReport report_from_json(const std::string &text) {
    try {
        const json j = json::parse(text);
        pipeline::VitalReport report;
        report.selected_subcarrier = j.at("selected_subcarrier").get<std::size_t>();
        report.stream = j.at("stream").get<std::size_t>();
        for (const json &w : j.at("windows")) {
            pipeline::WindowEstimate e;
            e.start_s = w.at("start_s").get<double>();
            e.end_s = w.at("end_s").get<double>();
            e.breathing = rate_from_json(w.at("breathing"));
            e.heart = rate_from_json(w.at("heart"));
            report.windows.push_back(e);
        }
        for (const json &s : j.at("segments")) {
            segmentation::MotionSegment seg;
            seg.start = s.at("start").get<std::size_t>();
            seg.end = s.at("end").get<std::size_t>();
            const std::string label = s.at("label").get<std::string>();
            if (label == "Vital")
                seg.label = segmentation::SegmentLabel::Vital;
            else if (label == "OtherMotion")
                seg.label = segmentation::SegmentLabel::OtherMotion;
            else
                throw TraceIoError(IoErrorKind::Malformed,
                                   "segments.label: unknown value '" + label + "'");
            report.segments.push_back(seg);
        }
        const json &diag = j.at("diagnostics");
        for (const json &k : diag.at("k_estimate_per_stream"))
            report.diagnostics.k_estimate_per_stream.push_back(
                k.is_null() ? std::optional<double>{} : std::optional<double>{k.get<double>()});
        report.diagnostics.selected_subcarrier_variance =
            diag.at("selected_subcarrier_variance").get<double>();
        return report;
    } catch (const json::exception &e) {
        throw TraceIoError(IoErrorKind::Malformed,
                           "report schema violation: " + std::string(e.what()));
    }
}

void write_report(const std::filesystem::path &path,
                  const pipeline::VitalReport &report) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "cannot open for writing: " + path.string());
    out << report_to_json(report);
    if (!out)
        throw TraceIoError(IoErrorKind::Io, "write failed");
}

pipeline::VitalReport read_report(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw TraceIoError(IoErrorKind::Io, "cannot open for reading: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return report_from_json(buf.str());
}

} // namespace witl::trace_io
