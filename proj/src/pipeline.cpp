// SPDX-License-Identifier: Apache-2.0

#include "witl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "witl/channel_model.hpp"

namespace witl::pipeline {

void PipelineConfig::validate(double sample_rate_hz) const {
    breathing_band.validate(sample_rate_hz);
    heart_band.validate(sample_rate_hz);
    if (!(window_s >= 10.0))
        throw std::invalid_argument("window_s must be >= 10");
    if (!(step_s > 0.0) || step_s > window_s)
        throw std::invalid_argument("step_s must lie in (0, window_s]");
    if (!(gate_ratio >= 0.0))
        throw std::invalid_argument("gate_ratio must be >= 0");
    segmentation.validate();
}

namespace {

dsp::AmplitudeSeries slice_series(const dsp::AmplitudeSeries &series,
                                  std::size_t begin, std::size_t end) {
    dsp::AmplitudeSeries out;
    out.sample_rate_hz = series.sample_rate_hz;
    out.origin_index = series.origin_index + begin;
    out.samples.assign(series.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                       series.samples.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

} // namespace

VitalReport run_pipeline(const CsiTrace &trace, const PipelineConfig &cfg) {
    trace.validate();
    cfg.validate(trace.sample_rate_hz);
    if (cfg.stream >= trace.n_streams)
        throw std::invalid_argument("stream out of range");
    const double fs = trace.sample_rate_hz;
    const std::size_t n = trace.n_frames();
    if (trace.duration_s() < cfg.window_s)
        throw std::invalid_argument("trace shorter than one analysis window");

    VitalReport report;
    report.stream = cfg.stream;
    report.selected_subcarrier = dsp::select_subcarrier(trace, cfg.stream);
    report.diagnostics.selected_subcarrier_variance =
        dsp::amplitude_variance(trace, cfg.stream, report.selected_subcarrier);
    report.diagnostics.k_estimate_per_stream.resize(trace.n_streams);
    if (n >= channel_model::k_estimate_min_samples)
        for (std::size_t s = 0; s < trace.n_streams; ++s)
            report.diagnostics.k_estimate_per_stream[s] =
                channel_model::estimate_ricean_k(trace, s, report.selected_subcarrier);

    const dsp::AmplitudeSeries raw =
        dsp::amplitude_series(trace, cfg.stream, report.selected_subcarrier);
    const dsp::AmplitudeSeries denoised = dsp::hampel_filter(raw);

    report.segments = segmentation::segment_trace(denoised, cfg.segmentation);

    const dsp::AmplitudeSeries breathing_series =
        dsp::bandpass(denoised, cfg.breathing_band);
    const dsp::AmplitudeSeries heart_series = dsp::bandpass(denoised, cfg.heart_band);

    const std::size_t window_len =
        static_cast<std::size_t>(std::llround(cfg.window_s * fs));
    const std::size_t step_len =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.step_s * fs)));

    for (std::size_t begin = 0; begin + window_len <= n; begin += step_len) {
        const std::size_t end = begin + window_len;
        // Windows must lie entirely inside one Vital segment; anything
        // straddling an OtherMotion segment is skipped, not shortened.
        const bool vital = std::any_of(
            report.segments.begin(), report.segments.end(),
            [&](const segmentation::MotionSegment &seg) {
                return seg.label == segmentation::SegmentLabel::Vital &&
                       seg.start <= begin && end <= seg.end;
            });
        if (!vital)
            continue;

        WindowEstimate w;
        w.start_s = static_cast<double>(begin) / fs;
        w.end_s = static_cast<double>(end) / fs;
        w.breathing = dsp::estimate_rate_fft(slice_series(breathing_series, begin, end),
                                             cfg.breathing_band, cfg.gate_ratio);
        w.heart = dsp::estimate_rate_fft(slice_series(heart_series, begin, end),
                                         cfg.heart_band, cfg.gate_ratio);
        report.windows.push_back(std::move(w));
    }
    return report;
}

namespace {

struct Accumulator {
    double abs_err_sum = 0.0;
    double rel_acc_sum = 0.0;
    std::size_t count = 0;

    void add(double est_bpm, double truth_bpm) {
        abs_err_sum += std::abs(est_bpm - truth_bpm);
        rel_acc_sum += (1.0 - std::abs(est_bpm - truth_bpm) / truth_bpm) * 100.0;
        ++count;
    }
};

} // namespace

Evaluation evaluate_against_truth(const VitalReport &report,
                                  const channel_model::GroundTruth &truth) {
    const double duration = truth.scenario.duration;
    if (!(duration > 0.0))
        throw std::invalid_argument("ground truth has no time support");
    if (!report.windows.empty()) {
        const bool disjoint = std::all_of(
            report.windows.begin(), report.windows.end(),
            [&](const WindowEstimate &w) { return w.start_s >= duration || w.end_s <= 0.0; });
        if (disjoint)
            throw std::invalid_argument("report windows lie outside the truth's time support");
    }

    Evaluation ev;
    Accumulator breathing, heart;
    const double truth_breathing_bpm = truth.breathing_freq_hz * 60.0;
    const double truth_heart_bpm = truth.heart_freq_hz * 60.0;
    for (const WindowEstimate &w : report.windows) {
        if (w.breathing.bpm && truth_breathing_bpm > 0.0)
            breathing.add(*w.breathing.bpm, truth_breathing_bpm);
        if (w.heart.bpm && truth_heart_bpm > 0.0)
            heart.add(*w.heart.bpm, truth_heart_bpm);
    }
    ev.breathing_window_count = breathing.count;
    ev.heart_window_count = heart.count;
    if (breathing.count > 0) {
        ev.breathing_mae_bpm = breathing.abs_err_sum / breathing.count;
        ev.breathing_accuracy_pct = breathing.rel_acc_sum / breathing.count;
    }
    if (heart.count > 0) {
        ev.heart_mae_bpm = heart.abs_err_sum / heart.count;
        ev.heart_accuracy_pct = heart.rel_acc_sum / heart.count;
    }

    // Pair true events with detected OtherMotion segments in order.
    std::vector<const segmentation::MotionSegment *> detected;
    for (const segmentation::MotionSegment &seg : report.segments)
        if (seg.label == segmentation::SegmentLabel::OtherMotion)
            detected.push_back(&seg);
    const double fs = truth.scenario.sample_rate;
    const std::size_t pairs = std::min(detected.size(), truth.motion_events.size());
    for (std::size_t i = 0; i < pairs; ++i) {
        const double det_start = static_cast<double>(detected[i]->start) / fs;
        const double det_end = static_cast<double>(detected[i]->end) / fs;
        ev.boundary_errors_s.push_back(std::abs(det_start - truth.motion_events[i].first));
        ev.boundary_errors_s.push_back(std::abs(det_end - truth.motion_events[i].second));
    }
    return ev;
}

} // namespace witl::pipeline
