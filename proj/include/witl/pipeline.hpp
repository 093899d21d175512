// SPDX-License-Identifier: Apache-2.0
//
// End-to-end vital-sign pipeline: subcarrier selection -> Hampel denoising ->
// motion segmentation -> per-band zero-phase filtering -> sliding-window FFT
// rate extraction restricted to Vital segments.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "witl/dsp.hpp"
#include "witl/scenario.hpp"
#include "witl/segmentation.hpp"
#include "witl/trace.hpp"

namespace witl::pipeline {

struct PipelineConfig {
    dsp::BandSpec breathing_band{0.25, 0.5, 4};
    dsp::BandSpec heart_band{1.0, 2.0, 4};
    double window_s = 30.0; // >= 10
    double step_s = 5.0;    // <= window_s
    double gate_ratio = 5.0;
    segmentation::SegmentationConfig segmentation;
    std::size_t stream = 0;

    void validate(double sample_rate_hz) const;
};

struct WindowEstimate {
    double start_s = 0.0;
    double end_s = 0.0;
    dsp::RateEstimate breathing;
    dsp::RateEstimate heart;
};

struct Diagnostics {
    // One entry per stream; empty optionals when the trace is too short for
    // the moment estimator.
    std::vector<std::optional<double>> k_estimate_per_stream;
    double selected_subcarrier_variance = 0.0;
};

struct VitalReport {
    std::vector<WindowEstimate> windows; // sorted by start, Vital segments only
    std::vector<segmentation::MotionSegment> segments;
    std::size_t selected_subcarrier = 0;
    std::size_t stream = 0;
    Diagnostics diagnostics;
};

// Runs the full pipeline. Windows slide from t=0 in steps of step_s; a window
// is evaluated only when it lies entirely inside one Vital segment, and each
// band's estimate is absent whenever its prominence gate fails. Rejects traces
// shorter than one window. All-motion traces produce an empty window list.
VitalReport run_pipeline(const CsiTrace &trace, const PipelineConfig &cfg);

struct Evaluation {
    std::optional<double> breathing_mae_bpm;
    std::optional<double> heart_mae_bpm;
    std::optional<double> breathing_accuracy_pct;
    std::optional<double> heart_accuracy_pct;
    std::size_t breathing_window_count = 0;
    std::size_t heart_window_count = 0;
    // |detected - true| per matched motion boundary, seconds (start and end of
    // each event paired with OtherMotion segments in order).
    std::vector<double> boundary_errors_s;
};

// Scores a report against simulator ground truth: mean absolute bpm error and
// relative-error accuracy (mean of (1 - |est-truth|/truth) * 100) over the
// windows that reported a value, plus motion boundary errors. Rejects reports
// whose windows lie entirely outside the truth's time support.
Evaluation evaluate_against_truth(const VitalReport &report,
                                  const channel_model::GroundTruth &truth);

} // namespace witl::pipeline
