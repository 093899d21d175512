// SPDX-License-Identifier: Apache-2.0
//
// Regularity-based motion segmentation. A fixed probe window B is slid along
// the series while a history window A grows behind it; the minimum Euclidean
// distance (MED) from B to the best-matching subsequence of A stays low while
// the signal repeats itself (breathing) and spikes when an irregular motion
// enters the probe. Threshold crossings of the MED profile are refined into
// motion start/end points, which partition the series into Vital /
// OtherMotion segments.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "witl/dsp.hpp"

namespace witl::segmentation {

struct SegmentationConfig {
    std::size_t init_window_len = 2000; // packets, initial length of A and B
    std::size_t step = 100;             // packets, growth/shift per iteration
    double activation_factor = 2.5;     // v: MED > v * mean(MA) activates
    std::size_t tp_wep_gap = 20;        // packets between TP and WEP
    std::size_t tp_step = 10;           // packets between TP candidates
    std::size_t tp_iterations = 50;     // number of TP candidates
    std::size_t med_stride = 1;         // offset stride of the MED search

    void validate() const;
};

enum class SegmentLabel { Vital, OtherMotion };

struct MotionSegment {
    std::size_t start = 0; // inclusive sample index
    std::size_t end = 0;   // exclusive sample index
    SegmentLabel label = SegmentLabel::Vital;
};

// Minimum over candidate offsets {0, stride, 2*stride, ...,
// len(history)-len(probe)} of the Euclidean distance between probe and the
// equal-length subsequence of history at that offset. Rejects probes longer
// than the history.
double min_euclidean_distance(std::span<const double> history,
                              std::span<const double> probe, std::size_t stride);

struct ProfilePoint {
    std::size_t position = 0; // sample index of the probe window's end
    double med = 0.0;
};

struct RegularityProfile {
    std::vector<ProfilePoint> points;
};

// Full MED profile of a series: A starts at the beginning with length
// init_window_len and grows by `step` per iteration, B has fixed length
// init_window_len starting at A's end and shifts by `step`; one point per
// iteration until B reaches the series end. Requires len >= 2*init_window_len.
RegularityProfile regularity_profile(const dsp::AmplitudeSeries &series,
                                     const SegmentationConfig &cfg);

// Online activation judgment: returns the position when med > v * mean(ma)
// with a nonempty history; otherwise appends med to ma and returns nullopt.
// The first judged point always seeds ma.
std::optional<std::size_t> detect_activation(std::vector<double> &ma, double med,
                                             std::size_t position, double v);

struct LocateResult {
    std::size_t position = 0;
    bool insufficient_history = false;
};

// Positions the start of a motion below the activation point pap_index.
// Candidate turning points lie at pap_position - k*tp_step (k = 1..
// tp_iterations); each candidate's auxiliary waveform is the pre-TP baseline
// followed by a linear ramp up to the activation MED over tp_wep_gap packets.
// The candidate whose auxiliary waveform has the minimum Euclidean distance to
// the actual profile (over the fixed support from the earliest candidate to
// the activation point plus the ramp width) wins; ties go to the earliest
// position. When the profile has too little history the earliest available
// position is returned with insufficient_history set.
LocateResult locate_start(const RegularityProfile &profile, std::size_t pap_index,
                          const SegmentationConfig &cfg);

// Mirror of locate_start for a falling MED edge: the auxiliary waveform ramps
// down from the pre-TP plateau to the MED at the drop point.
LocateResult locate_end(const RegularityProfile &profile, std::size_t pap_index,
                        const SegmentationConfig &cfg);

// Alternating Vital / OtherMotion segmentation of a series over a single MED
// march. A motion opens when the MED rises above activation_factor * mean(MA)
// (start refined by locate_start) and closes when the MED falls back near the
// frozen pre-motion mean; the probe trails the motion by one init_window_len
// at that point, which fixes the end position. The growing history window
// keeps every pre-motion phase available, which keeps both knees sharp.
// Segments always partition [0, len). Traces too short to profile yield a
// single Vital segment.
std::vector<MotionSegment> segment_trace(const dsp::AmplitudeSeries &series,
                                         const SegmentationConfig &cfg);

} // namespace witl::segmentation
