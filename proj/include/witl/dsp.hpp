// SPDX-License-Identifier: Apache-2.0
//
// Per-series signal processing: subcarrier selection, Hampel outlier removal,
// zero-phase Butterworth band splitting, and FFT rate extraction.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "witl/trace.hpp"

namespace witl::dsp {

struct AmplitudeSeries {
    std::vector<double> samples;  // linear amplitude
    double sample_rate_hz = 0.0;
    std::size_t origin_index = 0; // index of samples[0] in the source trace

    double duration_s() const {
        return sample_rate_hz == 0.0 ? 0.0 : samples.size() / sample_rate_hz;
    }
};

// |H| of one stream/subcarrier over all frames.
AmplitudeSeries amplitude_series(const CsiTrace &trace, std::size_t stream,
                                 std::size_t subcarrier);

// Population variance of the amplitude of one stream/subcarrier.
double amplitude_variance(const CsiTrace &trace, std::size_t stream,
                          std::size_t subcarrier);

// Index of the subcarrier whose amplitude series has the largest variance;
// ties resolve to the lowest index. Rejects empty traces.
std::size_t select_subcarrier(const CsiTrace &trace, std::size_t stream);

// Hampel filter: each sample is compared against the median of a window of up
// to half_window neighbors on each side (truncated at the boundaries) plus
// itself; sigma is 1.4826 * MAD of that window. Samples deviating from the
// window median by more than n_sigma * sigma are replaced by the median.
AmplitudeSeries hampel_filter(const AmplitudeSeries &series,
                              std::size_t half_window = 3, double n_sigma = 3.0);

struct BandSpec {
    double low_hz = 0.0;
    double high_hz = 0.0;
    int order = 4;

    // Requires 0 < low < high < sample_rate/2 and order >= 1.
    void validate(double sample_rate_hz) const;
};

// Zero-phase (forward-backward) Butterworth bandpass of the given order,
// applied as a cascade of biquad sections over an odd-reflected extension of
// the series. Rejects invalid bands and series shorter than 3 * order.
AmplitudeSeries bandpass(const AmplitudeSeries &series, const BandSpec &band);

struct RateEstimate {
    std::optional<double> bpm; // present only when the gate passes
    double peak_freq_hz = 0.0;
    double prominence_ratio = 0.0; // in-band peak amplitude / median amplitude
};

// Hann-windowed FFT rate estimator. The peak bin is searched inside
// [band.low_hz, band.high_hz]; quadratic interpolation of the log magnitude
// over the peak and its neighbors refines the frequency. The estimate is
// reported only when prominence_ratio >= gate_ratio. Requires at least 10 s
// of samples.
RateEstimate estimate_rate_fft(const AmplitudeSeries &series, const BandSpec &band,
                               double gate_ratio);

} // namespace witl::dsp
