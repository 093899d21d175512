// SPDX-License-Identifier: Apache-2.0
//
// In-memory CSI trace: uniformly sampled multi-stream, multi-subcarrier
// complex channel estimates plus sample-rate metadata.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace witl {

struct CsiTrace {
    std::uint32_t sample_rate_hz = 0;
    std::uint16_t n_streams = 0;
    std::uint16_t n_subcarriers = 0;
    std::uint64_t t0_ns = 0;
    // Frame-major layout: samples[frame * frame_stride() + stream * n_subcarriers + subcarrier]
    std::vector<std::complex<float>> samples;

    std::size_t frame_stride() const {
        return static_cast<std::size_t>(n_streams) * n_subcarriers;
    }

    std::size_t n_frames() const {
        const std::size_t stride = frame_stride();
        return stride == 0 ? 0 : samples.size() / stride;
    }

    std::complex<float> &at(std::size_t frame, std::size_t stream, std::size_t subcarrier) {
        return samples[frame * frame_stride() + stream * n_subcarriers + subcarrier];
    }
    const std::complex<float> &at(std::size_t frame, std::size_t stream,
                                  std::size_t subcarrier) const {
        return samples[frame * frame_stride() + stream * n_subcarriers + subcarrier];
    }

    // Nearest-nanosecond timestamp of a frame; spacing is 1e9/sample_rate_hz up
    // to +-1 ns rounding.
    std::uint64_t timestamp_ns(std::size_t frame) const {
        const std::uint64_t num = static_cast<std::uint64_t>(frame) * 1000000000ULL;
        return t0_ns + (num + sample_rate_hz / 2) / sample_rate_hz;
    }

    double duration_s() const {
        return sample_rate_hz == 0 ? 0.0
                                   : static_cast<double>(n_frames()) / sample_rate_hz;
    }

    // Throws std::invalid_argument when the shape metadata and payload disagree.
    void validate() const;
};

} // namespace witl
