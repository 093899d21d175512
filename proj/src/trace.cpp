// SPDX-License-Identifier: Apache-2.0

#include "witl/trace.hpp"

#include <stdexcept>

namespace witl {

void CsiTrace::validate() const {
    if (sample_rate_hz == 0)
        throw std::invalid_argument("sample_rate_hz must be > 0");
    const std::size_t stride = frame_stride();
    if (stride == 0)
        throw std::invalid_argument("trace must have at least one stream and subcarrier");
    if (samples.size() % stride != 0)
        throw std::invalid_argument("sample count is not a whole number of frames");
}

} // namespace witl
