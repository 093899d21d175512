// SPDX-License-Identifier: Apache-2.0
//
// Deterministic CSI trace synthesis from a scenario.

#pragma once

#include "witl/scenario.hpp"
#include "witl/trace.hpp"

namespace witl::channel_model {

struct SynthesisResult {
    CsiTrace trace;
    GroundTruth truth;
};

// Synthesizes H(t) = sqrt(Omega) e^{j phi0} [ |Hs| + |Hd| e^{-j(2 pi d(t)/lambda - theta)} ] + n(t)
// per stream and subcarrier, where d(t) sums the breathing and heartbeat
// sinusoids plus the motion-event random walk. Subcarriers and streams carry a
// deterministic linear phase offset (a fixed per-bin delay surrogate) and
// independent noise. Bitwise reproducible for a fixed seed on one platform.
//
// Throws std::invalid_argument when the scenario fails validation.
SynthesisResult synthesize_trace(const SimScenario &scenario);

} // namespace witl::channel_model
