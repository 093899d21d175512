// SPDX-License-Identifier: Apache-2.0

#include "witl/segmentation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace witl::segmentation {

void SegmentationConfig::validate() const {
    if (init_window_len < 1 || step < 1 || tp_wep_gap < 1 || tp_step < 1 ||
        tp_iterations < 1 || med_stride < 1)
        throw std::invalid_argument("segmentation counts must be >= 1");
    if (!(activation_factor > 1.0))
        throw std::invalid_argument("activation factor must be > 1");
}

namespace {

// Squared distance between probe and history[offset..offset+m), abandoning as
// soon as the partial sum exceeds `bound`. The accumulation order is fixed, so
// completed distances are bitwise reproducible regardless of scan order.
double squared_distance_bounded(const double *hist, const double *probe,
                                std::size_t m, double bound) {
    double sum = 0.0;
    std::size_t i = 0;
    while (i < m) {
        const std::size_t chunk_end = std::min(i + 256, m);
        double acc = 0.0;
        for (std::size_t j = i; j < chunk_end; ++j) {
            const double d = probe[j] - hist[j];
            acc += d * d;
        }
        sum += acc;
        if (sum > bound)
            return sum;
        i = chunk_end;
    }
    return sum;
}

double min_sq_distance(std::span<const double> history, std::span<const double> probe,
                       std::size_t stride, std::span<const double> sq_prefix,
                       double probe_norm) {
    const std::size_t m = probe.size();
    const std::size_t last = history.size() - m;
    const std::size_t n_offsets = last / stride + 1;

    std::atomic<double> best{std::numeric_limits<double>::infinity()};
    const auto update_best = [&best](double v) {
        double cur = best.load(std::memory_order_relaxed);
        while (v < cur &&
               !best.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
        }
    };

    // Scan from the most recent history backwards: on repetitive signals the
    // best match sits near the probe, and a tight early bound lets the norm
    // test and the abandoning loop skip most of the remaining offsets.
    const auto scan = [&](std::size_t idx) {
        const std::size_t o = idx * stride;
        const double bound = best.load(std::memory_order_relaxed);
        const double window_norm = std::sqrt(
            std::max(0.0, sq_prefix[o + m] - sq_prefix[o]));
        const double gap = probe_norm - window_norm;
        if (gap * gap > bound * 1.0000001)
            return;
        const double d2 =
            squared_distance_bounded(history.data() + o, probe.data(), m, bound);
        update_best(d2);
    };

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t r = static_cast<std::ptrdiff_t>(n_offsets) - 1; r >= 0; --r)
        scan(static_cast<std::size_t>(r));
#else
    for (std::size_t r = n_offsets; r-- > 0;)
        scan(r);
#endif
    return best.load();
}

std::vector<double> squared_prefix(std::span<const double> x) {
    std::vector<double> prefix(x.size() + 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        prefix[i + 1] = prefix[i] + x[i] * x[i];
    return prefix;
}

} // namespace

double min_euclidean_distance(std::span<const double> history,
                              std::span<const double> probe, std::size_t stride) {
    if (stride < 1)
        throw std::invalid_argument("stride must be >= 1");
    if (probe.size() > history.size())
        throw std::invalid_argument("probe longer than history");
    if (probe.empty())
        return 0.0;

    const std::vector<double> prefix = squared_prefix(history);
    double probe_norm = 0.0;
    for (double v : probe)
        probe_norm += v * v;
    probe_norm = std::sqrt(probe_norm);
    return std::sqrt(min_sq_distance(history, probe, stride, prefix, probe_norm));
}

namespace {

// Incremental march of the MED profile over `x`: A = [0, b_end - W) grows by
// `step`, B = [b_end - W, b_end) shifts by `step`. Calls visit(position, med)
// per iteration (position = B's end index); stops early when visit returns
// false. Returns false when x is too short for a single iteration.
bool march_profile(std::span<const double> x, const SegmentationConfig &cfg,
                   const std::function<bool(std::size_t, double)> &visit) {
    const std::size_t w = cfg.init_window_len;
    if (x.size() < 2 * w)
        return false;
    const std::vector<double> prefix = squared_prefix(x);
    for (std::size_t b_end = 2 * w; b_end <= x.size(); b_end += cfg.step) {
        const std::span<const double> history = x.subspan(0, b_end - w);
        const std::span<const double> probe = x.subspan(b_end - w, w);
        const double probe_norm = std::sqrt(
            std::max(0.0, prefix[b_end] - prefix[b_end - w]));
        const double med = std::sqrt(min_sq_distance(
            history, probe, cfg.med_stride,
            std::span<const double>(prefix.data(), history.size() + 1), probe_norm));
        if (!visit(b_end, med))
            return true;
    }
    return true;
}

} // namespace

RegularityProfile regularity_profile(const dsp::AmplitudeSeries &series,
                                     const SegmentationConfig &cfg) {
    cfg.validate();
    RegularityProfile profile;
    const bool ok = march_profile(series.samples, cfg,
                                  [&profile](std::size_t pos, double med) {
                                      profile.points.push_back({pos, med});
                                      return true;
                                  });
    if (!ok)
        throw std::invalid_argument("series shorter than two initial windows");
    return profile;
}

std::optional<std::size_t> detect_activation(std::vector<double> &ma, double med,
                                             std::size_t position, double v) {
    if (!ma.empty()) {
        const double mean = std::accumulate(ma.begin(), ma.end(), 0.0) /
                            static_cast<double>(ma.size());
        if (med > v * mean)
            return position;
    }
    ma.push_back(med);
    return std::nullopt;
}

namespace {

// Shared start/end localization. The auxiliary waveform is the mean of the
// profile before the candidate TP, ramping linearly over tp_wep_gap packets to
// the MED at the activation point (upward for a rise, downward for a drop --
// the interpolation covers both). The ED support runs from the earliest
// candidate to the activation position plus the ramp width, fixed across
// candidates.
LocateResult locate_knee(const RegularityProfile &profile, std::size_t pap_index,
                         const SegmentationConfig &cfg, bool earliest_on_insufficient) {
    if (pap_index >= profile.points.size())
        throw std::invalid_argument("activation index out of range");
    const auto &points = profile.points;
    const std::size_t pap_pos = points[pap_index].position;
    const double pap_med = points[pap_index].med;

    const std::size_t span = cfg.tp_iterations * cfg.tp_step;
    const std::size_t first_pos = points.front().position;

    LocateResult result;
    result.insufficient_history = pap_pos < first_pos + span;
    if (result.insufficient_history && earliest_on_insufficient) {
        // Earliest candidate that still has profile data under it.
        result.position = first_pos;
        for (std::size_t k = cfg.tp_iterations; k >= 1; --k) {
            const std::size_t back = k * cfg.tp_step;
            if (back <= pap_pos && pap_pos - back >= first_pos) {
                result.position = pap_pos - back;
                break;
            }
        }
        return result;
    }
    const std::size_t earliest =
        pap_pos >= span ? pap_pos - span : 0;
    const std::size_t support_lo = std::max(earliest, first_pos);
    const std::size_t support_hi = pap_pos + cfg.tp_wep_gap;

    // Profile points inside the fixed support.
    std::size_t i_lo = pap_index;
    while (i_lo > 0 && points[i_lo - 1].position >= support_lo)
        --i_lo;
    std::size_t i_hi = pap_index;
    while (i_hi + 1 < points.size() && points[i_hi + 1].position <= support_hi)
        ++i_hi;

    double best_ed = std::numeric_limits<double>::infinity();
    std::size_t best_tp = 0;
    bool any = false;
    for (std::size_t k = 1; k <= cfg.tp_iterations; ++k) {
        const std::size_t back = k * cfg.tp_step;
        if (back > pap_pos)
            break;
        const std::size_t tp = pap_pos - back;
        if (tp < first_pos)
            break;

        double baseline = 0.0;
        std::size_t n_base = 0;
        for (std::size_t j = 0; j < points.size() && points[j].position < tp; ++j) {
            baseline += points[j].med;
            ++n_base;
        }
        baseline = n_base > 0 ? baseline / static_cast<double>(n_base)
                              : points.front().med;

        double ed = 0.0;
        for (std::size_t j = i_lo; j <= i_hi; ++j) {
            const std::size_t q = points[j].position;
            double aux;
            if (q <= tp)
                aux = baseline;
            else if (q >= tp + cfg.tp_wep_gap)
                aux = pap_med;
            else
                aux = baseline + (pap_med - baseline) *
                                     static_cast<double>(q - tp) /
                                     static_cast<double>(cfg.tp_wep_gap);
            const double d = points[j].med - aux;
            ed += d * d;
        }
        // <= so that ties resolve to the earliest candidate (largest k).
        if (ed <= best_ed) {
            best_ed = ed;
            best_tp = tp;
            any = true;
        }
    }

    if (!any) {
        result.position = first_pos;
        result.insufficient_history = true;
        return result;
    }
    result.position = best_tp;
    return result;
}

} // namespace

LocateResult locate_start(const RegularityProfile &profile, std::size_t pap_index,
                          const SegmentationConfig &cfg) {
    cfg.validate();
    return locate_knee(profile, pap_index, cfg, /*earliest_on_insufficient=*/true);
}

LocateResult locate_end(const RegularityProfile &profile, std::size_t pap_index,
                        const SegmentationConfig &cfg) {
    cfg.validate();
    // Short motions legitimately leave fewer than tp_iterations candidates in
    // the restarted profile; the knee fit still runs over what is there.
    return locate_knee(profile, pap_index, cfg, /*earliest_on_insufficient=*/false);
}

std::vector<MotionSegment> segment_trace(const dsp::AmplitudeSeries &series,
                                         const SegmentationConfig &cfg) {
    cfg.validate();
    const std::vector<double> &x = series.samples;
    const std::size_t n = x.size();
    std::vector<MotionSegment> segments;
    if (n == 0)
        return segments;

    const auto emit = [&segments](std::size_t start, std::size_t end,
                                  SegmentLabel label) {
        if (start < end)
            segments.push_back({start, end, label});
    };

    // One march over the whole series; the growing history keeps every
    // breathing phase available, so the MED both rises sharply when the probe
    // first touches a motion and falls sharply once the probe has slid past
    // it (probe end = motion end + init_window_len).
    // The MED descent after a motion spans exactly one probe length: the
    // probe's trailing motion overlap shrinks linearly and reaches zero when
    // the probe end passes motion_end + init_window_len. Anchoring the end on
    // a near-baseline crossing (fall_factor * the frozen pre-motion mean)
    // lands within a few tens of packets of that bottom; the cap bounds the
    // wait when the series never returns to the old baseline.
    constexpr double fall_factor = 1.25;
    const std::size_t w = cfg.init_window_len;
    const std::size_t fall_cap = w / cfg.step + cfg.tp_iterations;

    RegularityProfile profile;
    std::vector<double> ma;
    bool active = false;
    double activation_mean = 0.0;
    std::size_t last_end = 0;
    std::optional<std::size_t> cleared_index;
    std::optional<std::size_t> open_start;

    const auto close_motion = [&](std::size_t anchor_pos) {
        std::size_t motion_end = anchor_pos > w ? anchor_pos - w : *open_start + 1;
        motion_end = std::clamp(motion_end, *open_start + 1, n);
        emit(last_end, *open_start, SegmentLabel::Vital);
        emit(*open_start, motion_end, SegmentLabel::OtherMotion);
        last_end = motion_end;
        open_start.reset();
        cleared_index.reset();
        active = false;
    };

    march_profile(x, cfg, [&](std::size_t pos, double med) {
        profile.points.push_back({pos, med});
        const std::size_t index = profile.points.size() - 1;
        if (!active) {
            if (!ma.empty()) {
                const double mean = std::accumulate(ma.begin(), ma.end(), 0.0) /
                                    static_cast<double>(ma.size());
                if (med > cfg.activation_factor * mean) {
                    active = true;
                    activation_mean = mean;
                    const LocateResult loc = locate_start(profile, index, cfg);
                    open_start = std::clamp(loc.position, last_end, n - 1);
                    return true;
                }
            }
            ma.push_back(med);
            return true;
        }
        if (med <= fall_factor * activation_mean) {
            close_motion(pos);
            return true;
        }
        if (med <= cfg.activation_factor * activation_mean && !cleared_index)
            cleared_index = index;
        if (cleared_index && index - *cleared_index > fall_cap)
            close_motion(pos);
        return true;
    });

    if (open_start) {
        emit(last_end, *open_start, SegmentLabel::Vital);
        emit(*open_start, n, SegmentLabel::OtherMotion);
    } else {
        emit(last_end, n, SegmentLabel::Vital);
    }
    return segments;
}

} // namespace witl::segmentation
