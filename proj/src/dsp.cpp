// SPDX-License-Identifier: Apache-2.0

#include "witl/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace witl::dsp {

AmplitudeSeries amplitude_series(const CsiTrace &trace, std::size_t stream,
                                 std::size_t subcarrier) {
    if (stream >= trace.n_streams || subcarrier >= trace.n_subcarriers)
        throw std::invalid_argument("stream/subcarrier out of range");
    AmplitudeSeries out;
    out.sample_rate_hz = trace.sample_rate_hz;
    out.origin_index = 0;
    const std::size_t n = trace.n_frames();
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        out.samples[i] = std::abs(std::complex<double>(trace.at(i, stream, subcarrier)));
    return out;
}

double amplitude_variance(const CsiTrace &trace, std::size_t stream,
                          std::size_t subcarrier) {
    const std::size_t n = trace.n_frames();
    if (n == 0)
        throw std::invalid_argument("empty trace");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        mean += std::abs(std::complex<double>(trace.at(i, stream, subcarrier)));
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d =
            std::abs(std::complex<double>(trace.at(i, stream, subcarrier))) - mean;
        var += d * d;
    }
    return var / static_cast<double>(n);
}

std::size_t select_subcarrier(const CsiTrace &trace, std::size_t stream) {
    if (trace.n_frames() == 0 || trace.n_subcarriers == 0)
        throw std::invalid_argument("empty trace");
    if (stream >= trace.n_streams)
        throw std::invalid_argument("stream out of range");
    std::size_t best = 0;
    double best_var = -1.0;
    for (std::size_t c = 0; c < trace.n_subcarriers; ++c) {
        const double v = amplitude_variance(trace, stream, c);
        if (v > best_var) {
            best_var = v;
            best = c;
        }
    }
    return best;
}

namespace {

// Median of an unsorted scratch buffer (modifies it). Even sizes average the
// two middle values.
double median_inplace(std::vector<double> &v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

constexpr double mad_to_sigma = 1.4826;

} // namespace

AmplitudeSeries hampel_filter(const AmplitudeSeries &series, std::size_t half_window,
                              double n_sigma) {
    if (series.samples.empty())
        throw std::invalid_argument("empty series");
    AmplitudeSeries out = series;
    const std::vector<double> &x = series.samples;
    const std::size_t n = x.size();
    std::vector<double> window, dev;
    window.reserve(2 * half_window + 1);
    dev.reserve(2 * half_window + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half_window ? i - half_window : 0;
        const std::size_t hi = std::min(n - 1, i + half_window);
        window.assign(x.begin() + lo, x.begin() + hi + 1);
        const double med = median_inplace(window);
        dev.clear();
        for (std::size_t j = lo; j <= hi; ++j)
            dev.push_back(std::abs(x[j] - med));
        const double sigma = mad_to_sigma * median_inplace(dev);
        if (std::abs(x[i] - med) > n_sigma * sigma)
            out.samples[i] = med;
    }
    return out;
}

void BandSpec::validate(double sample_rate_hz) const {
    if (!(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < sample_rate_hz / 2.0))
        throw std::invalid_argument("band must satisfy 0 < low < high < sample_rate/2");
    if (order < 1)
        throw std::invalid_argument("filter order must be >= 1");
}

namespace {

struct Biquad {
    double b0, b1, b2; // numerator
    double a1, a2;     // denominator, a0 normalized to 1
};

// Butterworth bandpass as second-order sections: analog lowpass prototype
// poles, lowpass->bandpass transform, bilinear mapping with pre-warped edges,
// per-section gain normalized at the warped center frequency.
std::vector<Biquad> design_butterworth_bandpass(int order, double low_hz,
                                                double high_hz, double fs) {
    using cplx = std::complex<double>;
    const double pi = std::numbers::pi;
    const double wl = 2.0 * fs * std::tan(pi * low_hz / fs);
    const double wh = 2.0 * fs * std::tan(pi * high_hz / fs);
    const double w0 = std::sqrt(wl * wh);
    const double bw = wh - wl;

    std::vector<cplx> analog_poles;
    analog_poles.reserve(2 * static_cast<std::size_t>(order));
    for (int k = 1; k <= order; ++k) {
        const double t = pi * (2.0 * k - 1.0) / (2.0 * order);
        const cplx proto(-std::sin(t), std::cos(t));
        // s^2 - bw*p*s + w0^2 = 0
        const cplx half = 0.5 * bw * proto;
        const cplx disc = std::sqrt(half * half - w0 * w0);
        analog_poles.push_back(half + disc);
        analog_poles.push_back(half - disc);
    }

    std::vector<cplx> digital_poles;
    digital_poles.reserve(analog_poles.size());
    for (const cplx &s : analog_poles)
        digital_poles.push_back((2.0 * fs + s) / (2.0 * fs - s));

    // Pair conjugates: keep one pole per conjugate pair, pair leftover real
    // poles among themselves.
    std::vector<cplx> upper;
    std::vector<double> reals;
    for (const cplx &z : digital_poles) {
        if (z.imag() > 1e-12)
            upper.push_back(z);
        else if (z.imag() >= -1e-12)
            reals.push_back(z.real());
    }
    std::vector<Biquad> sections;
    for (const cplx &z : upper)
        sections.push_back({1.0, 0.0, -1.0, -2.0 * z.real(), std::norm(z)});
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
        sections.push_back(
            {1.0, 0.0, -1.0, -(reals[i] + reals[i + 1]), reals[i] * reals[i + 1]});

    // Unit gain at the warped center frequency.
    const double wc = 2.0 * std::atan(w0 / (2.0 * fs));
    const cplx z = std::polar(1.0, wc);
    const cplx z2 = z * z;
    for (Biquad &s : sections) {
        const cplx num = s.b0 * z2 + s.b1 * z + s.b2;
        const cplx den = z2 + s.a1 * z + s.a2;
        const double g = std::abs(num / den);
        s.b0 /= g;
        s.b1 /= g;
        s.b2 /= g;
    }
    return sections;
}

// Cascade of biquads in transposed direct form II. Each section starts in the
// steady state it would hold under a constant input equal to the first sample,
// so constants propagate with no transient at all (and pass to exactly zero
// through the z=1 numerator zeros).
void sosfilt_inplace(const std::vector<Biquad> &sections, std::vector<double> &x) {
    double level = x.empty() ? 0.0 : x.front();
    for (const Biquad &s : sections) {
        const double dc_gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
        const double y_ss = dc_gain * level;
        double s1 = y_ss - s.b0 * level;
        double s2 = s.b2 * level - s.a2 * y_ss;
        for (double &v : x) {
            const double in = v;
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            v = out;
        }
        level = y_ss;
    }
}

} // namespace

AmplitudeSeries bandpass(const AmplitudeSeries &series, const BandSpec &band) {
    band.validate(series.sample_rate_hz);
    const std::size_t n = series.samples.size();
    if (n <= static_cast<std::size_t>(3 * band.order))
        throw std::invalid_argument("series too short for the filter order");

    const std::vector<Biquad> sections = design_butterworth_bandpass(
        band.order, band.low_hz, band.high_hz, series.sample_rate_hz);

    // Odd-reflection padding long enough for the narrowband transient to die
    // out: three periods of the lower band edge.
    const std::size_t want = static_cast<std::size_t>(
        std::ceil(3.0 * series.sample_rate_hz / band.low_hz));
    const std::size_t pad = std::min(n - 1, want);

    const std::vector<double> &x = series.samples;
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i)
        ext.push_back(2.0 * x[0] - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i)
        ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    sosfilt_inplace(sections, ext);
    std::reverse(ext.begin(), ext.end());
    sosfilt_inplace(sections, ext);
    std::reverse(ext.begin(), ext.end());

    AmplitudeSeries out;
    out.sample_rate_hz = series.sample_rate_hz;
    out.origin_index = series.origin_index;
    out.samples.assign(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                       ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
    return out;
}

namespace {

std::mutex fftw_planner_mutex;

// Magnitude spectrum of a real signal, zero-padded to fft_len.
std::vector<double> magnitude_spectrum(const std::vector<double> &x,
                                       std::size_t fft_len) {
    double *in = fftw_alloc_real(fft_len);
    fftw_complex *out = fftw_alloc_complex(fft_len / 2 + 1);
    std::fill(in, in + fft_len, 0.0);
    std::copy(x.begin(), x.end(), in);

    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(fft_len), in, out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex);
        fftw_destroy_plan(plan);
    }

    std::vector<double> mag(fft_len / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k)
        mag[k] = std::hypot(out[k][0], out[k][1]);
    fftw_free(in);
    fftw_free(out);
    return mag;
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

} // namespace

RateEstimate estimate_rate_fft(const AmplitudeSeries &series, const BandSpec &band,
                               double gate_ratio) {
    band.validate(series.sample_rate_hz);
    const std::size_t n = series.samples.size();
    const double fs = series.sample_rate_hz;
    if (n / fs < 10.0 - 1e-9)
        throw std::invalid_argument("series must cover at least 10 s");

    // Mean removal plus a periodic Hann window keeps spectral leakage from
    // swamping the band of interest.
    double mean = 0.0;
    for (double v : series.samples)
        mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> windowed(n);
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 * (1.0 - std::cos(two_pi * i / n));
        windowed[i] = w * (series.samples[i] - mean);
    }

    // 4x zero-padding refines the grid enough that the parabolic fit is
    // comfortably below the estimator tolerances.
    const std::size_t fft_len = 4 * next_pow2(n);
    const std::vector<double> mag = magnitude_spectrum(windowed, fft_len);

    const double bin_hz = fs / static_cast<double>(fft_len);
    std::size_t k_lo = static_cast<std::size_t>(std::ceil(band.low_hz / bin_hz));
    std::size_t k_hi = static_cast<std::size_t>(std::floor(band.high_hz / bin_hz));
    k_lo = std::max<std::size_t>(k_lo, 1);
    k_hi = std::min(k_hi, mag.size() - 1);

    RateEstimate est;
    if (k_lo > k_hi)
        return est;

    std::size_t peak = k_lo;
    for (std::size_t k = k_lo; k <= k_hi; ++k)
        if (mag[k] > mag[peak])
            peak = k;

    double delta = 0.0;
    if (peak > 0 && peak + 1 < mag.size() && mag[peak] > 0.0 && mag[peak - 1] > 0.0 &&
        mag[peak + 1] > 0.0) {
        const double a = std::log(mag[peak - 1]);
        const double b = std::log(mag[peak]);
        const double c = std::log(mag[peak + 1]);
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0)
            delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
    }
    est.peak_freq_hz = (static_cast<double>(peak) + delta) * bin_hz;

    std::vector<double> in_band(mag.begin() + static_cast<std::ptrdiff_t>(k_lo),
                                mag.begin() + static_cast<std::ptrdiff_t>(k_hi) + 1);
    const double med = median_inplace(in_band);
    if (med > 0.0)
        est.prominence_ratio = mag[peak] / med;
    else
        est.prominence_ratio =
            mag[peak] > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;

    if (est.prominence_ratio >= gate_ratio)
        est.bpm = 60.0 * est.peak_freq_hz;
    return est;
}

} // namespace witl::dsp
