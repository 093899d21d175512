// SPDX-License-Identifier: Apache-2.0

#include "witl/channel_model.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace witl::channel_model {

void RiceanChannelParams::validate() const {
    if (!(k_factor >= 0.0) || !std::isfinite(k_factor))
        throw std::invalid_argument("k_factor must be finite and >= 0");
    if (!(omega > 0.0) || !std::isfinite(omega))
        throw std::invalid_argument("omega must be finite and > 0");
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("rho must lie in [0, 1]");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lambda must be finite and > 0");
    if (!std::isfinite(phi0) || !std::isfinite(theta))
        throw std::invalid_argument("phases must be finite");
}

void FresnelGeometry::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lambda must be finite and > 0");
    if (tx.x == rx.x && tx.y == rx.y)
        throw std::invalid_argument("degenerate geometry: tx == rx");
}

Point2 fresnel_boundary_point(const FresnelGeometry &geom, int n, double azimuth) {
    geom.validate();
    if (n < 1)
        throw std::invalid_argument("zone index must be >= 1");

    const double dx = geom.rx.x - geom.tx.x;
    const double dy = geom.rx.y - geom.tx.y;
    const double d = std::hypot(dx, dy);

    // Ellipse with foci tx, rx: |TxQ| + |QRx| = d + n*lambda/2 = 2a.
    const double a = 0.5 * (d + n * geom.lambda / 2.0);
    const double c = 0.5 * d;
    const double b = std::sqrt(a * a - c * c);

    const double ux = dx / d;
    const double uy = dy / d;
    const double cx = 0.5 * (geom.tx.x + geom.rx.x);
    const double cy = 0.5 * (geom.tx.y + geom.rx.y);

    const double ca = std::cos(azimuth);
    const double sa = std::sin(azimuth);
    return {cx + a * ca * ux - b * sa * uy, cy + a * ca * uy + b * sa * ux};
}

double amplitude_fluctuation(const RiceanChannelParams &p) {
    p.validate();
    const double kp1 = p.k_factor + 1.0;
    return 2.0 * (p.k_factor + p.rho) * (1.0 - p.rho) * std::cos(p.theta) /
           (kp1 * kp1);
}

double d_fluctuation_dk(const RiceanChannelParams &p) {
    p.validate();
    const double k = p.k_factor;
    const double kp1 = k + 1.0;
    const double kp1_sq = kp1 * kp1;
    return 2.0 * (1.0 - p.rho) * (-k * k - 2.0 * p.rho * k + 1.0 - 2.0 * p.rho) *
           std::cos(p.theta) / (kp1_sq * kp1_sq);
}

double d_fluctuation_drho(const RiceanChannelParams &p) {
    p.validate();
    const double kp1 = p.k_factor + 1.0;
    return 2.0 * (1.0 - p.k_factor - 2.0 * p.rho) * std::cos(p.theta) / (kp1 * kp1);
}

double sensing_ability(double hs_mag, double hd_mag) {
    if (!(hs_mag >= 0.0) || !(hd_mag >= 0.0))
        throw std::invalid_argument("magnitudes must be >= 0");
    // |Hf| sweeps [|hs - hd|, hs + hd] as the dynamic phase rotates.
    return 2.0 * std::min(hs_mag, hd_mag);
}

std::vector<ModelCurvePoint> model_sweep(double rho, double theta,
                                         std::span<const double> k_grid) {
    if (k_grid.empty())
        throw std::invalid_argument("k grid must be nonempty");
    for (std::size_t i = 1; i < k_grid.size(); ++i)
        if (!(k_grid[i] > k_grid[i - 1]))
            throw std::invalid_argument("k grid must be sorted ascending");

    std::vector<ModelCurvePoint> out;
    out.reserve(k_grid.size());
    for (double k : k_grid) {
        RiceanChannelParams p;
        p.k_factor = k;
        p.rho = rho;
        p.theta = theta;
        ModelCurvePoint pt;
        pt.k_factor = k;
        pt.rho = rho;
        pt.theta = theta;
        pt.f_value = amplitude_fluctuation(p);
        pt.df_dk = d_fluctuation_dk(p);
        pt.df_drho = d_fluctuation_drho(p);
        pt.as_max = sensing_ability(p.static_magnitude(), p.dynamic_magnitude());
        out.push_back(pt);
    }
    return out;
}

double estimate_ricean_k(const CsiTrace &trace, std::size_t stream,
                         std::size_t subcarrier) {
    const std::size_t n = trace.n_frames();
    if (n < k_estimate_min_samples)
        throw std::invalid_argument("need at least " +
                                    std::to_string(k_estimate_min_samples) +
                                    " samples, got " + std::to_string(n));
    if (stream >= trace.n_streams || subcarrier >= trace.n_subcarriers)
        throw std::invalid_argument("stream/subcarrier out of range");

    std::complex<double> sum{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
        sum += std::complex<double>(trace.at(i, stream, subcarrier));
    const std::complex<double> mean = sum / static_cast<double>(n);

    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        var += std::norm(std::complex<double>(trace.at(i, stream, subcarrier)) - mean);
    var /= static_cast<double>(n);

    if (var <= 0.0)
        return k_estimate_max;
    return std::min(std::norm(mean) / var, k_estimate_max);
}

} // namespace witl::channel_model
