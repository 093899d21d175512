// SPDX-License-Identifier: Apache-2.0
//
// Ricean static/dynamic channel decomposition, Fresnel zone geometry, and the
// closed-form sensing-ability calculus used to reason about NLOS setups.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "witl/trace.hpp"

namespace witl::channel_model {

// Unit-normalized Ricean split of the received power between a static
// component (LOS plus the static share of NLOS) and a dynamic component.
//
// With K the Ricean factor and rho the static fraction of NLOS power:
//   |Hs| = K/(K+1) + rho/(K+1),   |Hd| = (1-rho)/(K+1),   |Hs| + |Hd| = 1.
struct RiceanChannelParams {
    double k_factor = 52.0; // LOS/NLOS power ratio, dimensionless, >= 0
    double omega = 1.0;     // total received power, linear units, > 0
    double rho = 0.7;       // static fraction of NLOS power, in [0, 1]
    double phi0 = 0.0;      // LOS phase, radians
    double theta = 1.0;     // static-dynamic phase difference, radians
    double lambda = 0.06;   // carrier wavelength, meters, > 0

    double static_magnitude() const { return (k_factor + rho) / (k_factor + 1.0); }
    double dynamic_magnitude() const { return (1.0 - rho) / (k_factor + 1.0); }

    // Throws std::invalid_argument on any out-of-domain field.
    void validate() const;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

struct FresnelGeometry {
    Point2 tx;
    Point2 rx;
    double lambda = 0.06; // meters, > 0

    void validate() const; // rejects tx == rx and lambda <= 0
};

// Point Q on the boundary of the n-th Fresnel zone, parameterized by the
// eccentric angle of the ellipse with foci tx, rx. The returned point
// satisfies |TxQ| + |QRx| - |TxRx| = n*lambda/2.
// azimuth = 0 lies on the Tx->Rx axis beyond Rx; azimuth = pi/2 is the
// semi-minor vertex.
Point2 fresnel_boundary_point(const FresnelGeometry &geom, int n, double azimuth);

// Motion-induced CSI amplitude fluctuation term
//   f(K, rho, theta) = 2 (K + rho)(1 - rho) cos(theta) / (K + 1)^2.
double amplitude_fluctuation(const RiceanChannelParams &params);

// Partial derivative of the fluctuation term in K:
//   f'(K) = 2 (1 - rho)(-K^2 - 2 rho K + 1 - 2 rho) cos(theta) / (K + 1)^4.
// Zero at K = 1 - 2*rho; negative beyond it when cos(theta) > 0.
double d_fluctuation_dk(const RiceanChannelParams &params);

// Partial derivative of the fluctuation term in rho:
//   f'(rho) = 2 (1 - K - 2 rho) cos(theta) / (K + 1)^2.
// Zero at rho = (1 - K)/2; for cos(theta) > 0 the fluctuation grows with rho
// below that point and shrinks above it.
double d_fluctuation_drho(const RiceanChannelParams &params);

// Maximum amplitude swing of |Hs + Hd e^{j theta}| over a full rotation of the
// dynamic phase: 2 * min(hs_mag, hd_mag).
double sensing_ability(double hs_mag, double hd_mag);

struct ModelCurvePoint {
    double k_factor = 0.0;
    double rho = 0.0;
    double theta = 0.0;
    double f_value = 0.0;
    double df_dk = 0.0;
    double df_drho = 0.0;
    double as_max = 0.0;
};

// Evaluates the fluctuation model and its derivatives over an ascending grid
// of K values at fixed rho and theta.
std::vector<ModelCurvePoint> model_sweep(double rho, double theta,
                                         std::span<const double> k_grid);

// Saturation sentinel for the moment estimator below.
inline constexpr double k_estimate_max = 1e6;
inline constexpr std::size_t k_estimate_min_samples = 1000;

// Moment estimator K^ = |m^|^2 / v^ over the complex samples of one
// stream/subcarrier, where m^ is the sample mean and v^ the mean squared
// deviation. Returns k_estimate_max when v^ underflows. Requires at least
// k_estimate_min_samples frames.
double estimate_ricean_k(const CsiTrace &trace, std::size_t stream,
                         std::size_t subcarrier);

} // namespace witl::channel_model
