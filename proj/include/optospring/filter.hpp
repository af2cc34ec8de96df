#pragma once

#include <Eigen/Dense>

#include "optospring/types.hpp"

namespace optospring {

// Causal time-domain realization of the radiation-pressure force transfer
// H(Omega) = -2 phi phi_NL M Omega_m^2 / Delta(Omega).
//
// Under the e^{-i Omega t} transform kernel, d/dt maps to s = -i Omega and
// Delta becomes the stable polynomial (s^2 + 2 Omega_c s + Omega_c^2 (1 +
// phi^2)) / Omega_c^2, i.e. continuous poles at Omega_c (-1 +/- i phi). The
// realization is the controllable canonical form
//     z' = A z + B x,   F = C z
// with A = [[0, 1], [-a0, -a1]], B = (0, 1)^T, C = (c0, 0),
// a0 = Omega_c^2 (1 + phi^2), a1 = 2 Omega_c, c0 = -2 phi phi_NL M Omega_m^2
// Omega_c^2, discretized exactly per step by the matrix exponential with
// first-order-hold input reconstruction (the displacement is continuous and
// piecewise-linear between samples to good accuracy). The stored discrete
// matrices act on the balanced internal basis (z1, z1'/sqrt(a0)); the
// output c0 z1 and both response functions are basis-independent.
struct ForceFilterRealization {
    // Continuous-time coefficients (denominator monic: s^2 + a1 s + a0).
    double a0 = 0.0;
    double a1 = 0.0;
    double c0 = 0.0;
    double dt = 0.0;

    // Exact discrete update: z_{k+1} = Ad z_k + B0 x_k + B1 x_{k+1}.
    Eigen::Matrix2d Ad = Eigen::Matrix2d::Zero();
    Eigen::Vector2d B0 = Eigen::Vector2d::Zero();
    Eigen::Vector2d B1 = Eigen::Vector2d::Zero();

    Eigen::Vector2d state = Eigen::Vector2d::Zero();

    /// Advance one step given the displacement at the current and next
    /// sample instants; returns the force (N) at the next instant.
    double step(double x_prev, double x_next);

    void reset() { state.setZero(); }

    /// Frequency response of the continuous-time system the realization
    /// propagates: C((-i Omega) I - A)^{-1} B. Matches
    /// radiation_force_transfer to roundoff; this is the realized transfer.
    ComplexResponse continuous_response(double omega) const;

    /// Frequency response of the sampled-data update at z = e^{-i Omega dt},
    /// including the first-order-hold input reconstruction. Deviates from
    /// the continuous response only through the inter-sample input model,
    /// O((Omega dt)^2 / 12) near the band edge.
    ComplexResponse discrete_response(double omega) const;
};

/// Build the filter for an operating point. Rejects steps too coarse to
/// resolve the cavity or mechanical pole: dt * max(Omega_m, Omega_c) / 2pi
/// must not exceed 0.05.
ForceFilterRealization realize_force_filter(const OperatingPoint& op, double dt);

}  // namespace optospring
