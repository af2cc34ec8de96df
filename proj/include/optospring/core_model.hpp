#pragma once

#include <optional>

#include "optospring/types.hpp"

namespace optospring {

// Closed-form frequency-domain model of a mechanical mode coupled to a
// detuned high-finesse cavity through radiation pressure.
//
// Conventions (shared by every module):
//  * Fourier transforms use the e^{-i Omega t} kernel. This is the only
//    choice under which the cavity response Delta corresponds to a causal,
//    stable filter (poles at Omega_c(-1 +/- i phi)); see README.
//  * Power spectral densities are double-sided in ordinary frequency:
//    <F^2> = integral of S_F df over f in (-inf, inf), equivalently
//    dOmega/2pi. With this convention the Langevin force density is
//    S_F = 2 kB T M Gamma_m. Display spectra fold to one-sided (factor 2).

/// Bare mechanical susceptibility chi_m(Omega) = 1 / (M (Omega_m^2 - Omega^2
/// - i Gamma_m Omega)), in m/N. At Omega = 0 this is 1/k; at resonance it is
/// purely imaginary with magnitude Q/k.
ComplexResponse mech_susceptibility(const MechanicalMode& mode, double omega);

/// Dimensionless cavity response Delta = (1 - i Omega/Omega_c)^2 + phi^2.
/// Never vanishes for real Omega and real phi.
ComplexResponse cavity_delta(const CavitySetup& cavity, double phi, double omega);

/// Nonlinear phase shift phi_NL = 8 pi P / (lambda gamma c M Omega_m^2)
/// characterizing the optomechanical coupling; linear in the intracavity
/// power P.
double nonlinear_phase(const CavitySetup& cavity, const MechanicalMode& mode,
                       double p_intracavity);

/// Intracavity power at the operating detuning, p_res / (1 + phi^2)
/// (Lorentzian approximation of the Airy peak, valid at high finesse).
double intracavity_power(const OperatingPoint& op);

/// Radiation-pressure force transfer H(Omega) = -2 phi phi_NL M Omega_m^2 /
/// Delta(Omega), in N/m, so that F_rad[Omega] = H(Omega) x[Omega]. Uses the
/// intracavity power at the operating detuning. Zero at phi = 0. At Omega ->
/// 0 the (real) value has the sign of -phi: softening for phi < 0, binding
/// for phi > 0.
ComplexResponse radiation_force_transfer(const OperatingPoint& op, double omega);

/// Effective mechanical susceptibility, m/N:
/// chi_eff^{-1} = chi_m^{-1] + 2 (phi phi_NL / Delta) M Omega_m^2.
/// Reduces to chi_m when phi = 0 or the power vanishes.
ComplexResponse effective_susceptibility(const OperatingPoint& op, double omega);

/// Effective resonance frequency, damping and temperature, with Delta
/// evaluated at Omega_m:
///   Omega_eff = Omega_m (1 + Re(phi phi_NL / Delta))
///   Gamma_eff = Gamma_m (1 - 2 Q Im(phi phi_NL / Delta))
///   T_eff     = T Gamma_m / Gamma_eff   (only when Gamma_eff > 0)
/// An unstable point (Gamma_eff <= 0) is reported through the flag; t_eff is
/// left disengaged rather than returned negative.
EffectiveDynamics effective_dynamics(const OperatingPoint& op);

/// Langevin force spectral density S_F = 2 kB T M Gamma_m, N^2/Hz
/// (double-sided convention, see above).
double langevin_psd(const MechanicalMode& mode, double temperature);

/// Displacement noise density S_x(Omega) = |chi_eff(Omega)|^2 S_F(T_bath),
/// m^2/Hz (double-sided). Throws std::domain_error for an unstable operating
/// point.
double displacement_psd(const OperatingPoint& op, double omega);

/// Integral of the closed-form displacement PSD over all frequencies
/// (measure dOmega/2pi), i.e. the predicted displacement variance <x^2> in
/// m^2. In the small-frequency-shift regime this equals
/// kB T_eff / (M Omega_eff^2). Throws std::domain_error if unstable.
double integrated_displacement_variance(const OperatingPoint& op);

/// Intracavity power (W, at the given detuning) at which Gamma_eff crosses
/// zero, obtained in closed form from the linearity of phi_NL in P. Returns
/// nullopt when no threshold exists at this detuning sign (the detuning only
/// cools this mode). phi = 0 is rejected.
std::optional<double> instability_threshold(const MechanicalMode& mode,
                                            const CavitySetup& cavity, double phi);

}  // namespace optospring
