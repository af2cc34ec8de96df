#pragma once

#include <complex>
#include <optional>
#include <string>

namespace optospring {

using ComplexResponse = std::complex<double>;

/// One vibration mode of the micro-resonator, treated as a single harmonic
/// oscillator. Constructed from (Omega_m, M, Q); the damping rate
/// Gamma_m = Omega_m / Q is derived.
struct MechanicalMode {
    double omega_m;    // angular resonance frequency, rad/s
    double mass;       // effective mass, kg
    double q_factor;   // dimensionless quality factor
    double gamma_m;    // damping rate, rad/s

    MechanicalMode(double omega_m_, double mass_, double q_factor_);

    static MechanicalMode from_frequency_hz(double f_hz, double mass_, double q_factor_);

    double spring_constant() const { return mass * omega_m * omega_m; }
};

/// Optical cavity parameters and input coupling. gamma = pi / finesse is the
/// per-round-trip damping; omega_c is the cavity bandwidth (an independent
/// measured input, not derived from length and finesse). coupling_slope is
/// the measured resonant intracavity power per unit incident power.
struct CavitySetup {
    double wavelength;      // m
    double length;          // m
    double finesse;         // dimensionless
    double gamma;           // pi / finesse, dimensionless
    double omega_c;         // cavity bandwidth, rad/s
    double coupling_slope;  // P_intracavity(resonance) / P_incident

    CavitySetup(double wavelength_, double length_, double finesse_, double omega_c_,
                double coupling_slope_);
};

/// A (mode, cavity, detuning, power, bath) tuple fixing the linearized
/// dynamics. `phi` is the cavity detuning normalized to gamma; `p_res` is the
/// intracavity power at resonance (phi = 0). The power actually circulating
/// at detuning phi follows the Lorentzian approximation of the Airy peak,
/// p(phi) = p_res / (1 + phi^2).
struct OperatingPoint {
    MechanicalMode mode;
    CavitySetup cavity;
    double phi;               // normalized detuning, signed
    double p_res;             // intracavity power at resonance, W
    double temperature_bath;  // K

    OperatingPoint(MechanicalMode mode_, CavitySetup cavity_, double phi_, double p_res_,
                   double temperature_bath_);

    /// Same operating point but with the intracavity power specified at the
    /// detuning phi itself (the {phi, P} plane of the stability map) rather
    /// than at resonance.
    static OperatingPoint at_intracavity_power(MechanicalMode mode_, CavitySetup cavity_,
                                               double phi_, double p_at_phi,
                                               double temperature_bath_);

    /// Operating point from incident power, converted through the measured
    /// coupling slope: p_res = coupling_slope * p_incident.
    static OperatingPoint from_incident_power(MechanicalMode mode_, CavitySetup cavity_,
                                              double phi_, double p_incident,
                                              double temperature_bath_);
};

/// Radiation-pressure-modified oscillator parameters. t_eff is defined only
/// for a stable point (gamma_eff > 0); an unstable point is reported through
/// the flag rather than as a negative temperature.
struct EffectiveDynamics {
    double omega_eff;             // rad/s
    double gamma_eff;             // rad/s, signed
    std::optional<double> t_eff;  // K, engaged iff stable
    bool stable;                  // gamma_eff > 0
};

}  // namespace optospring
