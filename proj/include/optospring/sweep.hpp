#pragma once

#include <string>
#include <utility>
#include <vector>

#include "optospring/config.hpp"
#include "optospring/spectral.hpp"

namespace optospring {

/// One cell of the incident-power / detuning response grid. Shift and ratio
/// stay meaningful for unstable cells (the ratio just goes negative), so
/// they are always filled in.
struct ResponsePoint {
    double power_in_w;
    double phi;
    double freq_shift_hz;  // (Omega_eff - Omega_m) / 2 pi
    double damping_ratio;  // Gamma_eff / Gamma_m, signed
    bool stable;
};

/// Effective dynamics over incident_powers x detunings, row-major in the
/// order (power, then detuning) as configured.
std::vector<ResponsePoint> response_sweep(const ExperimentConfig& config);

/// Damping chart in the detuning / intracavity power plane plus the
/// refined instability boundary. Cells outside the Airy-reachable region
/// (incident-power grids only) hold NaN.
struct StabilityMap {
    std::vector<double> phis;
    std::vector<double> powers;                      // intracavity W
    std::vector<std::vector<double>> damping_ratio;  // [phi index][power index]
    std::vector<std::pair<double, double>> boundary;  // (phi, threshold W)
};

/// Requires config.stability_map. Boundary points are refined by bisection
/// until |Gamma_eff| < 1e-6 * Gamma_m, which pins the power to 1e-6
/// relative.
StabilityMap stability_map(const ExperimentConfig& config);

/// Bisection root of Gamma_eff over intracavity power in (0, p_max] at a
/// fixed detuning; NaN when the threshold is absent or out of range. An
/// independent route to the closed-form threshold power.
double bisect_threshold_power(const ExperimentConfig& config, double phi, double p_max);

/// One detuning of the effective-temperature sweep. t_single is the bare
/// single-oscillator value; t_with_background is what a plain Lorentzian
/// fit reports once the tails of the configured background modes lie under
/// the peak. Unstable points carry NaN temperatures; a failed composite
/// fit leaves only t_with_background NaN.
struct TemperaturePoint {
    double phi;
    double t_single;
    double t_with_background;
    bool stable;
};

std::vector<TemperaturePoint> temperature_sweep(const ExperimentConfig& config,
                                                double power_in_w);

/// Composite one-sided displacement spectrum around the analyzed peak: the
/// driven mode with its effective dynamics plus the bare tails of the
/// background modes. Sampling tracks the effective linewidth. Throws
/// std::domain_error for an unstable point.
NoiseSpectrum composite_spectrum(const ExperimentConfig& config, const OperatingPoint& op);

// ---- CSV emitters ---------------------------------------------------------
// All emitters go through CsvWriter, so identical inputs give byte-identical
// files. `hash` is the config fingerprint for the header.

void write_response_csv(const std::string& path, const std::vector<ResponsePoint>& rows,
                        const std::string& hash);
void write_stability_csv(const std::string& path, const StabilityMap& map,
                         const std::string& hash);
void write_temperature_csv(const std::string& path,
                           const std::vector<TemperaturePoint>& rows,
                           const std::string& hash, double power_in_w);

/// Number turned into a filename chunk: '.' becomes 'p', a leading '-'
/// becomes 'm' (0.5 -> "0p5", -0.25 -> "m0p25").
std::string label_number(double v);

}  // namespace optospring
