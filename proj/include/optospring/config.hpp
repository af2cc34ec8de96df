#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "optospring/sim.hpp"
#include "optospring/types.hpp"

namespace optospring {

/// Invalid or malformed experiment description. Parse-time messages cite
/// file:line; semantic messages name the offending section and key.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Simulation knobs as written in a config file. dt_s = 0 picks the
/// automatic step for the operating point at hand, so the concrete
/// SimConfig is only built once the point is known.
struct SimSpec {
    double dt_s = 0.0;
    double duration_s = 0.0;
    std::uint64_t seed = 0;
    double burn_in_s = 0.0;
    int n_trajectories = 1;

    SimConfig resolve(const OperatingPoint& op) const;
};

/// One family of thermal-noise spectra: a fixed incident power with a list
/// of detunings, mirroring one measurement series.
struct SpectrumSeries {
    double power_in_w = 0.0;
    std::vector<double> detunings;
};

/// Grid description for the damping chart in the detuning/intracavity power
/// plane. The power axis is always intracavity watts; when the grid is
/// derived from an incident power, cells above the Airy envelope
/// P > slope * P_in / (1 + phi^2) are unreachable and get masked.
struct StabilityMapSpec {
    double phi_min = 0.0;
    double phi_max = 0.0;
    int phi_points = 0;
    double power_min_w = 0.0;
    double power_max_w = 0.0;
    int power_points = 0;
    /// Set when the power range came from an incident power; holds that
    /// power in watts and turns on Airy masking.
    std::optional<double> power_in_w;
};

struct CalibrationSpec {
    double drive_amplitude_m = 1e-13;
    double drive_freq_hz = 814e3;
};

/// Complete experiment description. The first mode is the one analyzed and
/// driven in sweeps; any further modes act as the thermal background that
/// other resonator modes contribute near the analyzed peak.
struct ExperimentConfig {
    std::vector<MechanicalMode> modes;
    CavitySetup cavity;
    double bath_temperature = 300.0;
    std::vector<double> incident_powers;  // W
    std::vector<double> detunings;
    std::string output_dir = "optospring-out";
    std::optional<SimSpec> sim;
    std::vector<SpectrumSeries> spectrum_series;
    std::optional<StabilityMapSpec> stability_map;
    CalibrationSpec calibration;

    const MechanicalMode& target_mode() const { return modes.front(); }
    std::vector<MechanicalMode> background_modes() const;
    OperatingPoint point_incident(double phi, double power_in_w) const;
    OperatingPoint point_intracavity(double phi, double power_w) const;
};

/// Throws ConfigError unless every invariant holds (modes and grids
/// non-empty, detunings inside (-3, 3), positive powers, sane map grid).
void validate(const ExperimentConfig& config);

/// Parse the INI-style text (sections in brackets, key = value lines, '#'
/// comments, comma-separated lists). [mode] and [spectrum_series] repeat;
/// the result is validated before it is returned. `name` seeds the
/// file:line prefix of diagnostics.
ExperimentConfig parse_config_text(const std::string& text, const std::string& name);
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical field dump used for fingerprinting: fixed key order, doubles
/// via format_double. Output paths are excluded so a relocated run hashes
/// identically.
std::string canonical_text(const ExperimentConfig& config);

/// FNV-1a 64 of canonical_text as 16 hex digits; lands in every emitted
/// file header.
std::string config_hash(const ExperimentConfig& config);

}  // namespace optospring
