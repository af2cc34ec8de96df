#include "optospring/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "optospring/constants.hpp"
#include "optospring/core_model.hpp"
#include "optospring/io.hpp"
#include "optospring/parallel.hpp"

namespace optospring {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return out;
}

/// Largest intracavity power the Airy resonance reaches at this detuning
/// for the given incident power.
double airy_limit(const ExperimentConfig& config, double p_in_w, double phi) {
    return config.cavity.coupling_slope * p_in_w / (1.0 + phi * phi);
}

double damping_ratio_at(const ExperimentConfig& config, double phi, double p_cavity) {
    const OperatingPoint op = config.point_intracavity(phi, p_cavity);
    return effective_dynamics(op).gamma_eff / config.target_mode().gamma_m;
}

/// Bisect Gamma_eff over intracavity power in [p_lo, p_hi]; requires a sign
/// change across the bracket. The final width pins the crossing to ~1e-8
/// relative, comfortably inside the 1e-6 boundary contract.
double bisect_in_bracket(const ExperimentConfig& config, double phi, double p_lo,
                         double p_hi) {
    for (int i = 0; i < 64 && (p_hi - p_lo) > 1e-9 * p_hi; ++i) {
        const double mid = 0.5 * (p_lo + p_hi);
        (damping_ratio_at(config, phi, mid) > 0.0 ? p_lo : p_hi) = mid;
    }
    return 0.5 * (p_lo + p_hi);
}

}  // namespace

std::vector<ResponsePoint> response_sweep(const ExperimentConfig& config) {
    std::vector<ResponsePoint> rows;
    rows.reserve(config.incident_powers.size() * config.detunings.size());
    for (double p_in : config.incident_powers) {
        for (double phi : config.detunings) {
            const OperatingPoint op = config.point_incident(phi, p_in);
            const EffectiveDynamics dyn = effective_dynamics(op);
            const MechanicalMode& mode = config.target_mode();
            rows.push_back({p_in, phi,
                            (dyn.omega_eff - mode.omega_m) / (2.0 * constants::pi),
                            dyn.gamma_eff / mode.gamma_m, dyn.stable});
        }
    }
    return rows;
}

StabilityMap stability_map(const ExperimentConfig& config) {
    if (!config.stability_map) {
        throw ConfigError("stability map requested but no [stability_map] section given");
    }
    const StabilityMapSpec& spec = *config.stability_map;
    StabilityMap map;
    map.phis = linspace(spec.phi_min, spec.phi_max, spec.phi_points);
    map.powers = linspace(spec.power_min_w, spec.power_max_w, spec.power_points);
    map.damping_ratio.assign(map.phis.size(),
                             std::vector<double>(map.powers.size(), nan_value));

    parallel_for_index(map.phis.size(), [&](std::size_t i) {
        const double phi = map.phis[i];
        const double limit = spec.power_in_w
                                 ? airy_limit(config, *spec.power_in_w, phi)
                                 : std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < map.powers.size(); ++j) {
            const double p = map.powers[j];
            if (p > limit * (1.0 + 1e-12)) continue;  // unreachable, stays NaN
            map.damping_ratio[i][j] = damping_ratio_at(config, phi, p);
        }
    });

    // Refine the Gamma_eff = 0 locus per detuning column. Gamma_eff is
    // affine in power at fixed phi, so a bracket exists exactly when the
    // reachable end of the column has gone unstable.
    std::vector<std::pair<double, double>> boundary(map.phis.size(),
                                                    {nan_value, nan_value});
    parallel_for_index(map.phis.size(), [&](std::size_t i) {
        const double phi = map.phis[i];
        if (phi == 0.0) return;
        double p_hi = spec.power_max_w;
        if (spec.power_in_w) p_hi = std::min(p_hi, airy_limit(config, *spec.power_in_w, phi));
        if (p_hi <= spec.power_min_w) return;
        if (damping_ratio_at(config, phi, spec.power_min_w) <= 0.0) return;
        if (damping_ratio_at(config, phi, p_hi) >= 0.0) return;
        boundary[i] = {phi, bisect_in_bracket(config, phi, spec.power_min_w, p_hi)};
    });
    for (const auto& point : boundary) {
        if (!std::isnan(point.second)) map.boundary.push_back(point);
    }
    return map;
}

double bisect_threshold_power(const ExperimentConfig& config, double phi, double p_max) {
    if (phi == 0.0 || !(p_max > 0.0)) return nan_value;
    if (damping_ratio_at(config, phi, p_max) >= 0.0) return nan_value;
    return bisect_in_bracket(config, phi, 0.0, p_max);
}

NoiseSpectrum composite_spectrum(const ExperimentConfig& config, const OperatingPoint& op) {
    const EffectiveDynamics dyn = effective_dynamics(op);
    if (!dyn.stable) {
        throw std::domain_error("composite_spectrum: unstable operating point");
    }
    const double f_center = config.target_mode().omega_m / (2.0 * constants::pi);
    const double half_span = 12.5e3;
    const double fwhm = dyn.gamma_eff / (2.0 * constants::pi);
    const double df_target = std::clamp(fwhm / 10.0, 0.05, 10.0);
    const int n = static_cast<int>(std::lround(2.0 * half_span / df_target)) + 1;

    std::vector<double> freqs = linspace(f_center - half_span, f_center + half_span, n);
    std::vector<double> psd(freqs.size());
    const std::vector<MechanicalMode> background = config.background_modes();
    std::vector<double> background_force(background.size());
    for (std::size_t j = 0; j < background.size(); ++j) {
        background_force[j] = langevin_psd(background[j], op.temperature_bath);
    }
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double omega = 2.0 * constants::pi * freqs[i];
        double s = 2.0 * displacement_psd(op, omega);
        for (std::size_t j = 0; j < background.size(); ++j) {
            s += 2.0 * background_force[j] * std::norm(mech_susceptibility(background[j], omega));
        }
        psd[i] = s;
    }
    const double df = freqs[1] - freqs[0];
    return NoiseSpectrum(std::move(freqs), std::move(psd), Provenance::closed_form, df);
}

std::vector<TemperaturePoint> temperature_sweep(const ExperimentConfig& config,
                                                double power_in_w) {
    std::vector<TemperaturePoint> rows(config.detunings.size());
    parallel_for_index(config.detunings.size(), [&](std::size_t i) {
        const double phi = config.detunings[i];
        const OperatingPoint op = config.point_incident(phi, power_in_w);
        const EffectiveDynamics dyn = effective_dynamics(op);
        if (!dyn.stable) {
            rows[i] = {phi, nan_value, nan_value, false};
            return;
        }
        double t_background = nan_value;
        try {
            const NoiseSpectrum composite = composite_spectrum(config, op);
            const LorentzianFit fit = fit_lorentzian(composite);
            t_background = temperature_from_area(fit, config.target_mode());
        } catch (const FitError&) {
            // leave NaN: the composite window held no fittable peak
        }
        rows[i] = {phi, *dyn.t_eff, t_background, true};
    });
    return rows;
}

void write_response_csv(const std::string& path, const std::vector<ResponsePoint>& rows,
                        const std::string& hash) {
    CsvWriter csv(path, {"power_in_w", "phi", "freq_shift_hz", "damping_ratio", "stable"},
                  {"W", "1", "Hz", "1", "bool"}, hash);
    for (const ResponsePoint& row : rows) {
        csv.add_row({format_double(row.power_in_w), format_double(row.phi),
                     format_double(row.freq_shift_hz), format_double(row.damping_ratio),
                     row.stable ? "1" : "0"});
    }
    csv.finish();
}

void write_stability_csv(const std::string& path, const StabilityMap& map,
                         const std::string& hash) {
    CsvWriter csv(path, {"kind", "phi", "power_w", "damping_ratio"}, {"-", "1", "W", "1"},
                  hash);
    csv.add_comment("kind=cell rows scan the grid row-major (phi outer, power inner)");
    csv.add_comment("damping_ratio nan marks cells outside the Airy-reachable region");
    csv.add_comment("kind=boundary rows trace the Gamma_eff = 0 locus (ratio 0 by "
                    "construction)");
    for (std::size_t i = 0; i < map.phis.size(); ++i) {
        for (std::size_t j = 0; j < map.powers.size(); ++j) {
            csv.add_row({"cell", format_double(map.phis[i]), format_double(map.powers[j]),
                         format_double(map.damping_ratio[i][j])});
        }
    }
    for (const auto& [phi, power] : map.boundary) {
        csv.add_row({"boundary", format_double(phi), format_double(power), "0"});
    }
    csv.finish();
}

void write_temperature_csv(const std::string& path,
                           const std::vector<TemperaturePoint>& rows,
                           const std::string& hash, double power_in_w) {
    CsvWriter csv(path, {"phi", "t_eff_single_k", "t_eff_with_background_k", "stable"},
                  {"1", "K", "K", "bool"}, hash);
    csv.add_comment("incident_power_w: " + format_double(power_in_w));
    csv.add_comment("unstable detunings carry nan temperatures");
    for (const TemperaturePoint& row : rows) {
        csv.add_row({format_double(row.phi), format_double(row.t_single),
                     format_double(row.t_with_background), row.stable ? "1" : "0"});
    }
    csv.finish();
}

std::string label_number(double v) {
    // Shortest spelling that still round-trips, so labels read naturally
    // (0.03, not 0.029999999999999999).
    char buf[64];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    std::string out(buf);
    for (char& c : out) {
        if (c == '.') c = 'p';
        else if (c == '-') c = 'm';
    }
    out.erase(std::remove(out.begin(), out.end(), '+'), out.end());
    return out;
}

}  // namespace optospring
