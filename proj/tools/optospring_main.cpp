// optospring: closed-form sweeps, stochastic simulation and spectrum fits
// for a mechanical mode coupled to a detuned high-finesse cavity.
//
// Exit codes: 0 success, 2 configuration or input error, 3 every requested
// operating point was unstable, 4 fit failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "optospring/config.hpp"
#include "optospring/constants.hpp"
#include "optospring/core_model.hpp"
#include "optospring/io.hpp"
#include "optospring/spectral.hpp"
#include "optospring/sweep.hpp"
#include "optospring/svg.hpp"

namespace {

using namespace optospring;

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_unstable = 3;
constexpr int exit_fit = 4;

struct Options {
    std::string config_path;
    std::vector<double> phis;
    std::vector<double> power_in_mw;
    std::vector<double> power_cavity_w;
    bool svg = false;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    // fit-only
    std::string input_path;
    std::string calibration_path;
};

/// Operating power for one run: incident watts or direct intracavity watts.
struct PowerChoice {
    double watts;
    bool incident;

    std::string label() const {
        return incident ? "p" + label_number(watts * 1e3) + "mW"
                        : "pcav" + label_number(watts) + "W";
    }
    OperatingPoint point(const ExperimentConfig& config, double phi) const {
        return incident ? config.point_incident(phi, watts)
                        : config.point_intracavity(phi, watts);
    }
};

ExperimentConfig load_config(const Options& opt) {
    ExperimentConfig config = parse_config_file(opt.config_path);
    if (!opt.phis.empty()) config.detunings = opt.phis;
    if (!opt.power_in_mw.empty()) {
        config.incident_powers.clear();
        for (double p : opt.power_in_mw) config.incident_powers.push_back(p * 1e-3);
    }
    if (!opt.out_dir.empty()) config.output_dir = opt.out_dir;
    if (opt.seed && config.sim) config.sim->seed = *opt.seed;
    validate(config);
    std::filesystem::create_directories(config.output_dir);
    return config;
}

std::string out_path(const ExperimentConfig& config, const std::string& name) {
    return (std::filesystem::path(config.output_dir) / name).string();
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

std::vector<PowerChoice> requested_powers(const ExperimentConfig& config,
                                          const Options& opt) {
    std::vector<PowerChoice> powers;
    if (!opt.power_cavity_w.empty()) {
        for (double p : opt.power_cavity_w) powers.push_back({p, false});
    } else {
        for (double p : config.incident_powers) powers.push_back({p, true});
    }
    return powers;
}

// ---- spectrum -------------------------------------------------------------

int cmd_spectrum(const Options& opt) {
    const ExperimentConfig config = load_config(opt);

    struct Series {
        PowerChoice power;
        std::vector<double> detunings;
    };
    std::vector<Series> series;
    const bool overridden =
        !opt.phis.empty() || !opt.power_in_mw.empty() || !opt.power_cavity_w.empty();
    if (overridden) {
        for (const PowerChoice& p : requested_powers(config, opt)) {
            series.push_back({p, config.detunings});
        }
    } else {
        for (const SpectrumSeries& s : config.spectrum_series) {
            series.push_back({{s.power_in_w, true}, s.detunings});
        }
        if (series.empty()) {
            std::cerr << "optospring: no [spectrum_series] configured; pass --phi and "
                         "--power-in/--power-cavity\n";
            return exit_config;
        }
    }

    const double f_m = config.target_mode().omega_m / (2.0 * constants::pi);
    int stable_points = 0, unstable_points = 0;
    for (const Series& s : series) {
        std::vector<SvgSeries> chart;
        for (double phi : s.detunings) {
            const OperatingPoint op = s.power.point(config, phi);
            if (!effective_dynamics(op).stable) {
                ++unstable_points;
                std::cerr << "optospring: skipping unstable point phi="
                          << label_number(phi) << " at " << s.power.label() << "\n";
                continue;
            }
            ++stable_points;
            const NoiseSpectrum spectrum =
                closed_form_spectrum(op, f_m - 10e3, f_m + 10e3, 4001);
            const std::string name =
                "spectrum-" + s.power.label() + "-phi-" + label_number(phi) + ".spec";
            write_spectrum(out_path(config, name), spectrum);
            if (opt.svg) {
                SvgSeries line{"phi = " + label_number(phi), {}};
                for (std::size_t i = 0; i < spectrum.size(); ++i) {
                    line.points.emplace_back(spectrum.freqs[i], spectrum.psd[i]);
                }
                chart.push_back(std::move(line));
            }
        }
        if (opt.svg && !chart.empty()) {
            write_text(out_path(config, "spectra-" + s.power.label() + ".svg"),
                       line_chart_svg("displacement noise, " + s.power.label(),
                                      "frequency (Hz)", "S_x (m^2/Hz)", chart, true));
        }
    }
    return stable_points == 0 && unstable_points > 0 ? exit_unstable : exit_ok;
}

// ---- response sweep -------------------------------------------------------

int cmd_response_sweep(const Options& opt) {
    const ExperimentConfig config = load_config(opt);
    const std::vector<ResponsePoint> rows = response_sweep(config);
    write_response_csv(out_path(config, "response-sweep.csv"), rows,
                       config_hash(config));

    if (opt.svg) {
        std::vector<SvgSeries> damping, shift;
        for (double p : config.incident_powers) {
            SvgSeries d{label_number(p * 1e3) + " mW", {}};
            SvgSeries f{label_number(p * 1e3) + " mW", {}};
            for (const ResponsePoint& row : rows) {
                if (row.power_in_w != p) continue;
                d.points.emplace_back(row.phi, row.damping_ratio);
                f.points.emplace_back(row.phi, row.freq_shift_hz);
            }
            damping.push_back(std::move(d));
            shift.push_back(std::move(f));
        }
        write_text(out_path(config, "response-damping.svg"),
                   line_chart_svg("effective damping vs detuning", "detuning phi",
                                  "Gamma_eff / Gamma_m", damping));
        write_text(out_path(config, "response-shift.svg"),
                   line_chart_svg("optical spring shift vs detuning", "detuning phi",
                                  "frequency shift (Hz)", shift));
    }
    for (const ResponsePoint& row : rows) {
        if (row.stable) return exit_ok;
    }
    return exit_unstable;
}

// ---- stability map --------------------------------------------------------

int cmd_stability_map(const Options& opt) {
    ExperimentConfig config = load_config(opt);
    if (!opt.power_cavity_w.empty() || !opt.power_in_mw.empty()) {
        StabilityMapSpec spec =
            config.stability_map.value_or(StabilityMapSpec{-1.0, 1.0, 81, 0.0, 0.0, 81, {}});
        if (!opt.power_cavity_w.empty()) {
            spec.power_min_w = 0.0;
            spec.power_max_w = opt.power_cavity_w.front();
            spec.power_in_w.reset();
        } else {
            const double p_in = opt.power_in_mw.front() * 1e-3;
            spec.power_min_w = 0.0;
            spec.power_max_w = config.cavity.coupling_slope * p_in;
            spec.power_in_w = p_in;
        }
        config.stability_map = spec;
        validate(config);
    }
    if (!config.stability_map) {
        std::cerr << "optospring: no [stability_map] section; pass --power-cavity or "
                     "--power-in to define the power axis\n";
        return exit_config;
    }

    const StabilityMap map = stability_map(config);
    write_stability_csv(out_path(config, "stability-map.csv"), map, config_hash(config));
    if (opt.svg) {
        write_text(out_path(config, "stability-map.svg"),
                   heat_map_svg("damping ratio in the detuning/power plane",
                                "detuning phi", "intracavity power (W)", map.phis,
                                map.powers, map.damping_ratio, map.boundary));
    }
    return exit_ok;
}

// ---- temperature sweep ----------------------------------------------------

int cmd_temperature_sweep(const Options& opt) {
    const ExperimentConfig config = load_config(opt);
    if (!opt.power_cavity_w.empty()) {
        std::cerr << "optospring: temperature-sweep works from incident power "
                     "(--power-in)\n";
        return exit_config;
    }
    bool any_stable = false;
    for (double p_in : config.incident_powers) {
        const std::vector<TemperaturePoint> rows = temperature_sweep(config, p_in);
        const std::string label = label_number(p_in * 1e3);
        write_temperature_csv(out_path(config, "temperature-sweep-p" + label + "mW.csv"),
                              rows, config_hash(config), p_in);
        if (opt.svg) {
            SvgSeries single{"single oscillator", {}};
            SvgSeries with_bg{"with mode background", {}};
            for (const TemperaturePoint& row : rows) {
                single.points.emplace_back(row.phi, row.t_single);
                with_bg.points.emplace_back(row.phi, row.t_with_background);
            }
            write_text(out_path(config, "temperature-sweep-p" + label + "mW.svg"),
                       line_chart_svg("effective temperature vs detuning, " + label +
                                          " mW in",
                                      "detuning phi", "T_eff (K)", {single, with_bg},
                                      true));
        }
        for (const TemperaturePoint& row : rows) any_stable |= row.stable;
    }
    return any_stable ? exit_ok : exit_unstable;
}

// ---- simulate -------------------------------------------------------------

std::size_t welch_segment_for(double fwhm_hz, double dt, std::size_t n_samples) {
    // Want about six bins across the effective linewidth but keep at least
    // two averaged segments.
    const double ideal = 6.0 / (std::max(fwhm_hz, 1e-3) * dt);
    std::size_t seg = 4096;
    while (seg < ideal && seg * 4 <= n_samples) seg *= 2;
    while (seg * 2 > n_samples && seg > 16) seg /= 2;
    return seg;
}

int cmd_simulate(const Options& opt) {
    const ExperimentConfig config = load_config(opt);
    if (!config.sim) {
        std::cerr << "optospring: simulate needs a [sim] section in the config\n";
        return exit_config;
    }
    if (opt.phis.size() != 1 ||
        (opt.power_in_mw.size() + opt.power_cavity_w.size()) != 1) {
        std::cerr << "optospring: simulate needs exactly one --phi and one "
                     "--power-in/--power-cavity\n";
        return exit_config;
    }
    const double phi = opt.phis.front();
    const PowerChoice power = requested_powers(config, opt).front();
    const OperatingPoint op = power.point(config, phi);
    const EffectiveDynamics dyn = effective_dynamics(op);
    const SimConfig sim_config = config.sim->resolve(op);
    const std::string base = "sim-phi-" + label_number(phi) + "-" + power.label();
    const std::string hash = config_hash(config);

    if (!dyn.stable) {
        // Growth-rate report from a noise-free displaced run: the unstable
        // envelope is deterministic, so the rate emerges cleanly.
        SimConfig growth_config(sim_config.dt,
                                std::min(sim_config.duration,
                                         30.0 / std::abs(dyn.gamma_eff)),
                                sim_config.seed, 0.0, 1);
        OperatingPoint cold(op.mode, op.cavity, op.phi, op.p_res, 0.0);
        const Trajectory trajectory = integrate(cold, growth_config, 1e-13, 0.0);
        const RingdownEstimate estimate = ringdown_rate(trajectory);
        const double growth_rate = -estimate.rate;
        const double expected = -dyn.gamma_eff / 2.0;
        write_trajectory_text(out_path(config, base + "-trajectory.txt"), trajectory);
        write_trajectory_raw(out_path(config, base + "-trajectory.raw"), trajectory);
        write_key_values(out_path(config, base + "-growth.txt"),
                         {{"phi", format_double(phi)},
                          {"power_w", format_double(power.watts)},
                          {"power_is_incident", power.incident ? "1" : "0"},
                          {"gamma_eff_rad_s", format_double(dyn.gamma_eff)},
                          {"growth_rate_rad_s", format_double(growth_rate)},
                          {"expected_growth_rate_rad_s", format_double(expected)},
                          {"rel_error",
                           format_double(growth_rate / expected - 1.0)},
                          {"envelope_r_squared", format_double(estimate.r_squared)},
                          {"config_hash", hash}});
        std::cerr << "optospring: unstable point, growth-rate report written to "
                  << out_path(config, base + "-growth.txt") << "\n";
        return exit_unstable;
    }

    const std::vector<Trajectory> ensemble = simulate_ensemble(op, sim_config);
    write_trajectory_text(out_path(config, base + "-trajectory.txt"), ensemble.front());
    write_trajectory_raw(out_path(config, base + "-trajectory.raw"), ensemble.front());

    const double fwhm = dyn.gamma_eff / (2.0 * constants::pi);
    const std::size_t segment =
        welch_segment_for(fwhm, sim_config.dt, ensemble.front().samples.size());
    const NoiseSpectrum spectrum = welch_psd_ensemble(ensemble, segment);
    write_spectrum(out_path(config, base + "-spectrum.spec"), spectrum);

    LorentzianFit fit;
    try {
        fit = fit_lorentzian(spectrum);
    } catch (const FitError& e) {
        std::cerr << "optospring: fit of the simulated spectrum failed: " << e.what()
                  << "\n";
        return exit_fit;
    }
    const double t_sim = temperature_from_area(fit, config.target_mode());
    auto items = fit_report_items(fit);
    items.emplace_back("temperature_area_k", format_double(t_sim));
    items.emplace_back("config_hash", hash);
    write_key_values(out_path(config, base + "-fit.txt"), items);

    CsvWriter csv(out_path(config, base + "-comparison.csv"),
                  {"observable", "unit", "simulated", "closed_form", "rel_error"},
                  {"-", "-", "see unit column", "see unit column", "1"}, hash);
    csv.add_comment("phi: " + format_double(phi));
    csv.add_comment("power_w: " + format_double(power.watts) +
                    (power.incident ? " (incident)" : " (intracavity)"));
    auto row = [&](const std::string& name, const std::string& unit, double sim_v,
                   double closed_v) {
        csv.add_row({name, unit, format_double(sim_v), format_double(closed_v),
                     format_double(sim_v / closed_v - 1.0)});
    };
    row("omega_eff", "rad/s", 2.0 * constants::pi * fit.center, dyn.omega_eff);
    row("gamma_eff", "rad/s", 2.0 * constants::pi * fit.fwhm, dyn.gamma_eff);
    row("t_eff", "K", t_sim, *dyn.t_eff);
    csv.finish();

    if (opt.svg) {
        SvgSeries sim_line{"simulated (Welch)", {}};
        for (std::size_t i = 0; i < spectrum.size(); ++i) {
            sim_line.points.emplace_back(spectrum.freqs[i], spectrum.psd[i]);
        }
        const NoiseSpectrum closed = closed_form_spectrum(
            op, spectrum.freqs.front(), spectrum.freqs.back(), 2001);
        SvgSeries closed_line{"closed form", {}};
        for (std::size_t i = 0; i < closed.size(); ++i) {
            closed_line.points.emplace_back(closed.freqs[i], closed.psd[i]);
        }
        write_text(out_path(config, base + "-spectrum.svg"),
                   line_chart_svg("simulated vs closed-form spectrum",
                                  "frequency (Hz)", "S_x (m^2/Hz)",
                                  {sim_line, closed_line}, true));
    }
    return exit_ok;
}

// ---- fit ------------------------------------------------------------------

int cmd_fit(const Options& opt) {
    const ExperimentConfig config = load_config(opt);
    NoiseSpectrum spectrum = read_spectrum(opt.input_path);
    double gain = 1.0;
    if (!opt.calibration_path.empty()) {
        if (opt.phis.size() != 1) {
            std::cerr << "optospring: --calibration needs the matching --phi\n";
            return exit_config;
        }
        const CalibrationTable table = read_calibration(opt.calibration_path);
        gain = table.gain(opt.phis.front());
        spectrum = apply_calibration(spectrum, table, opt.phis.front());
    }

    LorentzianFit fit;
    try {
        fit = fit_lorentzian(spectrum);
    } catch (const FitError& e) {
        std::cerr << "optospring: " << e.what() << "\n";
        return exit_fit;
    }
    const MechanicalMode& mode = config.target_mode();
    const double t_area = temperature_from_area(fit, mode);
    const double t_linewidth =
        config.bath_temperature * mode.gamma_m / (2.0 * constants::pi * fit.fwhm);

    auto items = fit_report_items(fit);
    items.emplace_back("detection_gain_applied", format_double(gain));
    items.emplace_back("temperature_area_k", format_double(t_area));
    items.emplace_back("temperature_linewidth_k", format_double(t_linewidth));
    for (const auto& [key, value] : items) std::cout << key << '=' << value << '\n';
    write_key_values(out_path(config, "fit-report.txt"), items);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "optospring: optical spring / cavity cooling toolkit for a "
        "micro-resonator in a detuned high-finesse cavity"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* cmd, bool with_powers) {
        cmd->add_option("--config", opt.config_path, "experiment description file")
            ->required();
        cmd->add_option("--out", opt.out_dir, "output directory (overrides the config)");
        if (with_powers) {
            auto* p_in = cmd->add_option("--power-in", opt.power_in_mw,
                                         "incident power(s), milliwatts");
            auto* p_cav = cmd->add_option("--power-cavity", opt.power_cavity_w,
                                          "intracavity power(s) at the detuning, watts");
            p_in->excludes(p_cav);
            p_cav->excludes(p_in);
        }
        cmd->add_flag("--svg", opt.svg, "also emit SVG charts");
        return cmd;
    };
    auto add_phi = [&](CLI::App* cmd) {
        cmd->add_option("--phi", opt.phis, "detuning(s), overrides the config list");
    };

    auto* spectrum = add_common(app.add_subcommand("spectrum",
                                                   "closed-form noise spectra per detuning"),
                                true);
    add_phi(spectrum);
    auto* response = add_common(
        app.add_subcommand("response-sweep",
                           "frequency shift and damping over power x detuning"),
        true);
    add_phi(response);
    auto* map = add_common(app.add_subcommand("stability-map",
                                              "damping chart and instability boundary"),
                           true);
    auto* temperature = add_common(
        app.add_subcommand("temperature-sweep",
                           "effective temperature vs detuning per power"),
        true);
    add_phi(temperature);
    auto* simulate = add_common(app.add_subcommand("simulate",
                                                   "Langevin run, Welch spectrum, fit, "
                                                   "closed-form comparison"),
                                true);
    add_phi(simulate);
    simulate->add_option("--seed", opt.seed, "overrides the [sim] seed");
    auto* fit = add_common(app.add_subcommand("fit", "fit a spectrum file"), false);
    add_phi(fit);
    fit->add_option("--input", opt.input_path, "spectrum file to fit")->required();
    fit->add_option("--calibration", opt.calibration_path,
                    "detection gain table (needs --phi)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (spectrum->parsed()) return cmd_spectrum(opt);
        if (response->parsed()) return cmd_response_sweep(opt);
        if (map->parsed()) return cmd_stability_map(opt);
        if (temperature->parsed()) return cmd_temperature_sweep(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (fit->parsed()) return cmd_fit(opt);
    } catch (const FitError& e) {
        std::cerr << "optospring: " << e.what() << "\n";
        return exit_fit;
    } catch (const std::exception& e) {
        std::cerr << "optospring: " << e.what() << "\n";
        return exit_config;
    }
    return exit_config;
}
