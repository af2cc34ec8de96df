// End-to-end acceptance suite. Every numbered criterion prints exactly one
// PASS/FAIL line; indented lines above it carry the measured values so a
// failure can be diagnosed from the log alone. The process exits nonzero if
// any criterion fails.
//
// The slow criteria (2, 6, 7) run long Langevin ensembles; the whole suite
// takes a few minutes on one core. Trajectories are integrated one at a time
// and discarded after use so the peak footprint stays near a single record.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "optospring/config.hpp"
#include "optospring/constants.hpp"
#include "optospring/core_model.hpp"
#include "optospring/filter.hpp"
#include "optospring/sim.hpp"
#include "optospring/spectral.hpp"
#include "optospring/sweep.hpp"

using namespace optospring;

namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

int g_failures = 0;
bool g_ok = true;
int g_number = 0;
std::string g_title;

void begin(int number, const char* title) {
    g_number = number;
    g_title = title;
    g_ok = true;
    std::printf("criterion %d: %s\n", number, title);
    std::fflush(stdout);
}

void note(const char* fmt, ...) {
    std::va_list args;
    va_start(args, fmt);
    std::printf("    ");
    std::vprintf(fmt, args);
    std::printf("\n");
    va_end(args);
    std::fflush(stdout);
}

void check(bool ok, const char* label) {
    if (!ok) {
        g_ok = false;
        note("FAILED: %s", label);
    }
}

/// Relative comparison with a log line either way.
void check_within(const char* label, double measured, double target, double tol) {
    const double dev = std::abs(measured / target - 1.0);
    note("%s = %.6g vs %.6g  (dev %.3g%%, tol %g%%)%s", label, measured, target, dev * 100.0,
         tol * 100.0, dev <= tol ? "" : "  <-- out of tolerance");
    if (!(dev <= tol)) g_ok = false;
}

void verdict() {
    std::printf("%s  criterion %d: %s\n\n", g_ok ? "PASS" : "FAIL", g_number, g_title.c_str());
    if (!g_ok) ++g_failures;
    std::fflush(stdout);
}

// ---------------------------------------------------------------------------

// 1. Thermal Langevin force density at the shipped mode: 8.0e-25 N^2/Hz
//    within 2% at 300 K.
void criterion_1(const ExperimentConfig& cfg) {
    begin(1, "thermal Langevin force density");
    const double sf = langevin_psd(cfg.target_mode(), 300.0);
    check_within("S_F(300 K) [N^2/Hz]", sf, 8.0e-25, 0.02);
    verdict();
}

// 2. Thermal displacement rms: closed form 2.9e-14 m within 2%, and a
//    Langevin ensemble (8 trajectories, 100/Gamma_m each, ~1e7 steps per
//    trajectory) reproducing the closed form within 5%.
void criterion_2(const ExperimentConfig& cfg) {
    begin(2, "thermal displacement rms, closed form and Langevin ensemble");
    const auto op =
        OperatingPoint::at_intracavity_power(cfg.target_mode(), cfg.cavity, 0.0, 0.0, 300.0);
    const double closed = std::sqrt(integrated_displacement_variance(op));
    check_within("closed-form x_rms [m]", closed, 2.9e-14, 0.02);

    const double dt = SimConfig::default_dt(op);
    const double duration = 100.0 / op.mode.gamma_m;
    const double burn = 20.0 / op.mode.gamma_m;
    const int n_traj = 8;
    note("ensemble: %d trajectories x %.3g s at dt = %.3g s (%.2e steps each)", n_traj,
         duration, dt, duration / dt);
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (int k = 0; k < n_traj; ++k) {
        const auto traj = integrate(op, SimConfig(dt, duration, 4242 + k, burn, 1));
        check(traj.outcome == SimOutcome::completed, "trajectory completed");
        for (double x : traj.samples) sum_sq += x * x;
        count += traj.samples.size();
    }
    const double simulated = std::sqrt(sum_sq / static_cast<double>(count));
    check_within("simulated x_rms [m]", simulated, closed, 0.05);
    verdict();
}

// 3. Spring constant implied by the shipped defaults: M Omega_m^2 = 5.0e6 N/m
//    within 2%.
void criterion_3(const ExperimentConfig& cfg) {
    begin(3, "spring constant of the shipped target mode");
    check_within("M Omega_m^2 [N/m]", cfg.target_mode().spring_constant(), 5.0e6, 0.02);
    verdict();
}

// 4. The 2824 kHz mode lies above the cavity bandwidth, so its spring shift
//    must carry the opposite sign to the 814 kHz mode at the same small
//    positive detuning and power.
void criterion_4(const ExperimentConfig& cfg) {
    begin(4, "opposite spring shift for the mode above the cavity bandwidth");
    const MechanicalMode* high = nullptr;
    for (const auto& m : cfg.modes) {
        if (std::abs(m.omega_m / kTwoPi - 2824e3) < 1e3) high = &m;
    }
    check(high != nullptr, "2824 kHz mode present in the defaults");
    if (high == nullptr) {
        verdict();
        return;
    }
    const double phi = 0.05;
    const double p_in = 3.2e-3;
    const auto low_dyn = effective_dynamics(
        OperatingPoint::from_incident_power(cfg.target_mode(), cfg.cavity, phi, p_in, 300.0));
    const auto high_dyn = effective_dynamics(
        OperatingPoint::from_incident_power(*high, cfg.cavity, phi, p_in, 300.0));
    const double shift_low = (low_dyn.omega_eff - cfg.target_mode().omega_m) / kTwoPi;
    const double shift_high = (high_dyn.omega_eff - high->omega_m) / kTwoPi;
    note("spring shift at phi = +%.2f, %.1f mW incident: 814 kHz mode %+.4g Hz, "
         "2824 kHz mode %+.4g Hz",
         phi, p_in * 1e3, shift_low, shift_high);
    check(shift_low * shift_high < 0.0, "shift signs are opposite");
    verdict();
}

// 5. At 3.2 mW incident (shipped coupling slope): the minimum effective
//    temperature over phi in (-1, 0) lies in [10, 60] K, and some stable
//    positive detuning below threshold exceeds 1000 K.
void criterion_5(const ExperimentConfig& cfg) {
    begin(5, "effective temperature extremes at 3.2 mW incident");
    note("coupling slope from the defaults: %g", cfg.cavity.coupling_slope);
    const double p_in = 3.2e-3;

    double t_min = std::numeric_limits<double>::infinity();
    double phi_min = 0.0;
    for (int i = 1; i <= 999; ++i) {
        const double phi = -1e-3 * static_cast<double>(i);
        const auto dyn = effective_dynamics(cfg.point_incident(phi, p_in));
        if (dyn.stable && dyn.t_eff && *dyn.t_eff < t_min) {
            t_min = *dyn.t_eff;
            phi_min = phi;
        }
    }
    note("min T_eff over phi in (-1, 0): %.4g K at phi = %.3f", t_min, phi_min);
    check(t_min >= 10.0 && t_min <= 60.0, "minimum T_eff within [10, 60] K");

    double t_max = 0.0;
    double phi_max = 0.0;
    for (int i = 1; i <= 999; ++i) {
        const double phi = 1e-3 * static_cast<double>(i);
        const auto dyn = effective_dynamics(cfg.point_incident(phi, p_in));
        if (dyn.stable && dyn.t_eff && *dyn.t_eff > t_max) {
            t_max = *dyn.t_eff;
            phi_max = phi;
        }
    }
    note("max stable T_eff over phi in (0, 1): %.4g K at phi = %.3f", t_max, phi_max);
    check(t_max > 1000.0, "a stable positive detuning exceeds 1000 K");
    verdict();
}

// 6. Instability threshold: exists only at positive detuning; the bisected
//    stability-map boundary matches the closed form to 1e-6 relative; and
//    noise-free runs straddling the boundary flip between decay and growth
//    with envelope rates matching Gamma_eff/2 within 10%.
void criterion_6(const ExperimentConfig& cfg) {
    begin(6, "instability threshold: sign, bisected boundary, time-domain straddle");
    const auto& m = cfg.target_mode();
    const auto& cav = cfg.cavity;

    bool negative_clear = true;
    for (double phi : {-1.0, -0.635, -0.25, -0.02}) {
        negative_clear = negative_clear && !instability_threshold(m, cav, phi).has_value();
    }
    bool positive_present = true;
    for (double phi : {0.02, 0.11, 0.3, 0.8, 1.0}) {
        positive_present = positive_present && instability_threshold(m, cav, phi).has_value();
    }
    note("threshold absent at 4 negative detunings: %s; present at 5 positive: %s",
         negative_clear ? "yes" : "no", positive_present ? "yes" : "no");
    check(negative_clear, "no threshold at negative detuning");
    check(positive_present, "threshold exists at positive detuning");

    check(cfg.stability_map.has_value(), "defaults carry a stability-map grid");
    if (cfg.stability_map) {
        const auto map = stability_map(cfg);
        check(!map.boundary.empty(), "bisected boundary non-empty");
        double worst = 0.0;
        for (const auto& [phi, p_th] : map.boundary) {
            const auto closed = instability_threshold(m, cav, phi);
            if (!closed) {
                check(false, "boundary point at a detuning with no closed-form threshold");
                continue;
            }
            worst = std::max(worst, std::abs(p_th / *closed - 1.0));
        }
        note("boundary vs closed form: %zu points, worst rel dev %.3g (tol 1e-6)",
             map.boundary.size(), worst);
        check(worst < 1e-6, "boundary matches the closed form within 1e-6");
    }

    const double phi_s = 0.11;
    const double p_th = *instability_threshold(m, cav, phi_s);
    note("straddle at phi = %.2f: threshold %.6g W intracavity", phi_s, p_th);

    const auto below = OperatingPoint::at_intracavity_power(m, cav, phi_s, 0.7 * p_th, 0.0);
    const auto below_dyn = effective_dynamics(below);
    const double dt = SimConfig::default_dt(below);
    const auto decay =
        ringdown_rate(integrate(below, SimConfig(dt, 10.0 / below_dyn.gamma_eff, 6), 1e-12));
    note("0.7 P_th: envelope rate %+.5g rad/s vs Gamma_eff/2 = %+.5g (r^2 %.6f)", decay.rate,
         below_dyn.gamma_eff / 2.0, decay.r_squared);
    check(decay.reliable && decay.rate > 0.0, "decays below threshold");
    check_within("decay rate vs Gamma_eff/2", decay.rate, below_dyn.gamma_eff / 2.0, 0.10);

    const auto above = OperatingPoint::at_intracavity_power(m, cav, phi_s, 1.5 * p_th, 0.0);
    const auto above_dyn = effective_dynamics(above);
    const auto growth_traj = integrate(above, SimConfig(dt, 0.3, 6), 1e-13);
    check(growth_traj.outcome == SimOutcome::unstable_growth,
          "divergence guard trips above threshold");
    const auto growth = ringdown_rate(growth_traj);
    note("1.5 P_th: envelope rate %+.5g rad/s vs Gamma_eff/2 = %+.5g (r^2 %.6f)", growth.rate,
         above_dyn.gamma_eff / 2.0, growth.r_squared);
    check(growth.reliable && growth.rate < 0.0, "grows above threshold");
    check_within("growth rate vs Gamma_eff/2", growth.rate, above_dyn.gamma_eff / 2.0, 0.10);
    verdict();
}

// ---- criterion 7 helpers --------------------------------------------------

/// Segment length (power of two) putting roughly four Welch bins across the
/// line width.
std::size_t segment_for(double fwhm, double dt) {
    const int e = static_cast<int>(std::lround(std::log2(4.0 / (fwhm * dt))));
    return std::size_t{1} << std::clamp(e, 14, 23);
}

/// Per-trajectory Welch spectra averaged over a serially integrated ensemble
/// (one record in memory at a time).
NoiseSpectrum averaged_welch(const OperatingPoint& op, double duration, double burn,
                             std::size_t segment, int n_traj, std::uint64_t seed) {
    const double dt = SimConfig::default_dt(op);
    std::vector<double> freqs;
    std::vector<double> acc;
    double rbw = 0.0;
    for (int k = 0; k < n_traj; ++k) {
        const auto traj =
            integrate(op, SimConfig(dt, duration, seed + static_cast<std::uint64_t>(k), burn, 1));
        const auto spec = welch_psd(traj, segment);
        if (acc.empty()) {
            freqs = spec.freqs;
            acc = spec.psd;
            rbw = spec.resolution_bw;
        } else {
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += spec.psd[i];
        }
    }
    for (auto& v : acc) v /= static_cast<double>(n_traj);
    return NoiseSpectrum(std::move(freqs), std::move(acc), Provenance::simulated, rbw);
}

/// Per-bin ratio of simulated to closed-form PSD, averaged over [lo, hi] Hz.
/// Equal bin weights keep the estimate from being dominated by the few peak
/// bins, which is what makes the 5% tolerance reachable in minutes.
double band_ratio(const NoiseSpectrum& spec, const OperatingPoint& op, double lo, double hi) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (spec.freqs[i] < lo || spec.freqs[i] > hi) continue;
        sum += spec.psd[i] / (2.0 * displacement_psd(op, kTwoPi * spec.freqs[i]));
        ++n;
    }
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

// 7. Spectral pipeline: (a) the time-domain force filter realizes the
//    analytic transfer to 1e-6 on 1000 points; (b) ensemble Welch spectra
//    match the closed form within 5% near resonance across damping ratios
//    {0.2, 1, 5, 30}; (c) Lorentzian fits recover synthetic parameters
//    within 1%; (d) the area and linewidth temperature routes agree to 2%.
void criterion_7(const ExperimentConfig& cfg) {
    begin(7, "spectral pipeline: filter, Welch vs closed form, fit recovery, temperatures");
    const auto& m = cfg.target_mode();
    const auto& cav = cfg.cavity;

    // (a) realized filter vs analytic transfer on a 1000-point log grid.
    {
        const auto op = cfg.point_incident(-0.45, 3.2e-3);
        const auto filter = realize_force_filter(op, SimConfig::default_dt(op));
        const double lo = 1.0;
        const double hi = 5.0 * cav.omega_c;
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double omega = lo * std::pow(hi / lo, static_cast<double>(i) / 999.0);
            const auto want = radiation_force_transfer(op, omega);
            const auto got = filter.continuous_response(omega);
            worst = std::max(worst, std::abs(got - want) / std::abs(want));
        }
        note("(a) filter vs analytic transfer, 1000 log points: worst rel dev %.3g (tol 1e-6)",
             worst);
        check(worst < 1e-6, "(a) filter realization within 1e-6");
    }

    // (b) ensemble Welch vs closed form across damping ratios. The cooled
    // points reuse that Gamma_eff/Gamma_m - 1 is linear in intracavity power,
    // so the probe slope pins each target ratio exactly; the heated point
    // sits at 0.8 of the phi = 0.11 threshold, i.e. a ratio of exactly 0.2.
    {
        const double slope_per_watt =
            effective_dynamics(OperatingPoint::at_intracavity_power(m, cav, -0.45, 1.0, 300.0))
                .gamma_eff /
                m.gamma_m -
            1.0;
        const double p_th = *instability_threshold(m, cav, 0.11);
        struct WelchCase {
            double ratio;
            OperatingPoint op;
            int n_traj;
            std::uint64_t seed;
        };
        const WelchCase cases[] = {
            {0.2, OperatingPoint::at_intracavity_power(m, cav, 0.11, 0.8 * p_th, 300.0), 29,
             7000},
            {1.0, OperatingPoint::at_intracavity_power(m, cav, 0.0, 0.0, 300.0), 23, 7100},
            {5.0, OperatingPoint::at_intracavity_power(m, cav, -0.45, 4.0 / slope_per_watt,
                                                       300.0),
             19, 7200},
            {30.0, OperatingPoint::at_intracavity_power(m, cav, -0.45, 29.0 / slope_per_watt,
                                                        300.0),
             25, 7300},
        };
        for (const auto& wc : cases) {
            const auto dyn = effective_dynamics(wc.op);
            const double fwhm = dyn.gamma_eff / kTwoPi;
            const double dt = SimConfig::default_dt(wc.op);
            const std::size_t segment = segment_for(fwhm, dt);
            const double duration = 3.0 * static_cast<double>(segment) * dt;
            const double burn = 10.0 / dyn.gamma_eff;
            const auto spec = averaged_welch(wc.op, duration, burn, segment, wc.n_traj, wc.seed);
            const double f_eff = dyn.omega_eff / kTwoPi;
            const double ratio = band_ratio(spec, wc.op, f_eff - 6.0 * fwhm, f_eff + 6.0 * fwhm);
            note("(b) Gamma_eff/Gamma_m = %-4g: Welch/closed mean bin ratio %.4f over "
                 "f_eff +- 6 FWHM (%d trajectories, segment %zu, tol 5%%)%s",
                 dyn.gamma_eff / m.gamma_m, ratio, wc.n_traj, segment,
                 std::abs(ratio - 1.0) <= 0.05 ? "" : "  <-- out of tolerance");
            if (!(std::abs(ratio - 1.0) <= 0.05)) g_ok = false;
        }
    }

    // (c) Lorentzian fit recovery on synthetic lines spanning narrow, shipped
    // and broad widths over very different backgrounds.
    {
        struct Line {
            double center, fwhm, area, background;
        };
        const Line lines[] = {
            {814e3, 81.4, 8.33e-28, 6.5e-35},
            {812.5e3, 16.3, 3.0e-28, 1.0e-33},
            {820e3, 2440.0, 8.3e-28, 1.0e-31},
        };
        double worst = 0.0;
        for (const auto& line : lines) {
            const std::size_t n = 4001;
            std::vector<double> freqs(n), psd(n);
            const double half = line.fwhm / 2.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double f = line.center + 25.0 * line.fwhm *
                                                   (2.0 * static_cast<double>(i) /
                                                        static_cast<double>(n - 1) -
                                                    1.0);
                freqs[i] = f;
                psd[i] = line.background + (line.area / constants::pi) * half /
                                               ((f - line.center) * (f - line.center) +
                                                half * half);
            }
            const double df = freqs[1] - freqs[0];
            const auto fit =
                fit_lorentzian(NoiseSpectrum(std::move(freqs), std::move(psd),
                                             Provenance::ingested, df));
            worst = std::max({worst, std::abs(fit.center / line.center - 1.0),
                              std::abs(fit.fwhm / line.fwhm - 1.0),
                              std::abs(fit.area / line.area - 1.0)});
        }
        note("(c) synthetic Lorentzian recovery over 3 lines: worst rel dev %.3g (tol 1%%)",
             worst);
        check(worst < 0.01, "(c) fit recovery within 1%");
    }

    // (d) temperature by fitted area vs by fitted linewidth on a cooled
    // closed-form spectrum.
    {
        const auto op = cfg.point_incident(-0.25, 5.0e-3);
        const double f_m = m.omega_m / kTwoPi;
        const auto spec = closed_form_spectrum(op, f_m - 10e3, f_m + 10e3, 4001);
        const auto fit = fit_lorentzian(spec);
        const double t_area = temperature_from_area(fit, m);
        const double t_linewidth = cfg.bath_temperature * m.gamma_m / (kTwoPi * fit.fwhm);
        note("(d) phi = -0.25 at 5 mW: T(area) = %.4f K, T(linewidth) = %.4f K", t_area,
             t_linewidth);
        check_within("(d) area route vs linewidth route", t_area, t_linewidth, 0.02);
    }
    verdict();
}

// 8. Response sweep over the shipped powers and detunings: heating at
//    positive detuning, cooling at negative, strict linearity in power at
//    fixed detuning, and an exact null at zero detuning.
void criterion_8(const ExperimentConfig& cfg) {
    begin(8, "response sweep: signs, power linearity, zero-detuning null");
    const auto rows = response_sweep(cfg);
    const std::size_t n_power = cfg.incident_powers.size();
    const std::size_t n_phi = cfg.detunings.size();
    note("grid: %zu incident powers x %zu detunings", n_power, n_phi);
    check(n_power == 5, "five incident powers configured");
    check(rows.size() == n_power * n_phi, "one row per grid cell");

    bool signs_ok = true;
    bool null_ok = true;
    bool layout_ok = true;
    for (std::size_t i = 0; i < n_power; ++i) {
        for (std::size_t j = 0; j < n_phi; ++j) {
            const auto& r = rows[i * n_phi + j];
            layout_ok = layout_ok && r.phi == cfg.detunings[j] &&
                        r.power_in_w == cfg.incident_powers[i];
            if (r.phi < 0.0) {
                signs_ok = signs_ok && r.damping_ratio > 1.0 && r.freq_shift_hz < 0.0;
            } else if (r.phi > 0.0) {
                signs_ok = signs_ok && r.damping_ratio < 1.0 && r.freq_shift_hz > 0.0;
            } else {
                null_ok = null_ok && std::abs(r.freq_shift_hz) < 1e-9 &&
                          std::abs(r.damping_ratio - 1.0) < 1e-12;
            }
        }
    }
    check(layout_ok, "rows come back power-outer, detuning-inner");
    note("cooling (ratio > 1, shift < 0) at phi < 0 and heating (ratio < 1, shift > 0) "
         "at phi > 0: %s",
         signs_ok ? "yes" : "no");
    check(signs_ok, "damping and shift signs follow the detuning sign");
    check(null_ok, "response vanishes at phi = 0");

    double worst = 0.0;
    for (std::size_t j = 0; j < n_phi; ++j) {
        if (cfg.detunings[j] == 0.0) continue;
        const auto& first = rows[j];
        const double ratio_slope = (first.damping_ratio - 1.0) / first.power_in_w;
        const double shift_slope = first.freq_shift_hz / first.power_in_w;
        for (std::size_t i = 1; i < n_power; ++i) {
            const auto& r = rows[i * n_phi + j];
            worst = std::max(worst,
                             std::abs((r.damping_ratio - 1.0) / r.power_in_w / ratio_slope - 1.0));
            worst = std::max(worst,
                             std::abs(r.freq_shift_hz / r.power_in_w / shift_slope - 1.0));
        }
    }
    note("power-linearity of shift and damping at fixed detuning: worst rel dev %.3g "
         "(tol 1e-9)",
         worst);
    check(worst < 1e-9, "both responses scale linearly with power");
    verdict();
}

}  // namespace

int main(int argc, char** argv) {
    const char* path = argc > 1 ? argv[1] : OPTOSPRING_DEFAULTS_PATH;
    std::printf("acceptance suite against %s\n\n", path);
    const ExperimentConfig cfg = [&]() -> ExperimentConfig {
        try {
            return parse_config_file(path);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "cannot load defaults: %s\n", e.what());
            std::exit(2);
        }
    }();

    criterion_1(cfg);
    criterion_2(cfg);
    criterion_3(cfg);
    criterion_4(cfg);
    criterion_5(cfg);
    criterion_6(cfg);
    criterion_7(cfg);
    criterion_8(cfg);

    std::printf("%d/8 criteria passed\n", 8 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
