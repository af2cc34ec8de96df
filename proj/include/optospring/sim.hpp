#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "optospring/types.hpp"

namespace optospring {

/// Knobs for a stochastic time-domain run. Durations are in seconds; the
/// recorded trajectory starts after burn_in and holds round(duration/dt)
/// samples. For equilibrium statistics pick duration >= 50/Gamma_m and a
/// burn-in of several damping times.
struct SimConfig {
    double dt;
    double duration;
    std::uint64_t seed = 0;
    double burn_in = 0.0;
    int n_trajectories = 1;

    SimConfig(double dt, double duration, std::uint64_t seed = 0, double burn_in = 0.0,
              int n_trajectories = 1);

    /// Default step: 20 ns class, 1/(40 * max(f_m, f_c)).
    static double default_dt(const OperatingPoint& op);
};

enum class SimOutcome {
    completed,
    /// Displacement crossed the divergence guard; samples hold the partial
    /// record up to that point.
    unstable_growth,
};

struct Trajectory {
    std::vector<double> samples;  // displacement (m) at uniform dt
    double dt;
    OperatingPoint op;
    SimConfig config;
    SimOutcome outcome = SimOutcome::completed;

    Trajectory(OperatingPoint op_, SimConfig config_)
        : dt(config_.dt), op(std::move(op_)), config(config_) {}

    double duration() const { return static_cast<double>(samples.size()) * dt; }
};

/// Independent zero-mean Gaussian force samples of variance S_F(T)/dt
/// (stationary white drive with double-sided density S_F), one per recorded
/// sample instant. Bit-reproducible for a given seed on any platform; T = 0
/// yields exact zeros.
std::vector<double> thermal_force_samples(const MechanicalMode& mode, double temperature,
                                          const SimConfig& config);

/// Integrate M x'' = -M Omega_m^2 x - M Gamma_m x' + F_T(t) + F_rad(x
/// history) from (x0, v0). The coupled oscillator + force-filter system is
/// linear, so one step is propagated by the exact matrix exponential of the
/// joint four-dimensional state; the thermal force enters held constant
/// across each step. Integration stops early with SimOutcome::
/// unstable_growth when |x| exceeds 1e6 times the larger of the thermal rms
/// and the initial amplitude (documented guard; keeps unstable runs
/// finite). If that happens before burn_in has elapsed, the partial record
/// holds the most recent pre-burn-in samples (bounded history) so the
/// growth segment is not lost.
Trajectory integrate(const OperatingPoint& op, const SimConfig& config, double x0 = 0.0,
                     double v0 = 0.0);

/// config.n_trajectories independent runs; run k uses seed + k. Order of the
/// returned vector is by k regardless of any scheduling.
std::vector<Trajectory> simulate_ensemble(const OperatingPoint& op, const SimConfig& config);

struct RingdownEstimate {
    double rate = 0.0;       // rad/s, positive = decay; compare with Gamma_eff/2
    double r_squared = 0.0;  // goodness of the log-envelope line
    bool reliable = false;   // r_squared >= 0.99
};

/// Log-envelope slope of a deterministic decay or growth record (peak
/// detection on |x|, least-squares line through log peak heights). Feed it a
/// T = 0 ringdown from a displaced start, or the partial record of an
/// unstable run.
RingdownEstimate ringdown_rate(const Trajectory& trajectory);

}  // namespace optospring
