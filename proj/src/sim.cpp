#include "optospring/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "optospring/constants.hpp"
#include "optospring/core_model.hpp"
#include "optospring/filter.hpp"
#include "optospring/parallel.hpp"

namespace optospring {

namespace {

// Box-Muller on top of mt19937_64 with a fixed draw pattern (two 64-bit
// words per pair of normals). std::normal_distribution is implementation-
// defined, which would break the bit-reproducibility contract.
class GaussianStream {
  public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        constexpr double k2_53 = 1.0 / 9007199254740992.0;  // 2^-53
        const double u1 = static_cast<double>((eng_() >> 11) + 1) * k2_53;  // (0, 1]
        const double u2 = static_cast<double>(eng_() >> 11) * k2_53;       // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * constants::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

std::size_t step_count(double span, double dt) {
    return static_cast<std::size_t>(std::llround(span / dt));
}

// Coupled linear dynamics of (x, v, w, w') with the two filter states w
// rescaled to displacement-like units (w -> Omega_s^2 w, w' -> Omega_s w')
// so the system matrix is well balanced for the matrix exponential.
struct Propagator {
    Eigen::Matrix4d phi;
    Eigen::Vector4d g;  // held-force input over one step, per newton
    double omega_s;

    Propagator(const OperatingPoint& op, double dt) {
        const ForceFilterRealization f = realize_force_filter(op, dt);
        const double os = std::max(op.mode.omega_m, op.cavity.omega_c);
        omega_s = os;
        const double m = op.mode.mass;
        const double om2 = op.mode.omega_m * op.mode.omega_m;

        Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
        a(0, 1) = os;
        a(1, 0) = -om2 / os;
        a(1, 1) = -op.mode.gamma_m;
        a(1, 2) = f.c0 / (m * os * os * os);
        a(2, 3) = os;
        a(3, 0) = os;
        a(3, 2) = -f.a0 / os;
        a(3, 3) = -f.a1;

        Eigen::Matrix<double, 5, 5> van = Eigen::Matrix<double, 5, 5>::Zero();
        van.topLeftCorner<4, 4>() = a;
        van(1, 4) = 1.0 / (m * os);
        const Eigen::Matrix<double, 5, 5> e = (van * dt).exp();
        phi = e.topLeftCorner<4, 4>();
        g = e.block<4, 1>(0, 4);
    }
};

}  // namespace

unsigned worker_count() {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (const char* env = std::getenv("OPTOSPRING_WORKERS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<unsigned>(v);
        return 1;
    }
    return hw;
}

void parallel_for_index(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::scoped_lock lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

SimConfig::SimConfig(double dt_, double duration_, std::uint64_t seed_, double burn_in_,
                     int n_trajectories_)
    : dt(dt_), duration(duration_), seed(seed_), burn_in(burn_in_),
      n_trajectories(n_trajectories_) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("SimConfig: dt must be positive");
    }
    if (!(duration > 0.0) || !std::isfinite(duration)) {
        throw std::invalid_argument("SimConfig: duration must be positive");
    }
    if (!(burn_in >= 0.0) || !std::isfinite(burn_in)) {
        throw std::invalid_argument("SimConfig: burn_in must be >= 0");
    }
    if (n_trajectories < 1) {
        throw std::invalid_argument("SimConfig: n_trajectories must be >= 1");
    }
}

double SimConfig::default_dt(const OperatingPoint& op) {
    const double f_fast =
        std::max(op.mode.omega_m, op.cavity.omega_c) / (2.0 * constants::pi);
    return 1.0 / (40.0 * f_fast);
}

std::vector<double> thermal_force_samples(const MechanicalMode& mode, double temperature,
                                          const SimConfig& config) {
    const std::size_t n = step_count(config.duration, config.dt);
    std::vector<double> out(n, 0.0);
    if (temperature == 0.0) return out;
    const double sigma = std::sqrt(langevin_psd(mode, temperature) / config.dt);
    GaussianStream gauss(config.seed);
    for (double& v : out) v = sigma * gauss.next();
    return out;
}

Trajectory integrate(const OperatingPoint& op, const SimConfig& config, double x0,
                     double v0) {
    const Propagator prop(op, config.dt);
    const std::size_t n_burn = step_count(config.burn_in, config.dt);
    const std::size_t n_keep = step_count(config.duration, config.dt);

    const double thermal_rms = std::sqrt(
        constants::boltzmann * op.temperature_bath / op.mode.spring_constant());
    double guard_base =
        std::max({thermal_rms, std::abs(x0), std::abs(v0) / op.mode.omega_m});
    if (guard_base == 0.0) guard_base = 1e-15;
    const double guard = 1e6 * guard_base;

    const double sigma =
        op.temperature_bath > 0.0
            ? std::sqrt(langevin_psd(op.mode, op.temperature_bath) / config.dt)
            : 0.0;
    GaussianStream gauss(config.seed);

    Trajectory traj(op, config);
    traj.samples.reserve(n_keep);
    // Bounded history of the burn-in segment so a divergence before burn_in
    // still returns the recent growth instead of an empty record.
    constexpr std::size_t kPreCap = 1u << 20;
    std::deque<double> pre;

    Eigen::Vector4d state(x0, v0 / prop.omega_s, 0.0, 0.0);
    for (std::size_t k = 0; k < n_burn + n_keep; ++k) {
        const double force = sigma != 0.0 ? sigma * gauss.next() : 0.0;
        state = (prop.phi * state + prop.g * force).eval();
        const double x = state(0);
        if (!std::isfinite(x) || std::abs(x) > guard) {
            traj.outcome = SimOutcome::unstable_growth;
            if (traj.samples.empty() && !pre.empty()) {
                traj.samples.assign(pre.begin(), pre.end());
            }
            return traj;
        }
        if (k >= n_burn) {
            traj.samples.push_back(x);
        } else {
            if (pre.size() == kPreCap) pre.pop_front();
            pre.push_back(x);
        }
    }
    return traj;
}

std::vector<Trajectory> simulate_ensemble(const OperatingPoint& op, const SimConfig& config) {
    std::vector<Trajectory> out;
    out.reserve(static_cast<std::size_t>(config.n_trajectories));
    for (int k = 0; k < config.n_trajectories; ++k) {
        SimConfig one = config;
        one.seed = config.seed + static_cast<std::uint64_t>(k);
        one.n_trajectories = 1;
        out.emplace_back(Trajectory(op, one));
    }
    parallel_for_index(out.size(), [&](std::size_t k) {
        out[k] = integrate(op, out[k].config);
    });
    return out;
}

RingdownEstimate ringdown_rate(const Trajectory& trajectory) {
    const auto& x = trajectory.samples;
    RingdownEstimate est;
    if (x.size() < 8) return est;

    double peak_abs = 0.0;
    for (double v : x) peak_abs = std::max(peak_abs, std::abs(v));
    if (peak_abs == 0.0) return est;
    const double floor = 1e-12 * peak_abs;

    // Local maxima of |x| trace the envelope; log heights against time give
    // the decay (or growth) rate as -slope.
    std::vector<double> t, logh;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        const double a = std::abs(x[i]);
        if (a > floor && a >= std::abs(x[i - 1]) && a >= std::abs(x[i + 1])) {
            t.push_back(static_cast<double>(i) * trajectory.dt);
            logh.push_back(std::log(a));
        }
    }
    if (t.size() < 3) return est;

    const double n = static_cast<double>(t.size());
    double st = 0.0, sl = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sl += logh[i];
    }
    const double mt = st / n, ml = sl / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double dtm = t[i] - mt, dlm = logh[i] - ml;
        sxx += dtm * dtm;
        sxy += dtm * dlm;
        syy += dlm * dlm;
    }
    if (sxx == 0.0) return est;
    const double slope = sxy / sxx;
    const double ss_res = syy - slope * sxy;
    est.rate = -slope;
    est.r_squared = syy > 1e-30 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    est.reliable = est.r_squared >= 0.99;
    return est;
}

}  // namespace optospring
