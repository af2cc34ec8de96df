#include "optospring/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "optospring/constants.hpp"

namespace optospring {

namespace {

using namespace std::complex_literals;

// phi * phi_NL at the operating detuning; the one dimensionless number the
// coupled response depends on besides Delta.
double coupling_strength(const OperatingPoint& op) {
    return op.phi * nonlinear_phase(op.cavity, op.mode, intracavity_power(op));
}

double simpson_slice(double fa, double fm, double fb, double h) {
    return h / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_slice(fa, flm, fm, m - a);
    const double right = simpson_slice(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

template <typename F>
double integrate_segment(const F& f, double a, double b, double eps) {
    if (!(b > a)) return 0.0;
    const double fa = f(a);
    const double fm = f(0.5 * (a + b));
    const double fb = f(b);
    return adaptive_simpson(f, a, b, fa, fm, fb, simpson_slice(fa, fm, fb, b - a), eps, 30);
}

}  // namespace

ComplexResponse mech_susceptibility(const MechanicalMode& mode, double omega) {
    const double om2 = mode.omega_m * mode.omega_m;
    return 1.0 / (mode.mass * (om2 - omega * omega - 1.0i * mode.gamma_m * omega));
}

ComplexResponse cavity_delta(const CavitySetup& cavity, double phi, double omega) {
    const ComplexResponse u = 1.0 - 1.0i * (omega / cavity.omega_c);
    return u * u + phi * phi;
}

double nonlinear_phase(const CavitySetup& cavity, const MechanicalMode& mode,
                       double p_intracavity) {
    if (!(p_intracavity >= 0.0) || !std::isfinite(p_intracavity)) {
        throw std::invalid_argument("nonlinear_phase: intracavity power must be >= 0");
    }
    const double k = mode.mass * mode.omega_m * mode.omega_m;
    return 8.0 * constants::pi * p_intracavity /
           (cavity.wavelength * cavity.gamma * constants::speed_of_light * k);
}

double intracavity_power(const OperatingPoint& op) {
    return op.p_res / (1.0 + op.phi * op.phi);
}

ComplexResponse radiation_force_transfer(const OperatingPoint& op, double omega) {
    const double k = op.mode.mass * op.mode.omega_m * op.mode.omega_m;
    return -2.0 * coupling_strength(op) * k / cavity_delta(op.cavity, op.phi, omega);
}

ComplexResponse effective_susceptibility(const OperatingPoint& op, double omega) {
    const double k = op.mode.mass * op.mode.omega_m * op.mode.omega_m;
    const ComplexResponse inv = 1.0 / mech_susceptibility(op.mode, omega) +
                                2.0 * coupling_strength(op) * k /
                                    cavity_delta(op.cavity, op.phi, omega);
    return 1.0 / inv;
}

EffectiveDynamics effective_dynamics(const OperatingPoint& op) {
    const ComplexResponse r =
        coupling_strength(op) / cavity_delta(op.cavity, op.phi, op.mode.omega_m);
    EffectiveDynamics dyn;
    dyn.omega_eff = op.mode.omega_m * (1.0 + r.real());
    dyn.gamma_eff = op.mode.gamma_m * (1.0 - 2.0 * op.mode.q_factor * r.imag());
    dyn.stable = dyn.gamma_eff > 0.0;
    if (dyn.stable) {
        dyn.t_eff = op.temperature_bath * op.mode.gamma_m / dyn.gamma_eff;
    }
    return dyn;
}

double langevin_psd(const MechanicalMode& mode, double temperature) {
    if (!(temperature >= 0.0)) {
        throw std::invalid_argument("langevin_psd: temperature must be >= 0");
    }
    return 2.0 * constants::boltzmann * temperature * mode.mass * mode.gamma_m;
}

double displacement_psd(const OperatingPoint& op, double omega) {
    if (!effective_dynamics(op).stable) {
        throw std::domain_error("displacement_psd: operating point is unstable");
    }
    const double s_f = langevin_psd(op.mode, op.temperature_bath);
    return std::norm(effective_susceptibility(op, omega)) * s_f;
}

double integrated_displacement_variance(const OperatingPoint& op) {
    const EffectiveDynamics dyn = effective_dynamics(op);
    if (!dyn.stable) {
        throw std::domain_error("integrated_displacement_variance: operating point is unstable");
    }
    const double s_f = langevin_psd(op.mode, op.temperature_bath);
    if (s_f == 0.0) return 0.0;

    const auto integrand = [&](double omega) {
        return std::norm(effective_susceptibility(op, omega)) * s_f;
    };

    // The integrand is even in Omega and sharply peaked at Omega_eff with
    // width Gamma_eff; seed the quadrature with breakpoints around the peak
    // so the adaptive refinement cannot step over it.
    const double cut = 50.0 * op.mode.omega_m;
    const double w = std::max(dyn.gamma_eff, 1e-12 * dyn.omega_eff);
    std::vector<double> pts = {0.0,
                               dyn.omega_eff - 30.0 * w,
                               dyn.omega_eff - 8.0 * w,
                               dyn.omega_eff,
                               dyn.omega_eff + 8.0 * w,
                               dyn.omega_eff + 30.0 * w,
                               1.5 * dyn.omega_eff,
                               10.0 * op.mode.omega_m,
                               cut};
    for (double& p : pts) p = std::clamp(p, 0.0, cut);
    std::sort(pts.begin(), pts.end());

    const double scale = constants::boltzmann * std::max(op.temperature_bath, 1e-300) /
                         (op.mode.mass * dyn.omega_eff * dyn.omega_eff);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        sum += integrate_segment(integrand, pts[i], pts[i + 1], 1e-10 * scale);
    }
    // Above the cut the response is free-mass-like, |chi| ~ 1/(M Omega^2);
    // fold in the analytic tail instead of chasing it numerically.
    const double tail = s_f / (3.0 * op.mode.mass * op.mode.mass * cut * cut * cut);
    return (sum + tail) / constants::pi;
}

std::optional<double> instability_threshold(const MechanicalMode& mode,
                                            const CavitySetup& cavity, double phi) {
    if (phi == 0.0) {
        throw std::invalid_argument("instability_threshold: phi must be nonzero");
    }
    // Gamma_eff = Gamma_m (1 - 2 Q phi phi_NL Im(1/Delta(Omega_m))) and
    // Im(1/Delta) > 0 for any Omega_m > 0, so only phi > 0 can drive the
    // damping through zero; phi_NL (and hence power) is what scales it.
    const double im_inv_delta = (1.0 / cavity_delta(cavity, phi, mode.omega_m)).imag();
    const double denom = 2.0 * mode.q_factor * phi * im_inv_delta;
    if (denom <= 0.0) return std::nullopt;
    const double phi_nl_th = 1.0 / denom;
    const double k = mode.mass * mode.omega_m * mode.omega_m;
    return phi_nl_th * cavity.wavelength * cavity.gamma * constants::speed_of_light * k /
           (8.0 * constants::pi);
}

}  // namespace optospring
