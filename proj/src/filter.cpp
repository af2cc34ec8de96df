#include "optospring/filter.hpp"

#include <complex>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "optospring/constants.hpp"
#include "optospring/core_model.hpp"

namespace optospring {

namespace {
using namespace std::complex_literals;
}

double ForceFilterRealization::step(double x_prev, double x_next) {
    state = (Ad * state + B0 * x_prev + B1 * x_next).eval();
    return c0 * state(0);
}

ComplexResponse ForceFilterRealization::continuous_response(double omega) const {
    const ComplexResponse s = -1.0i * omega;
    return c0 / (s * s + a1 * s + a0);
}

ComplexResponse ForceFilterRealization::discrete_response(double omega) const {
    const ComplexResponse z = std::exp(-1.0i * omega * dt);
    const Eigen::Matrix2cd m =
        z * Eigen::Matrix2cd::Identity() - Ad.cast<std::complex<double>>();
    const Eigen::Vector2cd zb =
        m.inverse() * (B0.cast<std::complex<double>>() + z * B1.cast<std::complex<double>>());
    return c0 * zb(0);
}

ForceFilterRealization realize_force_filter(const OperatingPoint& op, double dt) {
    const double fastest = std::max(op.mode.omega_m, op.cavity.omega_c);
    if (!(dt > 0.0) || dt * fastest / (2.0 * constants::pi) > 0.05) {
        throw std::invalid_argument(
            "realize_force_filter: dt must give >= 20 samples per fastest period");
    }

    ForceFilterRealization f;
    const double oc = op.cavity.omega_c;
    const double phi = op.phi;
    const double phi_nl = nonlinear_phase(op.cavity, op.mode, intracavity_power(op));
    f.a0 = oc * oc * (1.0 + phi * phi);
    f.a1 = 2.0 * oc;
    f.c0 = -2.0 * phi * phi_nl * op.mode.spring_constant() * oc * oc;
    f.dt = dt;

    // Van Loan block exponential: the top rows of exp([[A, B, 0], [0, 0, 1],
    // [0, 0, 0]] dt) yield Ad, G1 = int exp(A tau) B dtau and G2 = int
    // exp(A tau) B (dt - tau) dtau, from which the first-order-hold input
    // matrices follow. The companion form (1 vs a0 ~ Omega_c^2) is far too
    // ill-balanced for an accurate exponential, so the internal state basis
    // is (z1, z1'/ws) with ws = sqrt(a0); the output gain c0 z1 and the
    // transfer function are similarity-invariant.
    const double ws = std::sqrt(f.a0);
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    m(0, 1) = ws;
    m(1, 0) = -ws;
    m(1, 1) = -f.a1;
    m(1, 2) = 1.0 / ws;
    m(2, 3) = 1.0;
    const Eigen::Matrix4d e = (m * dt).exp();
    f.Ad = e.topLeftCorner<2, 2>();
    const Eigen::Vector2d g1 = e.block<2, 1>(0, 2);
    const Eigen::Vector2d g2 = e.block<2, 1>(0, 3);
    f.B1 = g2 / dt;
    f.B0 = g1 - f.B1;
    return f;
}

}  // namespace optospring
