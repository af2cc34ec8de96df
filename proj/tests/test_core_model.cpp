#include <cmath>
#include <complex>
#include <stdexcept>

#include "doctest.h"
#include "optospring/constants.hpp"
#include "optospring/core_model.hpp"
#include "test_support.hpp"

using namespace optospring;
using testing::cavity_default;
using testing::mode_814;
using testing::op_incident;

namespace {
constexpr double kTwoPi = 2.0 * constants::pi;
}

TEST_CASE("bare susceptibility limits") {
    const auto m = mode_814();

    // Static response is the inverse spring constant.
    CHECK(mech_susceptibility(m, 0.0).real() ==
          doctest::Approx(2.012045754846284e-07).epsilon(1e-12));
    CHECK(mech_susceptibility(m, 0.0).imag() == doctest::Approx(0.0));

    // On resonance the response is Q times the static one and purely
    // imaginary (phase -90 deg ... +i here because of the sign convention).
    const auto on_res = mech_susceptibility(m, m.omega_m);
    CHECK(std::abs(on_res) == doctest::Approx(0.002012045754846284).epsilon(1e-12));
    CHECK(on_res.real() == doctest::Approx(0.0));
    CHECK(on_res.imag() > 0.0);

    // Well above resonance the mass term dominates: chi ~ -1/(3k) at 2*Om.
    CHECK(mech_susceptibility(m, 2.0 * m.omega_m).real() ==
          doctest::Approx(-6.706819153012861e-08).epsilon(1e-10));
}

TEST_CASE("cavity response never vanishes and matches the reference point") {
    const auto c = cavity_default();
    const auto d = cavity_delta(c, -0.45, mode_814().omega_m);
    CHECK(d.real() == doctest::Approx(0.60150589569161).epsilon(1e-12));
    CHECK(d.imag() == doctest::Approx(-1.5504761904761906).epsilon(1e-12));

    for (double phi : {-2.9, -0.6, 0.0, 0.11, 2.9}) {
        for (double f = 0.0; f <= 2e7; f += 9.7e4) {
            CHECK(std::abs(cavity_delta(c, phi, kTwoPi * f)) > 0.1);
        }
    }
}

TEST_CASE("nonlinear phase scales linearly with intracavity power") {
    const auto c = cavity_default();
    const auto m = mode_814();
    CHECK(nonlinear_phase(c, m, 9.504) ==
          doctest::Approx(0.0014387398256024632).epsilon(1e-12));
    CHECK(nonlinear_phase(c, m, 2.0 * 9.504) ==
          doctest::Approx(2.0 * 0.0014387398256024632).epsilon(1e-12));
    CHECK(nonlinear_phase(c, m, 0.0) == 0.0);
    CHECK_THROWS_AS(nonlinear_phase(c, m, -1.0), std::invalid_argument);
}

TEST_CASE("intracavity power follows the Lorentzian detuning rolloff") {
    const auto op = op_incident(-0.45, 3.2e-3);
    CHECK(intracavity_power(op) == doctest::Approx(7.903534303534304).epsilon(1e-12));
    const auto tuned = op_incident(0.0, 3.2e-3);
    CHECK(intracavity_power(tuned) == doctest::Approx(9.504).epsilon(1e-12));
}

TEST_CASE("radiation force transfer: static sign and reference values") {
    const auto op = op_incident(-0.45, 3.2e-3);

    // Red side (phi < 0): positive static stiffness contribution.
    const auto h0 = radiation_force_transfer(op, 0.0);
    CHECK(h0.real() == doctest::Approx(4450.581437347461).epsilon(1e-9));
    CHECK(h0.imag() == doctest::Approx(0.0));

    const auto hm = radiation_force_transfer(op, op.mode.omega_m);
    CHECK(hm.real() == doctest::Approx(1163.9201570943726).epsilon(1e-9));
    CHECK(hm.imag() == doctest::Approx(3000.187536175639).epsilon(1e-9));

    // Blue side mirrors the static sign.
    const auto blue = op_incident(0.45, 3.2e-3);
    CHECK(radiation_force_transfer(blue, 0.0).real() ==
          doctest::Approx(-4450.581437347461).epsilon(1e-9));

    // No detuning, no spring.
    const auto off = op_incident(0.0, 3.2e-3);
    CHECK(std::abs(radiation_force_transfer(off, 0.0)) == 0.0);
    CHECK(std::abs(radiation_force_transfer(off, op.mode.omega_m)) == 0.0);
}

TEST_CASE("effective susceptibility reduces to the bare one when uncoupled") {
    const auto m = mode_814();
    for (double f : {1e3, 500e3, 814e3, 1.3e6, 5e6}) {
        const double om = kTwoPi * f;
        const auto bare = mech_susceptibility(m, om);

        const auto no_detuning = op_incident(0.0, 3.2e-3);
        CHECK(std::abs(effective_susceptibility(no_detuning, om) - bare) <=
              1e-15 * std::abs(bare));

        const auto no_power = op_incident(-0.45, 0.0);
        CHECK(std::abs(effective_susceptibility(no_power, om) - bare) <=
              1e-15 * std::abs(bare));
    }
}

TEST_CASE("effective susceptibility is the loop closure of the force transfer") {
    const auto op = op_incident(-0.45, 3.2e-3);
    for (double f : {100e3, 780e3, 814e3, 850e3, 2.5e6}) {
        const double om = kTwoPi * f;
        const auto lhs = 1.0 / effective_susceptibility(op, om);
        const auto rhs =
            1.0 / mech_susceptibility(op.mode, om) - radiation_force_transfer(op, om);
        CHECK(std::abs(lhs - rhs) <= 1e-9 * std::abs(lhs));
    }
}

TEST_CASE("effective dynamics at the cooling reference point") {
    const auto dyn = effective_dynamics(op_incident(-0.45, 3.2e-3));
    const auto m = mode_814();
    CHECK(dyn.stable);
    CHECK((dyn.omega_eff - m.omega_m) / kTwoPi ==
          doctest::Approx(-95.31372687019096).epsilon(1e-9));
    CHECK(dyn.gamma_eff / m.gamma_m == doctest::Approx(7.036514595904927).epsilon(1e-12));
    REQUIRE(dyn.t_eff.has_value());
    CHECK(*dyn.t_eff == doctest::Approx(42.634744220468534).epsilon(1e-12));
}

TEST_CASE("damping ratios across the published detuning series") {
    struct Row {
        double phi, p_in_mw, ratio;
    };
    // 5 mW cooling branch, then the 2.5 mW heating branch (stable part).
    const Row rows[] = {
        {-0.1, 5.0, 3.6843}, {-0.25, 5.0, 7.2677}, {-0.4, 5.0, 9.8490},
        {-0.6, 5.0, 11.3201}, {0.03, 2.5, 0.5925}, {0.06, 2.5, 0.1879},
    };
    for (const auto& r : rows) {
        const auto dyn = effective_dynamics(op_incident(r.phi, r.p_in_mw * 1e-3));
        CHECK(dyn.stable);
        CHECK(dyn.gamma_eff / mode_814().gamma_m == doctest::Approx(r.ratio).epsilon(5e-5));
    }
    for (double phi : {0.09, 0.11, 0.13}) {
        const auto dyn = effective_dynamics(op_incident(phi, 2.5e-3));
        CHECK_FALSE(dyn.stable);
        CHECK_FALSE(dyn.t_eff.has_value());
    }
}

TEST_CASE("temperature-damping duality holds over the stable plane") {
    // T_eff tracks Gamma_m/Gamma_eff exactly in this model; spot-check a grid.
    for (double phi : {-0.9, -0.45, -0.05, 0.02}) {
        for (double p_in : {0.3e-3, 1.6e-3, 3.2e-3}) {
            const auto dyn = effective_dynamics(op_incident(phi, p_in));
            if (!dyn.stable) continue;
            REQUIRE(dyn.t_eff.has_value());
            const double dual = 300.0 * mode_814().gamma_m / dyn.gamma_eff;
            CHECK(*dyn.t_eff == doctest::Approx(dual).epsilon(1e-2));
        }
    }
}

TEST_CASE("frequency shift changes sign for a mode above the cavity cutoff") {
    const auto c = cavity_default();
    const auto lo = OperatingPoint::from_incident_power(mode_814(), c, 0.1, 3.2e-3, 300.0);
    const auto hi =
        OperatingPoint::from_incident_power(testing::mode_2824(), c, 0.1, 3.2e-3, 300.0);

    const double shift_lo = effective_dynamics(lo).omega_eff - lo.mode.omega_m;
    const double shift_hi = effective_dynamics(hi).omega_eff - hi.mode.omega_m;
    CHECK(shift_lo / kTwoPi == doctest::Approx(18.445).epsilon(5e-4));
    CHECK(shift_hi / kTwoPi == doctest::Approx(-3.074).epsilon(5e-4));
    CHECK(shift_lo > 0.0);
    CHECK(shift_hi < 0.0);
}

TEST_CASE("thermal force density") {
    CHECK(langevin_psd(mode_814(), 300.0) ==
          doctest::Approx(8.0499356234273455e-25).epsilon(1e-12));
    CHECK(langevin_psd(mode_814(), 0.0) == 0.0);
    CHECK_THROWS_AS(langevin_psd(mode_814(), -1.0), std::invalid_argument);
}

TEST_CASE("displacement density and its integral") {
    SUBCASE("uncoupled variance reproduces equipartition") {
        const auto op = op_incident(0.0, 0.0);
        const double var = integrated_displacement_variance(op);
        CHECK(var == doctest::Approx(8.333786878148301e-28).epsilon(1e-6));
        CHECK(std::sqrt(var) == doctest::Approx(2.8868299011455975e-14).epsilon(1e-6));
    }
    SUBCASE("coupled variance equals kB T_eff / (M Omega_eff^2) within 1%") {
        for (double phi : {-0.6, -0.25, 0.04}) {
            const auto op = op_incident(phi, 3.2e-3);
            const auto dyn = effective_dynamics(op);
            REQUIRE(dyn.stable);
            const double var = integrated_displacement_variance(op);
            const double equip = constants::boltzmann * *dyn.t_eff /
                                 (op.mode.mass * dyn.omega_eff * dyn.omega_eff);
            CHECK(var == doctest::Approx(equip).epsilon(1e-2));
        }
    }
    SUBCASE("peak density drops as (Gamma_m/Gamma_eff)^2 under cooling") {
        // At the peak |chi_eff| ~ 1/(M Omega_eff Gamma_eff); same bath drive.
        const auto bare = op_incident(0.0, 0.0);
        const auto cooled = op_incident(-0.45, 3.2e-3);
        const auto dyn = effective_dynamics(cooled);
        const double ratio = displacement_psd(cooled, dyn.omega_eff) /
                             displacement_psd(bare, bare.mode.omega_m);
        const double expected = std::pow(bare.mode.gamma_m / dyn.gamma_eff, 2) *
                                std::pow(bare.mode.omega_m / dyn.omega_eff, 2);
        CHECK(ratio == doctest::Approx(expected).epsilon(1e-3));
    }
    SUBCASE("unstable points are rejected") {
        const auto op = op_incident(0.11, 2.5e-3);
        CHECK_THROWS_AS(displacement_psd(op, op.mode.omega_m), std::domain_error);
        CHECK_THROWS_AS(integrated_displacement_variance(op), std::domain_error);
    }
}

TEST_CASE("instability threshold") {
    const auto c = cavity_default();
    const auto m = mode_814();

    SUBCASE("reference value at phi = 0.11") {
        const auto pth = instability_threshold(m, c, 0.11);
        REQUIRE(pth.has_value());
        CHECK(*pth == doctest::Approx(4.982801030608936).epsilon(1e-12));
    }
    SUBCASE("consistent with effective dynamics to high precision") {
        for (double phi : {0.03, 0.11, 0.5, 1.5}) {
            const auto pth = instability_threshold(m, c, phi);
            REQUIRE(pth.has_value());
            const auto just_below =
                OperatingPoint::at_intracavity_power(m, c, phi, *pth * (1.0 - 1e-9), 300.0);
            const auto just_above =
                OperatingPoint::at_intracavity_power(m, c, phi, *pth * (1.0 + 1e-9), 300.0);
            CHECK(effective_dynamics(just_below).stable);
            CHECK_FALSE(effective_dynamics(just_above).stable);
        }
    }
    SUBCASE("red detuning only cools") {
        CHECK_FALSE(instability_threshold(m, c, -0.11).has_value());
        CHECK_FALSE(instability_threshold(m, c, -1.5).has_value());
    }
    SUBCASE("zero detuning is rejected") {
        CHECK_THROWS_AS(instability_threshold(m, c, 0.0), std::invalid_argument);
    }
}
