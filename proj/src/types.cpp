#include "optospring/types.hpp"

#include <cmath>
#include <stdexcept>

#include "optospring/constants.hpp"

namespace optospring {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

MechanicalMode::MechanicalMode(double omega_m_, double mass_, double q_factor_)
    : omega_m(omega_m_), mass(mass_), q_factor(q_factor_), gamma_m(omega_m_ / q_factor_) {
    require(finite_positive(omega_m), "MechanicalMode: omega_m must be > 0");
    require(finite_positive(mass), "MechanicalMode: mass must be > 0");
    require(std::isfinite(q_factor) && q_factor >= 1.0, "MechanicalMode: q_factor must be >= 1");
    require(finite_positive(spring_constant()), "MechanicalMode: spring constant not finite");
}

MechanicalMode MechanicalMode::from_frequency_hz(double f_hz, double mass_, double q_factor_) {
    return MechanicalMode(2.0 * constants::pi * f_hz, mass_, q_factor_);
}

CavitySetup::CavitySetup(double wavelength_, double length_, double finesse_, double omega_c_,
                         double coupling_slope_)
    : wavelength(wavelength_),
      length(length_),
      finesse(finesse_),
      gamma(constants::pi / finesse_),
      omega_c(omega_c_),
      coupling_slope(coupling_slope_) {
    require(finite_positive(wavelength), "CavitySetup: wavelength must be > 0");
    require(finite_positive(length), "CavitySetup: length must be > 0");
    require(finite_positive(finesse), "CavitySetup: finesse must be > 0");
    require(finite_positive(omega_c), "CavitySetup: omega_c must be > 0");
    require(finite_positive(coupling_slope), "CavitySetup: coupling_slope must be > 0");
}

OperatingPoint::OperatingPoint(MechanicalMode mode_, CavitySetup cavity_, double phi_,
                               double p_res_, double temperature_bath_)
    : mode(mode_), cavity(cavity_), phi(phi_), p_res(p_res_), temperature_bath(temperature_bath_) {
    require(std::isfinite(phi), "OperatingPoint: phi must be finite");
    require(std::isfinite(p_res) && p_res >= 0.0, "OperatingPoint: p_res must be >= 0");
    require(std::isfinite(temperature_bath) && temperature_bath >= 0.0,
            "OperatingPoint: temperature_bath must be >= 0");
}

OperatingPoint OperatingPoint::at_intracavity_power(MechanicalMode mode_, CavitySetup cavity_,
                                                    double phi_, double p_at_phi,
                                                    double temperature_bath_) {
    return OperatingPoint(mode_, cavity_, phi_, p_at_phi * (1.0 + phi_ * phi_),
                          temperature_bath_);
}

OperatingPoint OperatingPoint::from_incident_power(MechanicalMode mode_, CavitySetup cavity_,
                                                   double phi_, double p_incident,
                                                   double temperature_bath_) {
    return OperatingPoint(mode_, cavity_, phi_, cavity_.coupling_slope * p_incident,
                          temperature_bath_);
}

}  // namespace optospring
