#pragma once

#include <numbers>

namespace optospring::constants {

// Single constants table shared by every module. SI units throughout;
// angular frequencies (rad/s) internally, Hz only at external interfaces.
inline constexpr double pi = std::numbers::pi;
inline constexpr double speed_of_light = 2.998e8;   // m/s
inline constexpr double boltzmann = 1.380649e-23;   // J/K

}  // namespace optospring::constants
