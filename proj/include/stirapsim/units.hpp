#pragma once

// Internal unit system: times in microseconds, angular frequencies and
// rates in rad/us, lengths in micrometers, velocities in um/us.  One m/s
// equals one um/us, so lab velocities carry over unchanged.

#include <numbers>

namespace stirapsim::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// um/us, numerically identical to m/s.
inline constexpr double speed_of_light = 2.99792458e8;

// Frequencies printed as ordinary (cycles/s) values.
inline constexpr double mhz_to_rad_us(double f_mhz) { return two_pi * f_mhz; }
inline constexpr double ghz_to_rad_us(double f_ghz) { return two_pi * 1e3 * f_ghz; }
inline constexpr double hz_to_rad_us(double f_hz) { return two_pi * 1e-6 * f_hz; }
inline constexpr double rad_us_to_mhz(double w) { return w / two_pi; }

// How printed decay/linewidth numbers ("gamma = 9.6 MHz") map to internal
// angular rates.  Ordinary: multiply by 2*pi.  Angular: the printed MHz
// value is already an angular rate in units of 1e6 rad/s.
enum class RateConvention { ordinary, angular };

inline constexpr double rate_to_rad_us(double value_mhz, RateConvention conv) {
    return conv == RateConvention::ordinary ? two_pi * value_mhz : value_mhz;
}

}  // namespace stirapsim::units
