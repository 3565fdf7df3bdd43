#pragma once

#include <numbers>

namespace remag {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018
inline constexpr double elementary_charge = 1.602176634e-19; // C
inline constexpr double mu0_over_4pi = 1.00000000055e-7;     // T m / A

// NV electron gyromagnetic ratio, gamma_e / 2pi = 28.024951 GHz/T = 2.8025 MHz/G.
inline constexpr double nv_gamma_hz_per_tesla = 28.024951e9;
inline constexpr double nv_gamma_rad_per_s_tesla = two_pi * nv_gamma_hz_per_tesla;
inline constexpr double nv_gamma_rad_per_s_gauss = nv_gamma_rad_per_s_tesla * 1e-4;

// Internally every frequency is angular (rad/s) and every time is in seconds.
// These helpers are meant for the I/O boundary only.
constexpr double hz_to_rad(double f_hz) { return two_pi * f_hz; }
constexpr double rad_to_hz(double w) { return w / two_pi; }
constexpr double mhz_to_rad(double f_mhz) { return two_pi * f_mhz * 1e6; }
constexpr double rad_to_mhz(double w) { return w / two_pi * 1e-6; }
constexpr double us_to_s(double t_us) { return t_us * 1e-6; }
constexpr double s_to_us(double t_s) { return t_s * 1e6; }

} // namespace remag
