#pragma once

#include <cmath>
#include <complex>

// Internal units: time in ns, angular frequency in rad/ns.
// Config files speak MHz (ordinary frequency) and ns; conversion happens on load.

namespace rps {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

// Bohr magneton over Planck constant, MHz per gauss.
inline constexpr double kMuBOverH_MHzPerGauss = 1.3996;

// Ordinary frequency in MHz -> angular frequency in rad/ns.
inline constexpr double mhz_to_radns(double f_mhz) { return kTwoPi * f_mhz * 1e-3; }

// Angular frequency in rad/ns -> ordinary frequency in MHz.
inline constexpr double radns_to_mhz(double w_radns) { return w_radns / kTwoPi * 1e3; }

using Complex = std::complex<double>;

}  // namespace rps
