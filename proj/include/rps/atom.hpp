#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "rps/units.hpp"

// 8-level Zeeman-resolved model of a single 40Ca+ ion:
//   S1/2 (m = -1/2, +1/2), P1/2 (m = -1/2, +1/2), D3/2 (m = -3/2 .. +3/2).
// Canonical index order: S(-1/2), S(+1/2), P(-1/2), P(+1/2),
//                        D(-3/2), D(-1/2), D(+1/2), D(+3/2).

namespace rps {

inline constexpr int kNumLevels = 8;

using Matrix8c = Eigen::Matrix<Complex, kNumLevels, kNumLevels>;
using Vector8c = Eigen::Matrix<Complex, kNumLevels, 1>;

enum class Manifold { S12, P12, D32 };

// Photon polarization labels, fixed emission convention:
// Delta_m = m_upper - m_lower:  -1 -> sigma_plus, 0 -> pi, +1 -> sigma_minus.
enum class Polarization { SigmaMinus, Pi, SigmaPlus };

namespace level {
inline constexpr int S_m12 = 0;
inline constexpr int S_p12 = 1;
inline constexpr int P_m12 = 2;
inline constexpr int P_p12 = 3;
inline constexpr int D_m32 = 4;
inline constexpr int D_m12 = 5;
inline constexpr int D_p12 = 6;
inline constexpr int D_p32 = 7;
}  // namespace level

struct ZeemanLevel {
  Manifold manifold;
  double m;             // magnetic quantum number (half-integer)
  int index;            // canonical index 0..7
  double zeeman_shift;  // g_J * m * mu_B * B / hbar, rad/ns
};

// One dipole decay channel upper -> lower with its angular amplitude.
struct CgChannel {
  int upper;
  int lower;
  Polarization pol;
  double amplitude;  // signed Clebsch-Gordan coefficient
};

struct ClebschGordanTable {
  std::vector<CgChannel> channels;

  // Returns the signed amplitude for (upper, lower), 0 if not dipole-allowed.
  double amplitude(int upper, int lower) const;
  const CgChannel* find(int upper, int lower) const;
};

struct GFactors {
  double g_S = 2.0;
  double g_P = 2.0 / 3.0;
  double g_D = 4.0 / 5.0;
};

struct AtomModel {
  GFactors g;
  double gamma_P = mhz_to_radns(24.0);  // total P1/2 decay rate, rad/ns
  double branching_S = 0.936;           // fraction of P decay going to S1/2
  double b_field_gauss = 0.0;
  std::optional<double> beat_override_mhz;  // analysis default for the photon beat

  double gamma_PS() const { return branching_S * gamma_P; }
  double gamma_PD() const { return (1.0 - branching_S) * gamma_P; }

  // D(-3/2) <-> D(+1/2) splitting of the two detected photon channels, MHz;
  // beat_override wins when set (see scenario docs).
  double photon_splitting_mhz() const {
    if (beat_override_mhz) return *beat_override_mhz;
    return 2.0 * g.g_D * kMuBOverH_MHzPerGauss * b_field_gauss;
  }

  void validate() const;
};

enum class Transition { Blue397, Ir866 };  // S1/2<->P1/2 and D3/2<->P1/2

struct LaserField {
  Transition transition;
  double rabi_peak = 0.0;  // angular Rabi frequency on the strongest CG channel, rad/ns
  double detuning = 0.0;   // rad/ns from the Zeeman-free resonance
  // Spherical amplitudes (a_-, a_0, a_+), indexed by q = m_upper - m_lower + 1.
  std::array<Complex, 3> polarization = {0.0, 1.0, 0.0};

  void validate() const;
};

// Linear polarization perpendicular to the quantization axis.
inline std::array<Complex, 3> perpendicular_polarization() {
  const double s = 1.0 / std::sqrt(2.0);
  return {Complex(s, 0.0), Complex(0.0, 0.0), Complex(s, 0.0)};
}

struct JumpOperator {
  int upper;
  int lower;
  double rate;  // branch decay rate gamma_branch, rad/ns (1/ns)
  Polarization pol;
  bool detected;  // true only for the designated detection channel
};

// The detection channel: right-circular photons along the quantization axis
// correspond to the decay P(-1/2) -> S(+1/2).
inline constexpr int kDetectedUpper = level::P_m12;
inline constexpr int kDetectedLower = level::S_p12;

std::array<ZeemanLevel, kNumLevels> build_level_table(const AtomModel& atom);

ClebschGordanTable cg_table();

// Rotating-frame RWA Hamiltonian. One laser per transition at most; `scales`
// multiplies each laser's Rabi amplitude (0..1). The frame is fixed by the
// laser detunings even at scale 0: S carries the blue detuning, D the IR one.
Matrix8c build_hamiltonian(const AtomModel& atom, const std::vector<LaserField>& lasers,
                           const std::vector<double>& scales);

std::vector<JumpOperator> build_jump_operators(const AtomModel& atom);

// <j1 m1; j2 m2 | J M>, arguments as doubled integers not required: doubles OK
// for half-integer spins.
double clebsch_gordan(double j1, double m1, double j2, double m2, double J, double M);

}  // namespace rps
