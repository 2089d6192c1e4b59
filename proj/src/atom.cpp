#include "rps/atom.hpp"

#include <algorithm>
#include <cmath>

namespace rps {

namespace {

double factorial(int n) {
  double r = 1.0;
  for (int k = 2; k <= n; ++k) r *= k;
  return r;
}

int iround(double x) { return static_cast<int>(std::lround(x)); }

struct LevelSpec {
  Manifold manifold;
  double j;
  double m;
};

constexpr std::array<LevelSpec, kNumLevels> kLevels = {{
    {Manifold::S12, 0.5, -0.5},
    {Manifold::S12, 0.5, +0.5},
    {Manifold::P12, 0.5, -0.5},
    {Manifold::P12, 0.5, +0.5},
    {Manifold::D32, 1.5, -1.5},
    {Manifold::D32, 1.5, -0.5},
    {Manifold::D32, 1.5, +0.5},
    {Manifold::D32, 1.5, +1.5},
}};

Polarization pol_from_q(int q) {
  switch (q) {
    case -1: return Polarization::SigmaPlus;
    case 0: return Polarization::Pi;
    case +1: return Polarization::SigmaMinus;
  }
  throw std::logic_error("invalid polarization q");
}

}  // namespace

double clebsch_gordan(double j1, double m1, double j2, double m2, double J, double M) {
  if (std::abs(m1 + m2 - M) > 1e-9) return 0.0;
  if (J > j1 + j2 + 1e-9 || J < std::abs(j1 - j2) - 1e-9) return 0.0;
  if (std::abs(m1) > j1 + 1e-9 || std::abs(m2) > j2 + 1e-9 || std::abs(M) > J + 1e-9) return 0.0;

  // Racah's closed form.
  const double pref =
      (2.0 * J + 1.0) * factorial(iround(J + j1 - j2)) * factorial(iround(J - j1 + j2)) *
      factorial(iround(j1 + j2 - J)) / factorial(iround(j1 + j2 + J + 1));
  const double fac =
      factorial(iround(J + M)) * factorial(iround(J - M)) * factorial(iround(j1 - m1)) *
      factorial(iround(j1 + m1)) * factorial(iround(j2 - m2)) * factorial(iround(j2 + m2));

  double sum = 0.0;
  const int kmin = std::max({0, iround(j2 - J - m1), iround(j1 + m2 - J)});
  const int kmax = std::min({iround(j1 + j2 - J), iround(j1 - m1), iround(j2 + m2)});
  for (int k = kmin; k <= kmax; ++k) {
    const double denom = factorial(k) * factorial(iround(j1 + j2 - J) - k) *
                         factorial(iround(j1 - m1) - k) * factorial(iround(j2 + m2) - k) *
                         factorial(iround(J - j2 + m1) + k) * factorial(iround(J - j1 - m2) + k);
    sum += ((k % 2 == 0) ? 1.0 : -1.0) / denom;
  }
  return std::sqrt(pref * fac) * sum;
}

void AtomModel::validate() const {
  if (!(gamma_P > 0.0)) throw std::invalid_argument("AtomModel: gamma_P must be > 0");
  if (!(branching_S > 0.0 && branching_S < 1.0))
    throw std::invalid_argument("AtomModel: branching_S must be in (0,1)");
}

void LaserField::validate() const {
  double n2 = 0.0;
  for (const auto& a : polarization) n2 += std::norm(a);
  if (std::abs(n2 - 1.0) > 1e-12)
    throw std::invalid_argument("LaserField: polarization not normalized");
}

std::array<ZeemanLevel, kNumLevels> build_level_table(const AtomModel& atom) {
  atom.validate();
  std::array<ZeemanLevel, kNumLevels> out;
  for (int i = 0; i < kNumLevels; ++i) {
    const auto& s = kLevels[i];
    double gj = 0.0;
    switch (s.manifold) {
      case Manifold::S12: gj = atom.g.g_S; break;
      case Manifold::P12: gj = atom.g.g_P; break;
      case Manifold::D32: gj = atom.g.g_D; break;
    }
    const double shift_mhz = gj * s.m * kMuBOverH_MHzPerGauss * atom.b_field_gauss;
    out[i] = ZeemanLevel{s.manifold, s.m, i, mhz_to_radns(shift_mhz)};
  }
  return out;
}

double ClebschGordanTable::amplitude(int upper, int lower) const {
  const CgChannel* c = find(upper, lower);
  return c ? c->amplitude : 0.0;
}

const CgChannel* ClebschGordanTable::find(int upper, int lower) const {
  for (const auto& c : channels)
    if (c.upper == upper && c.lower == lower) return &c;
  return nullptr;
}

ClebschGordanTable cg_table() {
  ClebschGordanTable t;
  for (int u = level::P_m12; u <= level::P_p12; ++u) {
    for (int l = 0; l < kNumLevels; ++l) {
      if (l == level::P_m12 || l == level::P_p12) continue;
      const auto& up = kLevels[u];
      const auto& lo = kLevels[l];
      const int q = iround(up.m - lo.m);
      if (q < -1 || q > 1) continue;
      // |upper> expanded in |lower> x |photon, q>.
      const double amp = clebsch_gordan(lo.j, lo.m, 1.0, q, up.j, up.m);
      if (amp == 0.0) continue;
      t.channels.push_back(CgChannel{u, l, pol_from_q(q), amp});
    }
  }
  return t;
}

Matrix8c build_hamiltonian(const AtomModel& atom, const std::vector<LaserField>& lasers,
                           const std::vector<double>& scales) {
  atom.validate();
  if (lasers.size() != scales.size())
    throw std::invalid_argument("build_hamiltonian: lasers/scales size mismatch");
  const LaserField* blue = nullptr;
  const LaserField* ir = nullptr;
  double blue_scale = 0.0, ir_scale = 0.0;
  for (size_t i = 0; i < lasers.size(); ++i) {
    if (scales[i] < 0.0 || scales[i] > 1.0)
      throw std::invalid_argument("build_hamiltonian: scale outside [0,1]");
    lasers[i].validate();
    if (lasers[i].transition == Transition::Blue397) {
      if (blue) throw std::invalid_argument("build_hamiltonian: two lasers on the blue transition");
      blue = &lasers[i];
      blue_scale = scales[i];
    } else {
      if (ir) throw std::invalid_argument("build_hamiltonian: two lasers on the IR transition");
      ir = &lasers[i];
      ir_scale = scales[i];
    }
  }

  const auto levels = build_level_table(atom);
  const auto cg = cg_table();

  Matrix8c h = Matrix8c::Zero();
  // Rotating frame: P carries only its Zeeman shift; S is offset by the blue
  // detuning, D by the IR detuning.
  const double det_blue = blue ? blue->detuning : 0.0;
  const double det_ir = ir ? ir->detuning : 0.0;
  for (int i = 0; i < kNumLevels; ++i) {
    double e = levels[i].zeeman_shift;
    if (levels[i].manifold == Manifold::S12) e += det_blue;
    if (levels[i].manifold == Manifold::D32) e += det_ir;
    h(i, i) = e;
  }

  auto add_laser = [&](const LaserField& f, double scale) {
    for (const auto& c : cg.channels) {
      const bool on_s = (kLevels[c.lower].manifold == Manifold::S12);
      if (on_s != (f.transition == Transition::Blue397)) continue;
      const int q = iround(kLevels[c.upper].m - kLevels[c.lower].m);
      const Complex a = f.polarization[q + 1];
      if (a == Complex(0.0)) continue;
      const Complex coupling = 0.5 * scale * f.rabi_peak * a * c.amplitude;
      h(c.upper, c.lower) += coupling;
      h(c.lower, c.upper) += std::conj(coupling);
    }
  };
  if (blue) add_laser(*blue, blue_scale);
  if (ir) add_laser(*ir, ir_scale);
  return h;
}

std::vector<JumpOperator> build_jump_operators(const AtomModel& atom) {
  atom.validate();
  const auto cg = cg_table();
  std::vector<JumpOperator> ops;
  ops.reserve(cg.channels.size());
  for (const auto& c : cg.channels) {
    const bool to_s = (kLevels[c.lower].manifold == Manifold::S12);
    const double manifold_rate = to_s ? atom.gamma_PS() : atom.gamma_PD();
    const double rate = manifold_rate * c.amplitude * c.amplitude;
    const bool detected = (c.upper == kDetectedUpper && c.lower == kDetectedLower);
    ops.push_back(JumpOperator{c.upper, c.lower, rate, c.pol, detected});
  }
  return ops;
}

}  // namespace rps
