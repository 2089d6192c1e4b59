#include <doctest.h>

#include <cmath>

#include "rps/atom.hpp"

using namespace rps;

TEST_CASE("level table: canonical order and zero field") {
  AtomModel atom;
  atom.b_field_gauss = 0.0;
  const auto levels = build_level_table(atom);
  REQUIRE(levels.size() == 8);
  CHECK(levels[level::S_m12].manifold == Manifold::S12);
  CHECK(levels[level::S_p12].manifold == Manifold::S12);
  CHECK(levels[level::P_m12].manifold == Manifold::P12);
  CHECK(levels[level::P_p12].manifold == Manifold::P12);
  for (int i = level::D_m32; i <= level::D_p32; ++i)
    CHECK(levels[static_cast<size_t>(i)].manifold == Manifold::D32);
  CHECK(levels[level::D_m32].m == doctest::Approx(-1.5));
  CHECK(levels[level::D_p32].m == doctest::Approx(1.5));
  for (const auto& l : levels) {
    CHECK(l.index == &l - levels.data());
    CHECK(l.zeeman_shift == 0.0);
  }
}

TEST_CASE("level table: Zeeman shifts at 2.2 G") {
  AtomModel atom;
  atom.b_field_gauss = 2.2;
  const auto levels = build_level_table(atom);
  // D(-3/2) <-> D(+1/2): splitting 2 g_D mu_B B = 4.93 MHz with g_D = 4/5.
  const double split =
      radns_to_mhz(levels[level::D_p12].zeeman_shift - levels[level::D_m32].zeeman_shift);
  CHECK(split == doctest::Approx(2.0 * 0.8 * 1.3996 * 2.2).epsilon(1e-12));
  CHECK(split == doctest::Approx(4.93).epsilon(0.005));
  CHECK(atom.photon_splitting_mhz() == doctest::Approx(split).epsilon(1e-12));
  // S(+1/2): g_S m mu_B B = +3.08 MHz.
  CHECK(radns_to_mhz(levels[level::S_p12].zeeman_shift) ==
        doctest::Approx(2.0 * 0.5 * 1.3996 * 2.2).epsilon(1e-12));
  // Antisymmetric in m within each manifold.
  CHECK(levels[level::S_m12].zeeman_shift == doctest::Approx(-levels[level::S_p12].zeeman_shift));
  CHECK(levels[level::D_m32].zeeman_shift == doctest::Approx(-levels[level::D_p32].zeeman_shift));
  CHECK(levels[level::D_m12].zeeman_shift == doctest::Approx(-levels[level::D_p12].zeeman_shift));
  // Negating B negates every shift.
  AtomModel neg = atom;
  neg.b_field_gauss = -2.2;
  const auto nlev = build_level_table(neg);
  for (size_t i = 0; i < 8; ++i)
    CHECK(nlev[i].zeeman_shift == doctest::Approx(-levels[i].zeeman_shift));
}

TEST_CASE("beat override replaces the computed splitting") {
  AtomModel atom;
  atom.b_field_gauss = 2.2;
  atom.beat_override_mhz = 7.5;
  CHECK(atom.photon_splitting_mhz() == doctest::Approx(7.5));
}

TEST_CASE("CG table: sum rules and tabulated values") {
  const ClebschGordanTable cg = cg_table();
  // Per P sublevel, squared amplitudes sum to 1 over each destination manifold.
  for (const int up : {level::P_m12, level::P_p12}) {
    double s_sum = 0.0, d_sum = 0.0;
    for (const auto& c : cg.channels) {
      if (c.upper != up) continue;
      if (c.lower <= level::S_p12)
        s_sum += c.amplitude * c.amplitude;
      else
        d_sum += c.amplitude * c.amplitude;
    }
    CHECK(s_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d_sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // P(-1/2) channels against the standard tables.
  auto amp2 = [&](int u, int l) {
    const double a = cg.amplitude(u, l);
    return a * a;
  };
  CHECK(amp2(level::P_m12, level::S_m12) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(amp2(level::P_m12, level::S_p12) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(amp2(level::P_m12, level::D_m32) == doctest::Approx(1.0 / 2.0).epsilon(1e-12));
  CHECK(amp2(level::P_m12, level::D_m12) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(amp2(level::P_m12, level::D_p12) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  // Polarization labels follow Delta_m.
  CHECK(cg.find(level::P_m12, level::S_m12)->pol == Polarization::Pi);
  CHECK(cg.find(level::P_m12, level::S_p12)->pol == Polarization::SigmaPlus);
  CHECK(cg.find(level::P_m12, level::D_m32)->pol == Polarization::SigmaMinus);
}

TEST_CASE("hamiltonian: trivial zero and hermiticity") {
  AtomModel atom;
  atom.b_field_gauss = 0.0;
  SUBCASE("no drive, no field -> zero matrix") {
    const Matrix8c h = build_hamiltonian(atom, {}, {});
    CHECK(h.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  }
  SUBCASE("hermitian for generic configs") {
    atom.b_field_gauss = 3.1;
    LaserField blue;
    blue.transition = Transition::Blue397;
    blue.rabi_peak = mhz_to_radns(37.0);
    blue.detuning = mhz_to_radns(-12.0);
    blue.polarization = {Complex(0.3, 0.4), Complex(0.5, -0.1),
                         Complex(std::sqrt(1.0 - 0.25 - 0.26), 0.0)};
    LaserField ir;
    ir.transition = Transition::Ir866;
    ir.rabi_peak = mhz_to_radns(52.0);
    ir.detuning = mhz_to_radns(-55.0);
    ir.polarization = perpendicular_polarization();
    const Matrix8c h = build_hamiltonian(atom, {blue, ir}, {0.7, 0.9});
    CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hamiltonian: perpendicular blue drives only sigma channels") {
  AtomModel atom;
  LaserField blue;
  blue.transition = Transition::Blue397;
  blue.rabi_peak = mhz_to_radns(40.0);
  blue.detuning = 0.0;
  blue.polarization = perpendicular_polarization();
  const Matrix8c h = build_hamiltonian(atom, {blue}, {1.0});
  int nonzero = 0;
  for (int i = 0; i < kNumLevels; ++i)
    for (int j = 0; j < kNumLevels; ++j)
      if (i != j && std::abs(h(i, j)) > 1e-15) ++nonzero;
  CHECK(nonzero == 4);  // S(-1/2)<->P(+1/2) and S(+1/2)<->P(-1/2), both directions
  CHECK(std::abs(h(level::S_m12, level::P_m12)) == doctest::Approx(0.0));  // no pi
  CHECK(std::abs(h(level::S_p12, level::P_p12)) == doctest::Approx(0.0));
  CHECK(std::abs(h(level::S_m12, level::P_p12)) > 0.0);
  CHECK(std::abs(h(level::S_p12, level::P_m12)) > 0.0);
}

TEST_CASE("hamiltonian: two lasers on one transition rejected") {
  AtomModel atom;
  LaserField a, b;
  a.transition = b.transition = Transition::Blue397;
  a.rabi_peak = b.rabi_peak = mhz_to_radns(10.0);
  CHECK_THROWS(build_hamiltonian(atom, {a, b}, {1.0, 1.0}));
}

TEST_CASE("jump operators: completeness and rates") {
  AtomModel atom;
  const auto jumps = build_jump_operators(atom);
  CHECK(jumps.size() == 10);  // 4 P->S + 6 P->D channels
  // Sum L+L = gamma_P x (projector onto P).
  Matrix8c sum = Matrix8c::Zero();
  for (const auto& j : jumps) sum(j.upper, j.upper) += j.rate;
  for (int i = 0; i < kNumLevels; ++i) {
    const bool is_p = (i == level::P_m12 || i == level::P_p12);
    CHECK(std::abs(sum(i, i) - (is_p ? atom.gamma_P : 0.0)) < 1e-12);
  }
  // Detection channel: P(-1/2) -> S(+1/2) only, rate branching x gamma x 2/3.
  int n_detected = 0;
  for (const auto& j : jumps) {
    if (!j.detected) continue;
    ++n_detected;
    CHECK(j.upper == kDetectedUpper);
    CHECK(j.lower == kDetectedLower);
    CHECK(j.rate == doctest::Approx(0.936 * atom.gamma_P * 2.0 / 3.0).epsilon(1e-12));
  }
  CHECK(n_detected == 1);
}

TEST_CASE("laser polarization normalization enforced") {
  LaserField f;
  f.transition = Transition::Ir866;
  f.rabi_peak = mhz_to_radns(10.0);
  f.polarization = {Complex(1.0), Complex(1.0), Complex(0.0)};
  CHECK_THROWS(f.validate());
}
