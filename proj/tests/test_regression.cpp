#include <doctest.h>

#include <cmath>

#include "rps/regression.hpp"

using namespace rps;

namespace {

LindbladSystem emit_system(double b_gauss = 2.2) {
  AtomModel atom;
  atom.b_field_gauss = b_gauss;
  LaserField blue;
  blue.transition = Transition::Blue397;
  blue.rabi_peak = mhz_to_radns(60.0);
  blue.detuning = mhz_to_radns(-10.0);
  blue.polarization = perpendicular_polarization();
  LaserField ir;
  ir.transition = Transition::Ir866;
  ir.rabi_peak = mhz_to_radns(48.0);
  ir.detuning = mhz_to_radns(-55.0);
  ir.polarization = perpendicular_polarization();  // sigma-only: two detected pathways
  PulseSequence seq;
  seq.phases[0] = {300.0, 1.0, 1.0};
  seq.phases[1] = {700.0, 1.0, 0.0};
  seq.phases[2] = {800.0, 0.0, 1.0};
  seq.repetition_period = 1800.0;
  seq.switching_edge = 10.0;
  return LindbladSystem(atom, {blue, ir}, seq);
}

}  // namespace

TEST_CASE("regression diagonal equals the detected intensity") {
  const LindbladSystem sys = emit_system();
  const PeriodResult pr = simulate_sequence(sys, 5.0);
  const double t2 = sys.sequence().phase_start(2);
  std::vector<double> t_grid = {t2 + 50.0, t2 + 150.0, t2 + 300.0};
  std::vector<double> tau_grid = {0.0, 20.0, 40.0, 80.0, 160.0};
  const TwoTimeCorrelation g = two_time_correlation(sys, pr.rho_start, t_grid, tau_grid);

  REQUIRE(g.values.rows() == 3);
  REQUIRE(g.values.cols() == 5);
  for (size_t i = 0; i < t_grid.size(); ++i) {
    // tau = 0 column is the diagonal: real, equals n(t).
    CHECK(std::abs(g.values(static_cast<Eigen::Index>(i), 0).imag()) < 1e-10);
    CHECK(g.values(static_cast<Eigen::Index>(i), 0).real() ==
          doctest::Approx(g.intensity[i]).epsilon(1e-8));
    CHECK(g.intensity[i] >= -1e-10);
  }

  // The diagonal must match the master-equation emission rate channel.
  const EvolveResult ev = evolve_master(sys, pr.rho_start, 0.0, t_grid[1], t_grid[1]);
  const double n_master = ev.trace.emission_rate.back() / sys.gamma_detected();
  CHECK(g.intensity[1] == doctest::Approx(n_master).epsilon(1e-6));
}

TEST_CASE("Cauchy-Schwarz bound on the two-time correlation") {
  const LindbladSystem sys = emit_system();
  const PeriodResult pr = simulate_sequence(sys, 5.0);
  const double t2 = sys.sequence().phase_start(2);
  // Matching grid steps: t + tau always lands on a t_grid node, so the bound
  // is checked against exact intensities, not interpolated ones.
  std::vector<double> t_grid, tau_grid;
  for (double t = t2; t <= t2 + 400.0; t += 25.0) t_grid.push_back(t);
  for (double tau = 0.0; tau <= 300.0; tau += 25.0) tau_grid.push_back(tau);
  const TwoTimeCorrelation g = two_time_correlation(sys, pr.rho_start, t_grid, tau_grid);

  for (size_t i = 0; i < t_grid.size(); ++i)
    for (size_t k = 0; k < tau_grid.size(); ++k) {
      if (t_grid[i] + tau_grid[k] > t_grid.back() + 1e-9) continue;
      const double lhs =
          std::norm(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      const double rhs = g.intensity[i] * g.intensity_at(t_grid[i] + tau_grid[k]);
      CHECK(lhs <= rhs * (1.0 + 1e-6) + 1e-15);
    }
}

TEST_CASE("beat shows up at the D-sublevel splitting") {
  // Fourier transform of the tau dependence of Int G dt peaks at the
  // configured Zeeman splitting of the two emitting D sublevels. Start from
  // an equal mixture of D(-3/2) and D(+1/2) with the polarization that gives
  // both pathways the same coupling (sqrt(1/2 * 1/4) = sqrt(1/6 * 3/4)), so
  // the two lines are equally strong and equally shifted.
  AtomModel atom;
  atom.b_field_gauss = 3.0;
  LaserField ir;
  ir.transition = Transition::Ir866;
  ir.rabi_peak = mhz_to_radns(48.0);
  ir.detuning = mhz_to_radns(-55.0);
  ir.polarization = {Complex(std::sqrt(3.0) / 2.0), Complex(0.0), Complex(0.5)};
  PulseSequence seq;
  seq.phases[0] = {100.0, 0.0, 0.0};
  seq.phases[1] = {100.0, 0.0, 0.0};
  seq.phases[2] = {1400.0, 0.0, 1.0};
  seq.repetition_period = 1600.0;
  seq.switching_edge = 10.0;
  const LindbladSystem sys(atom, {ir}, seq);
  Matrix8c rho0 = Matrix8c::Zero();
  rho0(level::D_m32, level::D_m32) = 0.5;
  rho0(level::D_p12, level::D_p12) = 0.5;

  const double t2 = sys.sequence().phase_start(2);
  std::vector<double> t_grid, tau_grid;
  for (double t = t2 + 50.0; t <= t2 + 600.0; t += 25.0) t_grid.push_back(t);
  const double dtau = 5.0, tau_max = 700.0;
  for (double tau = 0.0; tau <= tau_max; tau += dtau) tau_grid.push_back(tau);
  const TwoTimeCorrelation g = two_time_correlation(sys, rho0, t_grid, tau_grid);

  std::vector<Complex> s(tau_grid.size(), 0.0);
  for (size_t k = 0; k < tau_grid.size(); ++k)
    for (Eigen::Index i = 0; i < g.values.rows(); ++i)
      s[k] += g.values(i, static_cast<Eigen::Index>(k));

  // Fine spectrum scan: strongest line, then strongest line at least 2 MHz
  // away; their separation is the configured splitting. The lines sit near
  // the IR detuning (the S-D coherence rotates at the laser frame offset),
  // so scan a wide window.
  const double f_expect = sys.atom().photon_splitting_mhz();  // 6.72 MHz at 3 G
  const size_t n = s.size();
  auto amp = [&](double f_mhz) {
    Complex acc = 0.0;
    for (size_t j = 0; j < n; ++j) {
      const double ph = -mhz_to_radns(f_mhz) * tau_grid[j];
      acc += s[j] * Complex(std::cos(ph), std::sin(ph));
    }
    return std::abs(acc);
  };
  double best_f = 0.0, best_a = -1.0;
  for (int k = -1600; k <= 1600; ++k) {
    const double f = 0.05 * k;
    const double a = amp(f);
    if (a > best_a) {
      best_a = a;
      best_f = f;
    }
  }
  double best2_f = 0.0, best2_a = -1.0;
  for (int k = -1600; k <= 1600; ++k) {
    const double f = 0.05 * k;
    if (std::abs(f - best_f) < 2.0) continue;
    const double a = amp(f);
    if (a > best2_a) {
      best2_a = a;
      best2_f = f;
    }
  }
  CHECK(best2_a > 0.25 * best_a);
  CHECK(std::abs(std::abs(best_f - best2_f) - f_expect) < 1.0);
}

TEST_CASE("intensity_at interpolates and vanishes outside the grid") {
  TwoTimeCorrelation g;
  g.t_grid = {10.0, 20.0, 30.0};
  g.intensity = {1.0, 3.0, 2.0};
  CHECK(g.intensity_at(15.0) == doctest::Approx(2.0));
  CHECK(g.intensity_at(20.0) == doctest::Approx(3.0));
  CHECK(g.intensity_at(5.0) == doctest::Approx(0.0));
  CHECK(g.intensity_at(35.0) == doctest::Approx(0.0));
}
