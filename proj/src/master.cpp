#include "rps/master.hpp"

#include <algorithm>
#include <cmath>

namespace rps {

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

}  // namespace

LindbladSystem::LindbladSystem(AtomModel atom, std::vector<LaserField> lasers, PulseSequence seq)
    : atom_(std::move(atom)), lasers_(std::move(lasers)), seq_(seq) {
  atom_.validate();
  seq_.validate();
  env_ = build_envelopes(seq_);
  jumps_ = build_jump_operators(atom_);

  const size_t n = lasers_.size();
  const Matrix8c h00 = build_hamiltonian(atom_, lasers_, std::vector<double>(n, 0.0));
  h_frame_ = h00;
  h_blue_.setZero();
  h_ir_.setZero();
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> scales(n, 0.0);
    scales[i] = 1.0;
    const Matrix8c coupling = build_hamiltonian(atom_, lasers_, scales) - h00;
    if (lasers_[i].transition == Transition::Blue397)
      h_blue_ = coupling;
    else
      h_ir_ = coupling;
  }

  decay_diag_.setZero();
  for (const auto& j : jumps_) {
    decay_diag_(j.upper) += j.rate;
    if (j.detected) gamma_detected_ = j.rate;
  }
}

Matrix8c LindbladSystem::hamiltonian_at_scales(double blue, double ir) const {
  return h_frame_ + blue * h_blue_ + ir * h_ir_;
}

Matrix8c LindbladSystem::hamiltonian(double t) const {
  double tw = std::fmod(t, seq_.repetition_period);
  if (tw < 0.0) tw += seq_.repetition_period;
  return hamiltonian_at_scales(env_.blue.value(tw), env_.ir.value(tw));
}

void LindbladSystem::apply_generator(const Matrix8c& h, const Matrix8c& rho, Matrix8c& out) const {
  const Complex mi(0.0, -1.0);
  out.noalias() = mi * (h * rho - rho * h);
  for (const auto& j : jumps_) out(j.lower, j.lower) += j.rate * rho(j.upper, j.upper);
  for (int i = 0; i < kNumLevels; ++i) {
    const double d = 0.5 * decay_diag_(i);
    if (d == 0.0) continue;
    out.row(i) -= d * rho.row(i);
    out.col(i) -= d * rho.col(i);
  }
}

Eigen::MatrixXcd LindbladSystem::liouvillian_matrix(const Matrix8c& h) const {
  const int n = kNumLevels;
  Eigen::MatrixXcd liou = Eigen::MatrixXcd::Zero(n * n, n * n);
  auto idx = [n](int r, int c) { return c * n + r; };  // column-major vec
  const Complex mi(0.0, -1.0);
  // -i (H rho - rho H)
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      for (int k = 0; k < n; ++k) {
        liou(idx(r, c), idx(k, c)) += mi * h(r, k);
        liou(idx(r, c), idx(r, k)) -= mi * h(k, c);
      }
  for (const auto& j : jumps_) {
    liou(idx(j.lower, j.lower), idx(j.upper, j.upper)) += j.rate;
    for (int k = 0; k < n; ++k) {
      liou(idx(j.upper, k), idx(j.upper, k)) -= 0.5 * j.rate;
      liou(idx(k, j.upper), idx(k, j.upper)) -= 0.5 * j.rate;
    }
  }
  return liou;
}

Matrix8c LindbladSystem::effective_hamiltonian(const Matrix8c& h) const {
  Matrix8c heff = h;
  for (int i = 0; i < kNumLevels; ++i) heff(i, i) -= Complex(0.0, 0.5 * decay_diag_(i));
  return heff;
}

namespace {

double error_norm(const Matrix8c& err, const Matrix8c& y0, const Matrix8c& y1,
                  const IntegratorOptions& opt) {
  double acc = 0.0;
  for (int i = 0; i < kNumLevels; ++i)
    for (int j = 0; j < kNumLevels; ++j) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(y0(i, j)), std::abs(y1(i, j)));
      const double r = std::abs(err(i, j)) / sc;
      acc += r * r;
    }
  return std::sqrt(acc / (kNumLevels * kNumLevels));
}

// Next envelope breakpoint strictly after absolute time t.
double next_breakpoint(const LindbladSystem& sys, double t) {
  const double period = sys.period();
  const double n = std::floor(t / period);
  const double tw = t - n * period;
  for (double b : sys.envelopes().breakpoints)
    if (b > tw + 1e-9) return n * period + b;
  return (n + 1.0) * period + sys.envelopes().breakpoints.front();
}

// Adaptive DOPRI5 over [t0, t1], stepping through envelope breakpoints.
void integrate_span(const LindbladSystem& sys, Matrix8c& y, double t0, double t1,
                    const IntegratorOptions& opt) {
  if (t1 <= t0) return;
  double t = t0;
  double h = std::min({1.0, t1 - t0, opt.h_max});
  Matrix8c k1, k2, k3, k4, k5, k6, k7, tmp, y5, err;
  bool have_k1 = false;
  while (t < t1 - 1e-12) {
    const double t_stop = std::min(t1, next_breakpoint(sys, t));
    h = std::min(h, t_stop - t);
    if (!have_k1) sys.apply_generator(sys.hamiltonian(t), y, k1);
    tmp = y + h * a21 * k1;
    sys.apply_generator(sys.hamiltonian(t + c2 * h), tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    sys.apply_generator(sys.hamiltonian(t + c3 * h), tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    sys.apply_generator(sys.hamiltonian(t + c4 * h), tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    sys.apply_generator(sys.hamiltonian(t + c5 * h), tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    sys.apply_generator(sys.hamiltonian(t + h), tmp, k6);
    y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    sys.apply_generator(sys.hamiltonian(t + h), y5, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y5, opt);
    if (en <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;  // FSAL
      have_k1 = std::abs(t - t_stop) > 1e-12;  // H may jump slope at a breakpoint
      const double grow = (en > 0.0) ? 0.9 * std::pow(en, -0.2) : 5.0;
      h = std::min(opt.h_max, h * std::clamp(grow, 0.2, 5.0));
    } else {
      have_k1 = true;  // k1 unchanged, step shrinks
      h *= std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
      if (h < opt.h_min)
        throw DivergenceError("master-equation integrator: step size underflow at t=" +
                              std::to_string(t));
    }
  }
}

}  // namespace

void manifold_populations(const Matrix8c& rho, double& s, double& p, double& d) {
  s = std::real(rho(0, 0) + rho(1, 1));
  p = std::real(rho(2, 2) + rho(3, 3));
  d = std::real(rho(4, 4) + rho(5, 5) + rho(6, 6) + rho(7, 7));
}

Matrix8c pure_state_density(int lvl) {
  Matrix8c rho = Matrix8c::Zero();
  rho(lvl, lvl) = 1.0;
  return rho;
}

double trace_distance(const Matrix8c& a, const Matrix8c& b) {
  Eigen::SelfAdjointEigenSolver<Matrix8c> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

EvolveResult evolve_master(const LindbladSystem& sys, const Matrix8c& rho0, double t0, double t1,
                           double dt, const IntegratorOptions& opt) {
  if (!(t0 < t1) || !(dt > 0.0)) throw std::invalid_argument("evolve_master: bad time grid");
  EvolveResult res;
  res.rho_final = rho0;
  auto sample = [&](double t) {
    double s, p, d;
    manifold_populations(res.rho_final, s, p, d);
    res.trace.time.push_back(t);
    res.trace.pop_S.push_back(s);
    res.trace.pop_P.push_back(p);
    res.trace.pop_D.push_back(d);
    res.trace.emission_rate.push_back(sys.gamma_detected() *
                                      std::real(res.rho_final(kDetectedUpper, kDetectedUpper)));
  };
  sample(t0);
  const auto nsteps = static_cast<size_t>(std::ceil((t1 - t0) / dt - 1e-9));
  double t = t0;
  for (size_t i = 1; i <= nsteps; ++i) {
    const double tn = std::min(t0 + static_cast<double>(i) * dt, t1);
    integrate_span(sys, res.rho_final, t, tn, opt);
    t = tn;
    sample(t);
  }
  return res;
}

void propagate_operator(const LindbladSystem& sys, Matrix8c& op, double t0,
                        const std::vector<double>& sample_times,
                        const std::function<void(size_t, const Matrix8c&)>& on_sample,
                        const IntegratorOptions& opt) {
  double t = t0;
  for (size_t i = 0; i < sample_times.size(); ++i) {
    const double tn = sample_times[i];
    if (tn < t - 1e-12) throw std::invalid_argument("propagate_operator: non-monotone samples");
    integrate_span(sys, op, t, tn, opt);
    t = std::max(t, tn);
    on_sample(i, op);
  }
}

Matrix8c steady_state(const LindbladSystem& sys, double blue_scale, double ir_scale) {
  const Matrix8c h = sys.hamiltonian_at_scales(blue_scale, ir_scale);
  const Eigen::MatrixXcd liou = sys.liouvillian_matrix(h);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(liou, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-8 * std::max(1.0, sv(0));
  int null_dim = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) < tol) ++null_dim;
  if (null_dim != 1)
    throw ConvergenceError("steady_state: degenerate null space (dimension " +
                           std::to_string(null_dim) + ")");
  const Eigen::VectorXcd v = svd.matrixV().col(sv.size() - 1);
  Matrix8c rho;
  for (int c = 0; c < kNumLevels; ++c)
    for (int r = 0; r < kNumLevels; ++r) rho(r, c) = v(c * kNumLevels + r);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace();
  return rho;
}

PeriodResult simulate_sequence(const LindbladSystem& sys, double dt, const IntegratorOptions& opt) {
  const double period = sys.period();
  Matrix8c rho = Matrix8c::Identity() / static_cast<double>(kNumLevels);
  PeriodResult res;
  bool converged = false;
  for (int it = 1; it <= 100; ++it) {
    Matrix8c next = rho;
    integrate_span(sys, next, 0.0, period, opt);
    const double d = trace_distance(next, rho);
    rho = next;
    res.iterations = it;
    if (d < 1e-8) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw ConvergenceError("simulate_sequence: cyclic fixed point not reached in 100 iterations");

  res.rho_start = rho;
  EvolveResult ev = evolve_master(sys, rho, 0.0, period, dt, opt);
  res.trace = std::move(ev.trace);
  res.rho_end = ev.rho_final;
  double prob = 0.0;
  for (size_t i = 1; i < res.trace.time.size(); ++i)
    prob += 0.5 * (res.trace.emission_rate[i] + res.trace.emission_rate[i - 1]) *
            (res.trace.time[i] - res.trace.time[i - 1]);
  res.emission_probability = prob;
  return res;
}

}  // namespace rps
