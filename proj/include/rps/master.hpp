#pragma once

#include <functional>
#include <vector>

#include "rps/atom.hpp"
#include "rps/sequence.hpp"

namespace rps {

// Thrown when the adaptive step underflows (local error cannot be met).
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when an iterative solve does not converge.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IntegratorOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h_min = 1e-6;  // ns; below this a step rejection reports divergence
  double h_max = 1e9;
};

struct PopulationTrace {
  std::vector<double> time;      // ns
  std::vector<double> pop_S;     // S1/2 manifold population
  std::vector<double> pop_P;
  std::vector<double> pop_D;
  std::vector<double> emission_rate;  // detected-channel photons/ns
};

// Precomputed generator of the driven 8-level master equation over one
// excitation period. Hamiltonian is linear in the two envelope amplitudes:
// H(t) = H_frame + b(t) H_blue + i(t) H_ir.
class LindbladSystem {
 public:
  LindbladSystem(AtomModel atom, std::vector<LaserField> lasers, PulseSequence seq);

  const AtomModel& atom() const { return atom_; }
  const std::vector<LaserField>& lasers() const { return lasers_; }
  const PulseSequence& sequence() const { return seq_; }
  const SequenceEnvelopes& envelopes() const { return env_; }
  const std::vector<JumpOperator>& jumps() const { return jumps_; }
  double period() const { return seq_.repetition_period; }
  double gamma_detected() const { return gamma_detected_; }

  // H for explicit envelope amplitudes (both in [0,1]).
  Matrix8c hamiltonian_at_scales(double blue, double ir) const;
  // H at time t (wrapped into [0, period)).
  Matrix8c hamiltonian(double t) const;

  // drho = -i[H,rho] + sum_k (L rho L+ - 1/2 {L+L, rho})
  void apply_generator(const Matrix8c& h, const Matrix8c& rho, Matrix8c& out) const;

  // Vectorized 64x64 Liouvillian (column-major vec convention).
  Eigen::MatrixXcd liouvillian_matrix(const Matrix8c& h) const;

  // Non-Hermitian effective Hamiltonian H - (i/2) sum L+L.
  Matrix8c effective_hamiltonian(const Matrix8c& h) const;

 private:
  AtomModel atom_;
  std::vector<LaserField> lasers_;
  PulseSequence seq_;
  SequenceEnvelopes env_;
  std::vector<JumpOperator> jumps_;
  Matrix8c h_frame_, h_blue_, h_ir_;
  Eigen::Matrix<double, kNumLevels, 1> decay_diag_;  // sum_k gamma_k |u><u|
  double gamma_detected_ = 0.0;
};

struct EvolveResult {
  PopulationTrace trace;
  Matrix8c rho_final;
};

// Integrates the master equation from t0 to t1, sampling every dt.
// Time is absolute; the drive envelope repeats with the sequence period.
EvolveResult evolve_master(const LindbladSystem& sys, const Matrix8c& rho0, double t0, double t1,
                           double dt, const IntegratorOptions& opt = {});

// Generic propagation of a (possibly non-Hermitian) 8x8 matrix under the same
// generator, with a sampling callback at the given times. Used by the quantum
// regression computation; rho may be any operator.
void propagate_operator(const LindbladSystem& sys, Matrix8c& op, double t0,
                        const std::vector<double>& sample_times,
                        const std::function<void(size_t, const Matrix8c&)>& on_sample,
                        const IntegratorOptions& opt = {});

// Null-space solve of the constant-drive Liouvillian, trace-normalized.
// Throws ConvergenceError when the null space is degenerate.
Matrix8c steady_state(const LindbladSystem& sys, double blue_scale, double ir_scale);

struct PeriodResult {
  PopulationTrace trace;
  Matrix8c rho_start;  // cyclic fixed point at t = 0
  Matrix8c rho_end;
  int iterations = 0;
  double emission_probability = 0.0;  // integrated detected rate over the period
};

// Iterates whole periods to the cyclic fixed point (trace distance < 1e-8),
// then records one period on the dt grid.
PeriodResult simulate_sequence(const LindbladSystem& sys, double dt,
                               const IntegratorOptions& opt = {});

double trace_distance(const Matrix8c& a, const Matrix8c& b);

Matrix8c pure_state_density(int level);

void manifold_populations(const Matrix8c& rho, double& s, double& p, double& d);

}  // namespace rps
