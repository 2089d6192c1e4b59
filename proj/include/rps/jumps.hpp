#pragma once

#include <cstdint>
#include <vector>

#include "rps/master.hpp"

namespace rps {

struct EmissionEvent {
  uint32_t sequence_index;
  double time;  // ns within the sequence period
  int channel;  // index into LindbladSystem::jumps()
  bool detected;
};

struct TrajectoryOptions {
  double step_coarse = 5.0;  // ns, substep within constant-drive segments
  double step_ramp = 1.0;    // ns, substep within switching ramps
  double step_idle = 500.0;  // ns, substep where both drives are exactly off
  int max_threads = 1;
  bool record_all = true;  // false: keep only detected-channel events
};

// Ensemble accumulator for manifold populations at fixed sample times.
// Sample times must coincide with trajectory substep boundaries; use
// trajectory_step_times() to obtain valid grids.
struct PopulationAccumulator {
  std::vector<double> times;
  std::vector<double> sum_S, sum_P, sum_D;
  uint64_t n_sequences = 0;
};

std::vector<double> trajectory_step_times(const LindbladSystem& sys,
                                          const TrajectoryOptions& opt = {});

// Quantum-jump unraveling of the master equation: per sequence, the initial
// pure state is drawn from the eigendecomposition of rho_start, the state is
// propagated under H_eff and collapsed when its squared norm crosses a uniform
// threshold. One RNG per sequence index; the event multiset is identical for
// a fixed (seed, n_sequences, config) regardless of thread count.
std::vector<EmissionEvent> quantum_jump_trajectories(const LindbladSystem& sys,
                                                     const Matrix8c& rho_start,
                                                     uint64_t n_sequences, uint64_t seed,
                                                     const TrajectoryOptions& opt = {},
                                                     PopulationAccumulator* accum = nullptr);

}  // namespace rps
