#pragma once

#include "rps/correlator.hpp"
#include "rps/hom.hpp"
#include "rps/jumps.hpp"
#include "rps/scenario.hpp"

// Figure-level analysis pipelines shared by the CLI and the acceptance suite.

namespace rps::pipeline {

int worker_threads();  // RPS_THREADS cap, default 1x hardware

LindbladSystem make_system(const Scenario& sc);

struct PopulationsResult {
  PeriodResult period;
  double d_population_after_prep = 0.0;  // D32 population at the end of phase II
};
PopulationsResult run_populations(const Scenario& sc);

struct WavepacketResult {
  WavepacketEstimate wp;
  ExpFitResult fit;
  uint64_t n_clicks = 0;
  double emission_probability = 0.0;
};
WavepacketResult run_wavepacket(const Scenario& sc, uint64_t seed);

ScanResult run_scan(const Scenario& sc);

struct HbtResult {
  CorrelationHistogram hist;
  AccidentalsBudget budget;       // expected central-window background
  double window_half = 0.0;
  double central_counts = 0.0;    // measured coincidences with |tau| <= window
  double side_peak_counts = 0.0;  // same window around tau = +-period
};
HbtResult run_hbt(const Scenario& sc, uint64_t seed);

struct HomResult {
  TwoPhotonResult tp;
  G1Summary g1;
  ExpFitResult t1_fit;          // from the g2_ni central-peak tail
  double window_half = 0.0;
  double signal_ni = 0.0;       // signal-signal counts in the window
  double signal_int = 0.0;
  AccidentalsBudget budget_ni;  // over the full analysis range (fractions)
  AccidentalsBudget budget_int;
  double contrast = 0.0;        // 1 - C_int/C_ni, backgrounds included
  double suppression_tau0 = 0.0;  // 1 - p_int(0)/p_ni(0), pure-model dip
};
HomResult run_hom(const Scenario& sc, uint64_t seed);

// Detected-click stream of detector 0 (trajectories + detector model).
TimeTagStream run_trajectory_stream(const Scenario& sc, uint64_t seed);

// Emission-time and delay grids for the regression analysis of phase III.
std::vector<double> regression_t_grid(const Scenario& sc);
std::vector<double> regression_tau_grid(const Scenario& sc);

}  // namespace rps::pipeline
