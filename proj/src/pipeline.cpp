#include "rps/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace rps::pipeline {

namespace {

DetectorModel detector_or_default(const Scenario& sc, size_t i) {
  if (i < sc.detectors.size()) return sc.detectors[i];
  if (!sc.detectors.empty()) return sc.detectors.front();
  return DetectorModel{};
}

// Intra-sequence separations of detected-channel emission pairs. Only events
// inside the detector gates can contribute coincidences, so the cooling-phase
// flash (outside the gate) is excluded here.
std::vector<double> double_emission_separations(const std::vector<EmissionEvent>& events,
                                                const std::vector<GateWindow>& gates) {
  auto gated = [&](const EmissionEvent& e) {
    if (!e.detected) return false;
    if (gates.empty()) return true;
    for (const auto& g : gates)
      if (e.time >= g.start && e.time <= g.end) return true;
    return false;
  };
  std::vector<double> dts;
  size_t i = 0;
  while (i < events.size()) {
    size_t j = i;
    while (j < events.size() && events[j].sequence_index == events[i].sequence_index) ++j;
    for (size_t a = i; a < j; ++a)
      for (size_t b = a + 1; b < j; ++b)
        if (gated(events[a]) && gated(events[b])) dts.push_back(events[b].time - events[a].time);
    i = j;
  }
  return dts;
}

double interp_window_integral(const std::vector<double>& tau, const std::vector<double>& p,
                              double lo, double hi) {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < tau.size(); ++i) {
    const double a = std::max(lo, tau[i]);
    const double b = std::min(hi, tau[i + 1]);
    if (b <= a) continue;
    // trapezoid on the clipped subinterval
    auto at = [&](double x) {
      const double f = (x - tau[i]) / (tau[i + 1] - tau[i]);
      return (1.0 - f) * p[i] + f * p[i + 1];
    };
    acc += 0.5 * (at(a) + at(b)) * (b - a);
  }
  return acc;
}

}  // namespace

int worker_threads() {
  if (const char* env = std::getenv("RPS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

LindbladSystem make_system(const Scenario& sc) {
  return LindbladSystem(sc.atom, sc.lasers, sc.sequence);
}

PopulationsResult run_populations(const Scenario& sc) {
  LindbladSystem sys = make_system(sc);
  PopulationsResult res;
  res.period = simulate_sequence(sys, sc.simulation.dt);
  const double t_prep_end = sc.sequence.phase_end(1);
  double best = 1e18;
  for (size_t i = 0; i < res.period.trace.time.size(); ++i) {
    const double d = std::abs(res.period.trace.time[i] - t_prep_end);
    if (d < best) {
      best = d;
      res.d_population_after_prep = res.period.trace.pop_D[i];
    }
  }
  return res;
}

TimeTagStream run_trajectory_stream(const Scenario& sc, uint64_t seed) {
  LindbladSystem sys = make_system(sc);
  const PeriodResult pr = simulate_sequence(sys, sc.simulation.dt);
  TrajectoryOptions topt;
  topt.max_threads = worker_threads();
  topt.record_all = false;
  const auto events =
      quantum_jump_trajectories(sys, pr.rho_start, sc.simulation.n_sequences, seed, topt);
  return detect(events, detector_or_default(sc, 0), seed ^ 0x51ee7ULL, sc.simulation.n_sequences,
                sc.sequence.repetition_period, 0, sc.digest);
}

WavepacketResult run_wavepacket(const Scenario& sc, uint64_t seed) {
  WavepacketResult res;
  LindbladSystem sys = make_system(sc);
  const PeriodResult pr = simulate_sequence(sys, sc.simulation.dt);
  res.emission_probability = pr.emission_probability;
  TrajectoryOptions topt;
  topt.max_threads = worker_threads();
  topt.record_all = false;
  const auto events =
      quantum_jump_trajectories(sys, pr.rho_start, sc.simulation.n_sequences, seed, topt);
  const TimeTagStream stream =
      detect(events, detector_or_default(sc, 0), seed ^ 0x51ee7ULL, sc.simulation.n_sequences,
             sc.sequence.repetition_period, 0, sc.digest);
  const double t2 = sc.sequence.phase_start(2);
  const double t3 = sc.sequence.phase_end(2);
  res.wp = arrival_histogram(stream, t2, sc.analysis.bin, t2, t3);
  res.n_clicks = stream.records.size();
  if (sc.analysis.fit_window_a >= 0.0)
    res.fit = fit_exponential_tail(res.wp.tau, res.wp.rate, res.wp.counts,
                                   sc.analysis.fit_window_a, sc.analysis.fit_window_b);
  else
    res.fit = fit_tail_auto(res.wp.tau, res.wp.rate, res.wp.counts);
  return res;
}

ScanResult run_scan(const Scenario& sc) {
  if (sc.analysis.scan_intensities.empty())
    throw ScenarioError("scan-rate: scenario has no analysis.scan_intensities");
  return linearity_scan(sc.atom, sc.lasers, sc.sequence, sc.analysis.scan_intensities,
                        sc.simulation.dt);
}

HbtResult run_hbt(const Scenario& sc, uint64_t seed) {
  LindbladSystem sys = make_system(sc);
  const PeriodResult pr = simulate_sequence(sys, sc.simulation.dt);
  TrajectoryOptions topt;
  topt.max_threads = worker_threads();
  topt.record_all = false;
  const auto events =
      quantum_jump_trajectories(sys, pr.rho_start, sc.simulation.n_sequences, seed, topt);
  const DetectorModel det = detector_or_default(sc, 0);
  const TimeTagStream stream = detect(events, det, seed ^ 0x51ee7ULL, sc.simulation.n_sequences,
                                      sc.sequence.repetition_period, 0, sc.digest);
  const auto [d1, d2] = split_hbt(stream, seed ^ 0xb5ULL);

  HbtResult res;
  res.hist = cross_correlate(d1, d2, sc.analysis.bin, -sc.analysis.tau_max, sc.analysis.tau_max,
                             /*normalize=*/true);
  res.window_half = sc.analysis.central_window > 0.0 ? sc.analysis.central_window : 500.0;

  AccidentalsInput ai;
  ai.t_grid = pr.trace.time;
  ai.rate_d1.resize(ai.t_grid.size());
  ai.rate_d2.resize(ai.t_grid.size());
  for (size_t i = 0; i < ai.t_grid.size(); ++i) {
    const double r = 0.5 * det.efficiency * pr.trace.emission_rate[i];
    ai.rate_d1[i] = r;
    ai.rate_d2[i] = r;
  }
  ai.dark_rate_d1 = 0.5 * det.dark_rate;
  ai.dark_rate_d2 = 0.5 * det.dark_rate;
  ai.gates = det.gates;
  ai.period = sc.sequence.repetition_period;
  ai.n_sequences = sc.simulation.n_sequences;
  ai.doubles_dt = double_emission_separations(events, det.gates);
  ai.doubles_pair_prob = 0.5 * det.efficiency * det.efficiency;
  ai.signal_coincidences = 0.0;  // a single photon cannot pair with itself
  res.budget = accidentals_budget(ai, res.window_half);

  res.central_counts = res.hist.window_counts(res.window_half);
  const double period = sc.sequence.repetition_period;
  double side = 0.0;
  for (size_t i = 0; i < res.hist.bins(); ++i) {
    const double c = res.hist.center(i);
    if (std::abs(c - period) <= res.window_half || std::abs(c + period) <= res.window_half)
      side += res.hist.counts[i];
  }
  res.side_peak_counts = 0.5 * side;
  return res;
}

std::vector<double> regression_t_grid(const Scenario& sc) {
  const double t2 = sc.sequence.phase_start(2);
  const double t3 = sc.sequence.phase_end(2);
  std::vector<double> t;
  for (double x = t2; x <= t3 + 1e-9; x += sc.analysis.t_grid_step) t.push_back(std::min(x, t3));
  if (t.size() < 2) t = {t2, t3};
  return t;
}

std::vector<double> regression_tau_grid(const Scenario& sc) {
  std::vector<double> tau;
  for (double x = 0.0; x <= sc.analysis.tau_max + 1e-9; x += sc.analysis.bin) tau.push_back(x);
  return tau;
}

HomResult run_hom(const Scenario& sc, uint64_t seed) {
  LindbladSystem sys = make_system(sc);
  const PeriodResult pr = simulate_sequence(sys, sc.simulation.dt);
  const auto t_grid = regression_t_grid(sc);
  const auto tau_grid = regression_tau_grid(sc);
  const TwoTimeCorrelation corr = two_time_correlation(sys, pr.rho_start, t_grid, tau_grid);

  HomResult res;
  res.tp = hom_coincidence_model(corr, corr, sc.analysis.overlap, sys.gamma_detected());
  res.g1 = g1_summary(corr);

  // T1 from the positive-delay tail of the distinguishable central peak.
  std::vector<double> tpos, ppos;
  for (size_t i = 0; i < res.tp.tau.size(); ++i) {
    if (res.tp.tau[i] < 0.0) continue;
    tpos.push_back(res.tp.tau[i]);
    ppos.push_back(res.tp.p_ni[i]);
  }
  if (sc.analysis.fit_window_a >= 0.0)
    res.t1_fit = fit_exponential_tail(tpos, ppos, {}, sc.analysis.fit_window_a,
                                      sc.analysis.fit_window_b);
  else
    res.t1_fit = fit_tail_auto(tpos, ppos);

  res.window_half =
      sc.analysis.central_window > 0.0 ? sc.analysis.central_window : 0.5 * res.t1_fit.t1;

  const DetectorModel d1 = detector_or_default(sc, 0);
  const DetectorModel d2 = detector_or_default(sc, 1);
  const double eta12 = d1.efficiency * d2.efficiency;
  const double nseq = static_cast<double>(sc.simulation.n_sequences);

  // Same-source doubles from quantum-jump trajectories of both sources.
  TrajectoryOptions topt;
  topt.max_threads = worker_threads();
  topt.record_all = false;
  std::vector<double> doubles;
  for (uint64_t s : {seed, seed + 1}) {
    const auto ev = quantum_jump_trajectories(sys, pr.rho_start, sc.simulation.n_sequences, s, topt);
    const auto dts = double_emission_separations(ev, d1.gates);
    doubles.insert(doubles.end(), dts.begin(), dts.end());
  }

  AccidentalsInput ai;
  ai.t_grid = pr.trace.time;
  ai.rate_d1.resize(ai.t_grid.size());
  ai.rate_d2.resize(ai.t_grid.size());
  for (size_t i = 0; i < ai.t_grid.size(); ++i) {
    // Each detector sees both (identical) sources through the splitter.
    ai.rate_d1[i] = d1.efficiency * pr.trace.emission_rate[i];
    ai.rate_d2[i] = d2.efficiency * pr.trace.emission_rate[i];
  }
  ai.dark_rate_d1 = d1.dark_rate;
  ai.dark_rate_d2 = d2.dark_rate;
  ai.gates = d1.gates;
  ai.period = sc.sequence.repetition_period;
  ai.n_sequences = sc.simulation.n_sequences;
  ai.doubles_dt = doubles;
  ai.doubles_pair_prob = 0.5 * eta12;

  // Window counts for the contrast (backgrounds included).
  res.signal_ni = nseq * eta12 *
                  interp_window_integral(res.tp.tau, res.tp.p_ni, -res.window_half, res.window_half);
  res.signal_int = nseq * eta12 *
                   interp_window_integral(res.tp.tau, res.tp.p_int, -res.window_half,
                                          res.window_half);
  AccidentalsInput ai_w = ai;
  ai_w.signal_coincidences = res.signal_ni;
  const AccidentalsBudget bg_w = accidentals_budget(ai_w, res.window_half);
  const double c_ni = res.signal_ni + bg_w.total_background;
  const double c_int = res.signal_int + bg_w.total_background;
  res.contrast = (c_ni > 0.0) ? 1.0 - c_int / c_ni : 0.0;

  // Full-range budgets for the accidental fractions.
  ai.signal_coincidences =
      nseq * eta12 *
      interp_window_integral(res.tp.tau, res.tp.p_ni, -sc.analysis.tau_max, sc.analysis.tau_max);
  res.budget_ni = accidentals_budget(ai, sc.analysis.tau_max);
  ai.signal_coincidences =
      nseq * eta12 *
      interp_window_integral(res.tp.tau, res.tp.p_int, -sc.analysis.tau_max, sc.analysis.tau_max);
  res.budget_int = accidentals_budget(ai, sc.analysis.tau_max);

  const size_t i0 = res.tp.tau.size() / 2;  // tau = 0
  res.suppression_tau0 =
      (res.tp.p_ni[i0] > 0.0) ? 1.0 - res.tp.p_int[i0] / res.tp.p_ni[i0] : 0.0;
  return res;
}

}  // namespace rps::pipeline
