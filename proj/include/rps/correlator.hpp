#pragma once

#include <vector>

#include "rps/detector.hpp"
#include "rps/master.hpp"

namespace rps {

struct CorrelationHistogram {
  double bin_width = 0.0;
  double tau_min = 0.0, tau_max = 0.0;
  std::vector<double> counts;
  std::vector<double> err;       // sqrt(counts)
  std::vector<double> expected;  // uncorrelated-pair expectation (empty if raw)
  std::vector<double> norm;      // counts/expected (empty if raw)
  bool normalized = false;

  size_t bins() const { return counts.size(); }
  double center(size_t i) const { return tau_min + (static_cast<double>(i) + 0.5) * bin_width; }
  // Sum of counts with |tau| <= half_width.
  double window_counts(double half_width) const;
};

// Histogram of t2 - t1 over all record pairs within [tau_min, tau_max),
// absolute times t = sequence_index * period + timestamp. Sweep-line,
// O(n * pairs-in-range). When normalize is set, the expectation is the
// shifted-sequence estimator averaged over sequence offsets +-1..+-shift_k.
CorrelationHistogram cross_correlate(const TimeTagStream& s1, const TimeTagStream& s2,
                                     double bin, double tau_min, double tau_max,
                                     bool normalize = false, int shift_k = 8);

struct WavepacketEstimate {
  double bin = 0.0;
  std::vector<double> tau;     // bin centers, ns from trigger
  std::vector<double> counts;
  std::vector<double> rate;    // counts / (n_sequences * bin), photons/ns
};

// Detection-time histogram relative to trigger_offset, restricted to
// in-period timestamps within [window_start, window_end).
WavepacketEstimate arrival_histogram(const TimeTagStream& s, double trigger_offset, double bin,
                                     double window_start, double window_end);

struct ExpFitResult {
  double gamma = 0.0;      // 1/ns
  double t1 = 0.0;         // ns
  double gamma_err = 0.0;
  double t1_err = 0.0;
  double log_amp = 0.0;
  double window_a = 0.0, window_b = 0.0;
  int n_points = 0;
  double rss = 0.0;  // weighted residual sum of squares in log space
};

// Weighted least squares of log(rate) vs tau on [ta, tb]. Weights are the
// per-bin counts when given (Poisson), unit otherwise.
ExpFitResult fit_exponential_tail(const std::vector<double>& tau, const std::vector<double>& rate,
                                  const std::vector<double>& counts, double ta, double tb);

// Two-pass fit with a self-chosen window past the wavepacket peak.
ExpFitResult fit_tail_auto(const std::vector<double>& tau, const std::vector<double>& rate,
                           const std::vector<double>& counts = {});

struct ScanPoint {
  double intensity_rel;
  double gamma;
  double gamma_err;
  double t1;
};

struct ScanResult {
  std::vector<ScanPoint> points;
  double slope = 0.0;  // linear fit through the origin
  double r2 = 0.0;
};

// Raman-rate scan: scales the IR intensity (Rabi frequency squared) by each
// relative factor, runs the sequence to its cyclic fixed point and fits the
// exponential tail of the detected emission rate.
ScanResult linearity_scan(const AtomModel& atom, const std::vector<LaserField>& lasers,
                          const PulseSequence& seq, const std::vector<double>& intensities_rel,
                          double dt);

}  // namespace rps
