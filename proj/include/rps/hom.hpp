#pragma once

#include <vector>

#include "rps/detector.hpp"
#include "rps/regression.hpp"

namespace rps {

// Beam-splitter coincidence densities between the two output detectors for
// two single-photon sources with field correlations Ga, Gb. Densities are
// per sequence per ns of delay, in emitted-photon units (detector efficiency
// is applied by the caller when converting to counts).
struct TwoPhotonResult {
  std::vector<double> tau;    // symmetric delay grid, ns
  std::vector<double> p_ni;   // distinguishable (overlap effectively 0)
  std::vector<double> p_int;  // at the given overlap
  std::vector<double> g2_ni;  // normalized by the uncorrelated-pair expectation
  std::vector<double> g2_int;
  double overlap = 0.0;
};

// Joint coincidence density
//   P(tau) = 1/4 Int [ n_a(t) n_b(t+tau) + n_b(t) n_a(t+tau)
//                      - 2 overlap Re(Ga*(t,t+tau) Gb(t,t+tau)) ] dt,
// symmetrized over +-tau. gamma_det converts the correlator's intensity units
// into photons/ns.
TwoPhotonResult hom_coincidence_model(const TwoTimeCorrelation& ga, const TwoTimeCorrelation& gb,
                                      double overlap, double gamma_det);

struct AccidentalsInput {
  // Per-sequence detected signal rate profile at each of the two detectors
  // (photons/ns vs in-period time; includes all efficiencies).
  std::vector<double> t_grid;
  std::vector<double> rate_d1, rate_d2;
  double dark_rate_d1 = 0.0;  // counts/ns inside gates
  double dark_rate_d2 = 0.0;
  std::vector<GateWindow> gates;  // empty: whole period
  double period = 0.0;
  uint64_t n_sequences = 0;
  // Intra-sequence separations of same-source double emissions (one entry per
  // pair, from Monte Carlo trajectories with leakage on), and the probability
  // that such a pair yields a cross-detector coincidence.
  std::vector<double> doubles_dt;
  double doubles_pair_prob = 0.0;
  // Signal x signal coincidences in the analysis window (for the fractions).
  double signal_coincidences = 0.0;
};

struct AccidentalsBudget {
  double signal_dark = 0.0;  // expected counts in the window
  double dark_dark = 0.0;
  double same_source_doubles = 0.0;
  double total_background = 0.0;
  double total_coincidences = 0.0;
  double frac_signal_dark = 0.0;  // fractions of total coincidences
  double frac_dark_dark = 0.0;
  double frac_doubles = 0.0;
};

// Expected background coincidences between the two detectors with
// |t2 - t1| <= window_half, per the attached dark/doubles model.
AccidentalsBudget accidentals_budget(const AccidentalsInput& in, double window_half);

struct G1Summary {
  std::vector<double> tau;
  std::vector<Complex> g1;       // g1(0) = 1
  std::vector<double> envelope;  // fitted exponential envelope of |g1|
  double t2 = 0.0;               // ns, envelope decay time
  double t2_err = 0.0;
  double beat_mhz = 0.0;  // separation of the two dominant spectral lines of g1
};

// g1(tau) = Int G(t, t+tau) dt / Int n(t) dt; envelope fitted through the
// local maxima of |g1| (beat nodes excluded, amplitude-weighted); the beat is
// the separation of the two dominant peaks in the DFT of the complex g1
// (0 when the spectrum has a single line).
G1Summary g1_summary(const TwoTimeCorrelation& g);

}  // namespace rps
