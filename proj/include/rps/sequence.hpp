#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace rps {

// One excitation period: phase I (cool, both lasers), phase II (prepare,
// repump off), phase III (emit, pump off). Times in ns, scales are amplitude
// factors in [0,1] applied to each laser's peak Rabi frequency.
struct SequencePhase {
  double duration = 0.0;
  double blue_scale = 0.0;
  double ir_scale = 0.0;
};

struct Leakage {
  double fraction = 0.0;  // residual blue intensity (amplitude squared) in phase III
  double duration = 0.0;  // ns from the start of phase III
};

struct PulseSequence {
  std::array<SequencePhase, 3> phases;
  double repetition_period = 0.0;
  Leakage leakage;
  double switching_edge = 10.0;  // linear amplitude ramp time, ns

  void validate() const;

  double phase_start(int i) const;
  double phase_end(int i) const { return phase_start(i) + phases[static_cast<size_t>(i)].duration; }
};

// Piecewise-linear amplitude envelope of one laser over a period.
struct Envelope {
  struct Segment {
    double t0, t1;
    double v0, v1;
  };
  std::vector<Segment> segments;  // contiguous, cover [0, period]

  double value(double t) const;
  bool constant_on(double t0, double t1) const;
};

struct SequenceEnvelopes {
  Envelope blue;
  Envelope ir;
  std::vector<double> breakpoints;  // merged segment boundaries, sorted
};

SequenceEnvelopes build_envelopes(const PulseSequence& seq);

}  // namespace rps
