#include "rps/sequence.hpp"

#include <algorithm>
#include <cmath>

namespace rps {

void PulseSequence::validate() const {
  double total = 0.0;
  for (const auto& p : phases) {
    if (p.duration < 0.0) throw std::invalid_argument("PulseSequence: negative phase duration");
    if (p.blue_scale < 0.0 || p.blue_scale > 1.0 || p.ir_scale < 0.0 || p.ir_scale > 1.0)
      throw std::invalid_argument("PulseSequence: phase scale outside [0,1]");
    total += p.duration;
  }
  if (total > repetition_period + 1e-9)
    throw std::invalid_argument("PulseSequence: phase durations exceed repetition_period");
  if (leakage.fraction < 0.0 || leakage.fraction > 1.0)
    throw std::invalid_argument("PulseSequence: leakage.fraction outside [0,1]");
  if (leakage.duration < 0.0 || leakage.duration > phases[2].duration)
    throw std::invalid_argument("PulseSequence: leakage.duration exceeds phase III duration");
  if (switching_edge < 0.0) throw std::invalid_argument("PulseSequence: negative switching_edge");
}

double PulseSequence::phase_start(int i) const {
  double t = 0.0;
  for (int k = 0; k < i; ++k) t += phases[static_cast<size_t>(k)].duration;
  return t;
}

double Envelope::value(double t) const {
  for (const auto& s : segments) {
    if (t >= s.t0 && t <= s.t1) {
      if (s.t1 == s.t0) return s.v1;
      const double x = (t - s.t0) / (s.t1 - s.t0);
      return s.v0 + x * (s.v1 - s.v0);
    }
  }
  return segments.empty() ? 0.0 : segments.back().v1;
}

bool Envelope::constant_on(double t0, double t1) const {
  const double mid = 0.5 * (t0 + t1);
  for (const auto& s : segments) {
    if (mid >= s.t0 && mid <= s.t1) return s.v0 == s.v1 && t0 >= s.t0 - 1e-9 && t1 <= s.t1 + 1e-9;
  }
  return false;
}

namespace {

// Targets as (time, value) knots; ramps inserted at every value change.
struct Knot {
  double t;
  double v;
};

Envelope make_envelope(const std::vector<Knot>& knots, double edge, double period) {
  Envelope env;
  double t = 0.0;
  double v = knots.empty() ? 0.0 : knots.back().v;  // cyclic: start from the period-end value
  for (const auto& k : knots) {
    if (k.t > t) {
      env.segments.push_back({t, k.t, v, v});
      t = k.t;
    }
    if (k.v != v) {
      const double ramp = std::min(edge, period - t);
      if (ramp > 0.0) {
        env.segments.push_back({t, t + ramp, v, k.v});
        t += ramp;
      }
      v = k.v;
    }
  }
  if (t < period) env.segments.push_back({t, period, v, v});
  return env;
}

}  // namespace

SequenceEnvelopes build_envelopes(const PulseSequence& seq) {
  seq.validate();
  const double t1 = seq.phase_start(1);
  const double t2 = seq.phase_start(2);

  std::vector<Knot> blue;
  blue.push_back({0.0, seq.phases[0].blue_scale});
  blue.push_back({t1, seq.phases[1].blue_scale});
  if (seq.leakage.fraction > 0.0 && seq.leakage.duration > 0.0) {
    const double leak_amp = std::sqrt(seq.leakage.fraction) * seq.phases[1].blue_scale;
    blue.push_back({t2, leak_amp});
    blue.push_back({t2 + seq.leakage.duration, seq.phases[2].blue_scale});
  } else {
    blue.push_back({t2, seq.phases[2].blue_scale});
  }

  std::vector<Knot> ir;
  ir.push_back({0.0, seq.phases[0].ir_scale});
  ir.push_back({t1, seq.phases[1].ir_scale});
  ir.push_back({t2, seq.phases[2].ir_scale});

  // Both lasers are off in the idle stretch between phase III and the next
  // trigger.
  const double t3 = seq.phase_end(2);
  if (t3 < seq.repetition_period) {
    blue.push_back({t3, 0.0});
    ir.push_back({t3, 0.0});
  }

  SequenceEnvelopes out;
  out.blue = make_envelope(blue, seq.switching_edge, seq.repetition_period);
  out.ir = make_envelope(ir, seq.switching_edge, seq.repetition_period);

  for (const auto& s : out.blue.segments) {
    out.breakpoints.push_back(s.t0);
    out.breakpoints.push_back(s.t1);
  }
  for (const auto& s : out.ir.segments) {
    out.breakpoints.push_back(s.t0);
    out.breakpoints.push_back(s.t1);
  }
  std::sort(out.breakpoints.begin(), out.breakpoints.end());
  out.breakpoints.erase(std::unique(out.breakpoints.begin(), out.breakpoints.end(),
                                    [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                        out.breakpoints.end());
  return out;
}

}  // namespace rps
