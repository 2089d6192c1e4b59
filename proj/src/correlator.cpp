#include "rps/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rps {

namespace {

std::vector<double> absolute_times(const TimeTagStream& s, double shift_periods = 0.0) {
  std::vector<double> t;
  t.reserve(s.records.size());
  const double off = shift_periods * s.repetition_period;
  for (const auto& r : s.records)
    t.push_back(static_cast<double>(r.sequence_index) * s.repetition_period + r.timestamp + off);
  return t;
}

void accumulate_pairs(const std::vector<double>& t1, const std::vector<double>& t2, double bin,
                      double tau_min, double tau_max, std::vector<double>& counts) {
  size_t lo = 0;
  for (const double a : t1) {
    while (lo < t2.size() && t2[lo] < a + tau_min) ++lo;
    for (size_t j = lo; j < t2.size() && t2[j] < a + tau_max; ++j) {
      const auto b = static_cast<size_t>((t2[j] - a - tau_min) / bin);
      if (b < counts.size()) counts[b] += 1.0;
    }
  }
}

}  // namespace

double CorrelationHistogram::window_counts(double half_width) const {
  double acc = 0.0;
  for (size_t i = 0; i < counts.size(); ++i)
    if (std::abs(center(i)) <= half_width) acc += counts[i];
  return acc;
}

CorrelationHistogram cross_correlate(const TimeTagStream& s1, const TimeTagStream& s2, double bin,
                                     double tau_min, double tau_max, bool normalize, int shift_k) {
  if (!(bin > 0.0) || !(tau_max > tau_min))
    throw std::invalid_argument("cross_correlate: bad bin/range");
  if (std::abs(s1.repetition_period - s2.repetition_period) > 1e-9)
    throw std::invalid_argument("cross_correlate: mismatched repetition periods");

  CorrelationHistogram h;
  h.bin_width = bin;
  h.tau_min = tau_min;
  h.tau_max = tau_max;
  const auto nbins = static_cast<size_t>(std::ceil((tau_max - tau_min) / bin - 1e-9));
  h.counts.assign(nbins, 0.0);

  const std::vector<double> t1 = absolute_times(s1);
  const std::vector<double> t2 = absolute_times(s2);
  accumulate_pairs(t1, t2, bin, tau_min, tau_max, h.counts);

  h.err.resize(nbins);
  for (size_t i = 0; i < nbins; ++i) h.err[i] = std::sqrt(h.counts[i]);

  if (normalize) {
    h.normalized = true;
    h.expected.assign(nbins, 0.0);
    int used = 0;
    for (int k = 1; k <= shift_k; ++k) {
      for (const int sign : {+1, -1}) {
        const std::vector<double> ts = absolute_times(s2, sign * k);
        accumulate_pairs(t1, ts, bin, tau_min, tau_max, h.expected);
        ++used;
      }
    }
    for (auto& e : h.expected) e /= used;
    h.norm.resize(nbins);
    for (size_t i = 0; i < nbins; ++i)
      h.norm[i] = (h.expected[i] > 0.0) ? h.counts[i] / h.expected[i] : 0.0;
  }
  return h;
}

WavepacketEstimate arrival_histogram(const TimeTagStream& s, double trigger_offset, double bin,
                                     double window_start, double window_end) {
  if (!(bin > 0.0)) throw std::invalid_argument("arrival_histogram: bin must be > 0");
  WavepacketEstimate wp;
  wp.bin = bin;
  const double span = window_end - trigger_offset;
  if (span <= 0.0) return wp;
  const auto nbins = static_cast<size_t>(std::ceil(span / bin - 1e-9));
  wp.counts.assign(nbins, 0.0);
  for (const auto& r : s.records) {
    double t = std::fmod(r.timestamp, s.repetition_period);
    if (t < 0.0) t += s.repetition_period;
    if (t < window_start || t >= window_end) continue;
    const double tau = t - trigger_offset;
    if (tau < 0.0) continue;
    const auto b = static_cast<size_t>(tau / bin);
    if (b < nbins) wp.counts[b] += 1.0;
  }
  wp.tau.resize(nbins);
  wp.rate.resize(nbins);
  const double nseq = static_cast<double>(std::max<uint64_t>(1, s.total_sequences));
  for (size_t i = 0; i < nbins; ++i) {
    wp.tau[i] = (static_cast<double>(i) + 0.5) * bin;
    wp.rate[i] = wp.counts[i] / (nseq * bin);
  }
  return wp;
}

ExpFitResult fit_exponential_tail(const std::vector<double>& tau, const std::vector<double>& rate,
                                  const std::vector<double>& counts, double ta, double tb) {
  if (tau.size() != rate.size()) throw std::invalid_argument("fit_exponential_tail: size mismatch");
  std::vector<double> x, y, w;
  for (size_t i = 0; i < tau.size(); ++i) {
    if (tau[i] < ta || tau[i] > tb) continue;
    if (!(rate[i] > 0.0)) continue;
    x.push_back(tau[i]);
    y.push_back(std::log(rate[i]));
    w.push_back(counts.empty() ? 1.0 : counts[i]);
  }
  if (x.size() < 5)
    throw std::invalid_argument("fit_exponential_tail: fewer than 5 nonzero bins in window");

  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double delta = sw * sxx - sx * sx;
  if (std::abs(delta) < 1e-30)
    throw std::invalid_argument("fit_exponential_tail: singular fit (degenerate abscissae)");
  const double slope = (sw * sxy - sx * sy) / delta;
  const double intercept = (sxx * sy - sx * sxy) / delta;

  ExpFitResult r;
  r.gamma = -slope;
  if (!(r.gamma > 0.0))
    throw std::invalid_argument("fit_exponential_tail: non-decaying tail");
  r.t1 = 1.0 / r.gamma;
  r.log_amp = intercept;
  r.window_a = ta;
  r.window_b = tb;
  r.n_points = static_cast<int>(x.size());
  double rss = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double res = y[i] - (intercept + slope * x[i]);
    rss += w[i] * res * res;
  }
  r.rss = rss;
  // Poisson weights carry the scale; with unit weights scale by residual variance.
  const double var_scale =
      counts.empty() ? rss / std::max<size_t>(1, x.size() - 2) : 1.0;
  r.gamma_err = std::sqrt(var_scale * sw / delta);
  r.t1_err = r.gamma_err / (r.gamma * r.gamma);
  return r;
}

ExpFitResult fit_tail_auto(const std::vector<double>& tau, const std::vector<double>& rate,
                           const std::vector<double>& counts) {
  if (tau.empty()) throw std::invalid_argument("fit_tail_auto: empty data");
  size_t ipeak = 0;
  for (size_t i = 1; i < rate.size(); ++i)
    if (rate[i] > rate[ipeak]) ipeak = i;
  const double t_peak = tau[ipeak];
  const double t_end = tau.back();
  ExpFitResult first =
      fit_exponential_tail(tau, rate, counts, t_peak + 0.1 * (t_end - t_peak), t_peak + 0.9 * (t_end - t_peak));
  const double ta = t_peak + 1.0 / first.gamma;
  const double tb = std::min(t_end, t_peak + 6.0 / first.gamma);
  try {
    return fit_exponential_tail(tau, rate, counts, ta, tb);
  } catch (const std::invalid_argument&) {
    return first;  // refined window too sparse, keep the coarse fit
  }
}

ScanResult linearity_scan(const AtomModel& atom, const std::vector<LaserField>& lasers,
                          const PulseSequence& seq, const std::vector<double>& intensities_rel,
                          double dt) {
  ScanResult res;
  for (const double rel : intensities_rel) {
    if (rel < 0.0) throw std::invalid_argument("linearity_scan: negative intensity");
    if (rel == 0.0) {
      res.points.push_back({0.0, 0.0, 0.0, 0.0});
      continue;
    }
    std::vector<LaserField> scaled = lasers;
    for (auto& l : scaled)
      if (l.transition == Transition::Ir866) l.rabi_peak *= std::sqrt(rel);
    LindbladSystem sys(atom, scaled, seq);
    const PeriodResult pr = simulate_sequence(sys, dt);

    // Fit the tail of the detected emission rate within phase III.
    const double t2 = seq.phase_start(2);
    std::vector<double> t, rate;
    for (size_t i = 0; i < pr.trace.time.size(); ++i) {
      if (pr.trace.time[i] < t2) continue;
      t.push_back(pr.trace.time[i] - t2);
      rate.push_back(pr.trace.emission_rate[i]);
    }
    const ExpFitResult fit = fit_tail_auto(t, rate);
    res.points.push_back({rel, fit.gamma, fit.gamma_err, fit.t1});
  }

  double sxy = 0, sxx = 0, sy = 0, n = 0;
  for (const auto& p : res.points) {
    sxy += p.intensity_rel * p.gamma;
    sxx += p.intensity_rel * p.intensity_rel;
    sy += p.gamma;
    n += 1.0;
  }
  res.slope = (sxx > 0.0) ? sxy / sxx : 0.0;

  // R2 of the proportional model evaluated on log-log axes (prefactor at the
  // geometric mean), since the scan spans decades of intensity and the
  // reference plot is logarithmic. Zero-intensity anchor points are excluded.
  std::vector<double> lx, ly;
  for (const auto& p : res.points)
    if (p.intensity_rel > 0.0 && p.gamma > 0.0) {
      lx.push_back(std::log(p.intensity_rel));
      ly.push_back(std::log(p.gamma));
    }
  if (lx.size() >= 2) {
    double c = 0.0, my = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
      c += ly[i] - lx[i];
      my += ly[i];
    }
    c /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double ss_res = 0, ss_tot = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      ss_res += (ly[i] - lx[i] - c) * (ly[i] - lx[i] - c);
      ss_tot += (ly[i] - my) * (ly[i] - my);
    }
    res.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  } else {
    res.r2 = 1.0;
  }
  return res;
}

}  // namespace rps
