#include "rps/hom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rps {

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (size_t i = 0; i + 1 < t.size(); ++i) {
    const double h = 0.5 * (t[i + 1] - t[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

}  // namespace

TwoPhotonResult hom_coincidence_model(const TwoTimeCorrelation& ga, const TwoTimeCorrelation& gb,
                                      double overlap, double gamma_det) {
  if (ga.t_grid != gb.t_grid || ga.tau_grid != gb.tau_grid)
    throw std::invalid_argument("hom_coincidence_model: correlation grids differ");
  if (overlap < 0.0 || overlap > 1.0)
    throw std::invalid_argument("hom_coincidence_model: overlap outside [0,1]");

  const auto& t = ga.t_grid;
  const auto& taus = ga.tau_grid;
  const std::vector<double> w = trapezoid_weights(t);
  const double g2scale = gamma_det * gamma_det;

  std::vector<double> p_sum(taus.size(), 0.0), p_if(taus.size(), 0.0);
  for (size_t k = 0; k < taus.size(); ++k) {
    const double tau = taus[k];
    double sum = 0.0, inter = 0.0;
    for (size_t i = 0; i < t.size(); ++i) {
      const double na = ga.intensity[i];
      const double nb = gb.intensity[i];
      sum += w[i] * (na * gb.intensity_at(t[i] + tau) + nb * ga.intensity_at(t[i] + tau));
      inter += w[i] * std::real(std::conj(ga.values(static_cast<Eigen::Index>(i),
                                                    static_cast<Eigen::Index>(k))) *
                                gb.values(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(k)));
    }
    p_sum[k] = 0.25 * g2scale * sum;
    p_if[k] = 0.5 * g2scale * inter;
  }

  // Mirror to a symmetric grid; the integrand is symmetric under
  // (a<->b, tau -> -tau), so negative delays reuse the positive-side values.
  TwoPhotonResult res;
  res.overlap = overlap;
  const size_t n = taus.size();
  for (size_t k = n; k-- > 1;) {
    res.tau.push_back(-taus[k]);
    res.p_ni.push_back(p_sum[k]);
    res.p_int.push_back(std::max(0.0, p_sum[k] - overlap * p_if[k]));
  }
  for (size_t k = 0; k < n; ++k) {
    res.tau.push_back(taus[k]);
    res.p_ni.push_back(p_sum[k]);
    res.p_int.push_back(std::max(0.0, p_sum[k] - overlap * p_if[k]));
  }

  res.g2_ni.resize(res.tau.size());
  res.g2_int.resize(res.tau.size());
  for (size_t k = 0; k < res.tau.size(); ++k) {
    const double e = res.p_ni[k];
    res.g2_ni[k] = (e > 0.0) ? 1.0 : 0.0;
    res.g2_int[k] = (e > 0.0) ? res.p_int[k] / e : 0.0;
  }
  return res;
}

AccidentalsBudget accidentals_budget(const AccidentalsInput& in, double window_half) {
  AccidentalsBudget out;
  std::vector<GateWindow> gates = in.gates;
  if (gates.empty()) gates.push_back({0.0, in.period});
  auto gated_len_around = [&](double t) {
    // length of gated time within [t - W, t + W]
    double len = 0.0;
    for (const auto& g : gates)
      len += std::max(0.0, std::min(g.end, t + window_half) - std::max(g.start, t - window_half));
    return len;
  };

  const std::vector<double> w = trapezoid_weights(in.t_grid);
  double sig_dark = 0.0;
  for (size_t i = 0; i < in.t_grid.size(); ++i) {
    const double t = in.t_grid[i];
    const double len = gated_len_around(t);
    sig_dark += w[i] * (in.rate_d1[i] * in.dark_rate_d2 + in.rate_d2[i] * in.dark_rate_d1) * len;
  }
  out.signal_dark = sig_dark * static_cast<double>(in.n_sequences);

  double dd_area = 0.0;
  for (const auto& g : gates) {
    const int nsub = 200;
    const double h = (g.end - g.start) / nsub;
    for (int k = 0; k < nsub; ++k)
      dd_area += h * gated_len_around(g.start + (k + 0.5) * h);
  }
  out.dark_dark =
      in.dark_rate_d1 * in.dark_rate_d2 * dd_area * static_cast<double>(in.n_sequences);

  double doubles = 0.0;
  for (const double dt : in.doubles_dt)
    if (std::abs(dt) <= window_half) doubles += 1.0;
  out.same_source_doubles = doubles * in.doubles_pair_prob;

  out.total_background = out.signal_dark + out.dark_dark + out.same_source_doubles;
  out.total_coincidences = in.signal_coincidences + out.total_background;
  if (out.total_coincidences > 0.0) {
    out.frac_signal_dark = out.signal_dark / out.total_coincidences;
    out.frac_dark_dark = out.dark_dark / out.total_coincidences;
    out.frac_doubles = out.same_source_doubles / out.total_coincidences;
  }
  return out;
}

G1Summary g1_summary(const TwoTimeCorrelation& g) {
  G1Summary out;
  out.tau = g.tau_grid;
  const std::vector<double> w = trapezoid_weights(g.t_grid);
  double norm = 0.0;
  for (size_t i = 0; i < g.t_grid.size(); ++i) norm += w[i] * g.intensity[i];
  if (!(norm > 0.0)) throw std::invalid_argument("g1_summary: zero integrated intensity");

  out.g1.resize(g.tau_grid.size());
  for (size_t k = 0; k < g.tau_grid.size(); ++k) {
    Complex acc = 0.0;
    for (size_t i = 0; i < g.t_grid.size(); ++i)
      acc += w[i] * g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    out.g1[k] = acc / norm;
  }

  std::vector<double> mag(out.g1.size());
  for (size_t k = 0; k < out.g1.size(); ++k) mag[k] = std::abs(out.g1[k]);

  // Beat first: separation of the two dominant lines in the spectrum of the
  // complex g1 (each emission pathway contributes one line; their offset is
  // the Zeeman beat). DFT over the uniform tau grid, signed frequencies.
  const size_t n = out.tau.size();
  const double dtau = (n >= 2) ? out.tau[1] - out.tau[0] : 0.0;
  if (n >= 8) {
    std::vector<double> spec(n, 0.0);
    for (size_t k = 0; k < n; ++k) {
      Complex acc = 0.0;
      for (size_t j = 0; j < n; ++j) {
        const double ph = -kTwoPi * static_cast<double>(k) * static_cast<double>(j) /
                          static_cast<double>(n);
        acc += out.g1[j] * Complex(std::cos(ph), std::sin(ph));
      }
      spec[k] = std::abs(acc);
    }
    auto is_peak = [&](size_t k) {
      const size_t prev = (k + n - 1) % n;
      const size_t next = (k + 1) % n;
      return spec[k] >= spec[prev] && spec[k] >= spec[next];
    };
    size_t k1 = n, k2 = n;
    for (size_t k = 0; k < n; ++k) {
      if (!is_peak(k)) continue;
      if (k1 == n || spec[k] > spec[k1]) {
        k2 = k1;
        k1 = k;
      } else if (k2 == n || spec[k] > spec[k2]) {
        k2 = k;
      }
    }
    if (k1 < n && k2 < n && spec[k2] >= 0.25 * spec[k1]) {
      // Sub-bin peak positions by parabolic interpolation, then frequency
      // separation on the circle (lines may straddle Nyquist).
      auto refine = [&](size_t k) {
        const double ym = spec[(k + n - 1) % n], y0 = spec[k], yp = spec[(k + 1) % n];
        const double den = ym - 2.0 * y0 + yp;
        const double d = (std::abs(den) > 1e-30) ? 0.5 * (ym - yp) / den : 0.0;
        return static_cast<double>(k) + std::clamp(d, -0.5, 0.5);
      };
      double dk = std::abs(refine(k1) - refine(k2));
      dk = std::min(dk, static_cast<double>(n) - dk);
      out.beat_mhz = dk / (static_cast<double>(n) * dtau) * 1e3;
    }
  }

  // Envelope of |g1|: with a beat present, sample at the beat antinodes
  // tau_k = k / f_beat (where the node factor |cos| is 1); otherwise fall
  // back to the local maxima. Node regions are excluded either way.
  auto mag_at = [&](double x) {
    const auto it = std::upper_bound(out.tau.begin(), out.tau.end(), x);
    if (it == out.tau.begin()) return mag.front();
    if (it == out.tau.end()) return mag.back();
    const size_t i = static_cast<size_t>(it - out.tau.begin());
    const double f = (x - out.tau[i - 1]) / (out.tau[i] - out.tau[i - 1]);
    return (1.0 - f) * mag[i - 1] + f * mag[i];
  };
  std::vector<double> px, py;
  if (out.beat_mhz > 0.0) {
    const double period = 1e3 / out.beat_mhz;
    for (double x = 0.0; x <= out.tau.back() + 1e-9; x += period) {
      const double m = mag_at(std::min(x, out.tau.back()));
      if (m > 1e-6) {
        px.push_back(x);
        py.push_back(std::log(m));
      }
    }
  }
  if (px.size() < 3) {
    px.clear();
    py.clear();
    for (size_t k = 0; k < mag.size(); ++k) {
      const bool is_max = (k == 0) || (k + 1 < mag.size() && mag[k] >= mag[k - 1] &&
                                       mag[k] >= mag[k + 1]);
      if (is_max && mag[k] > 1e-6) {
        px.push_back(out.tau[k]);
        py.push_back(std::log(mag[k]));
      }
    }
  }
  if (px.size() < 3) {
    // No beat and no interior maxima: the envelope is |g1| itself.
    px.clear();
    py.clear();
    for (size_t k = 0; k < mag.size(); ++k) {
      if (mag[k] > 1e-6) {
        px.push_back(out.tau[k]);
        py.push_back(std::log(mag[k]));
      }
    }
  }
  if (px.size() < 2) throw std::invalid_argument("g1_summary: not enough points for envelope fit");

  // WLS in log space with weights m^2: uniform noise on |g1| maps to
  // variance 1/m^2 on log|g1|.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < px.size(); ++i) {
    const double wi = std::exp(2.0 * py[i]);
    sw += wi;
    sx += wi * px[i];
    sy += wi * py[i];
    sxx += wi * px[i] * px[i];
    sxy += wi * px[i] * py[i];
  }
  const double delta = sw * sxx - sx * sx;
  const double slope = (sw * sxy - sx * sy) / delta;
  const double intercept = (sxx * sy - sx * sxy) / delta;
  if (!(slope < 0.0)) throw std::invalid_argument("g1_summary: envelope does not decay");
  out.t2 = -1.0 / slope;
  double rss = 0.0;
  for (size_t i = 0; i < px.size(); ++i) {
    const double r = py[i] - (intercept + slope * px[i]);
    rss += std::exp(2.0 * py[i]) * r * r;
  }
  const double nn = static_cast<double>(px.size());
  const double var = (rss / sw) * nn / std::max(1.0, nn - 2.0);
  const double slope_err = std::sqrt(var * sw / delta);
  out.t2_err = slope_err / (slope * slope);

  out.envelope.resize(out.tau.size());
  for (size_t k = 0; k < out.tau.size(); ++k)
    out.envelope[k] = std::exp(intercept + slope * out.tau[k]);
  return out;
}

}  // namespace rps
