#include "rps/jumps.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <unsupported/Eigen/MatrixFunctions>

namespace rps {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Substep {
  double t0;
  double dt;
  const Matrix8c* u;     // propagator exp(-i Heff dt)
  const Matrix8c* heff;  // generator of this substep
};

struct StepTable {
  std::vector<Matrix8c> mats;  // owned storage, stable addresses
  std::vector<Substep> steps;
};

StepTable build_step_table(const LindbladSystem& sys, const TrajectoryOptions& opt) {
  const auto& env = sys.envelopes();
  StepTable tab;
  // Two passes: count matrices first so pointers stay valid.
  struct Seg {
    double t0, t1;
    bool constant;
  };
  std::vector<Seg> segs;
  const auto& bp = env.breakpoints;
  for (size_t i = 0; i + 1 < bp.size(); ++i) {
    const double a = bp[i], b = bp[i + 1];
    if (b - a < 1e-12) continue;
    segs.push_back({a, b, env.blue.constant_on(a, b) && env.ir.constant_on(a, b)});
  }

  auto seg_target = [&](const Seg& s) {
    if (!s.constant) return opt.step_ramp;
    const double tm = 0.5 * (s.t0 + s.t1);
    // Drive-off stretches (the idle tail of long periods) are norm-preserving
    // except for residual P decay, so long exact steps are safe.
    if (env.blue.value(tm) == 0.0 && env.ir.value(tm) == 0.0) return opt.step_idle;
    return opt.step_coarse;
  };

  size_t nmats = 0;
  for (const auto& s : segs) {
    const double len = s.t1 - s.t0;
    const double target = seg_target(s);
    const int n = std::max(1, static_cast<int>(std::ceil(len / target)));
    nmats += s.constant ? 2 : static_cast<size_t>(2 * n);
  }
  tab.mats.reserve(nmats);

  const Complex mi(0.0, -1.0);
  for (const auto& s : segs) {
    const double len = s.t1 - s.t0;
    const double target = seg_target(s);
    const int n = std::max(1, static_cast<int>(std::ceil(len / target)));
    const double dt = len / n;
    if (s.constant) {
      const double tm = 0.5 * (s.t0 + s.t1);
      tab.mats.push_back(sys.effective_hamiltonian(
          sys.hamiltonian_at_scales(env.blue.value(tm), env.ir.value(tm))));
      const Matrix8c* heff = &tab.mats.back();
      tab.mats.push_back((mi * dt * (*heff)).exp());
      const Matrix8c* u = &tab.mats.back();
      for (int k = 0; k < n; ++k) tab.steps.push_back({s.t0 + k * dt, dt, u, heff});
    } else {
      for (int k = 0; k < n; ++k) {
        const double tm = s.t0 + (k + 0.5) * dt;  // midpoint drive over the substep
        tab.mats.push_back(sys.effective_hamiltonian(
            sys.hamiltonian_at_scales(env.blue.value(tm), env.ir.value(tm))));
        const Matrix8c* heff = &tab.mats.back();
        tab.mats.push_back((mi * dt * (*heff)).exp());
        tab.steps.push_back({s.t0 + k * dt, dt, &tab.mats.back(), heff});
      }
    }
  }
  return tab;
}

// RK4 on dpsi/dt = -i Heff psi over span, micro steps <= 0.5 ns.
void rk4_span(const Matrix8c& heff, Vector8c& psi, double span) {
  if (span <= 0.0) return;
  const int n = std::max(1, static_cast<int>(std::ceil(span / 0.5)));
  const double h = span / n;
  const Complex mi(0.0, -1.0);
  Vector8c k1, k2, k3, k4;
  for (int i = 0; i < n; ++i) {
    k1 = mi * (heff * psi);
    k2 = mi * (heff * (psi + 0.5 * h * k1));
    k3 = mi * (heff * (psi + 0.5 * h * k2));
    k4 = mi * (heff * (psi + h * k3));
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

struct InitialSampler {
  std::vector<double> cdf;
  std::vector<Vector8c> states;

  explicit InitialSampler(const Matrix8c& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix8c> es(rho);
    double total = 0.0;
    std::vector<double> p(kNumLevels);
    for (int i = 0; i < kNumLevels; ++i) {
      p[static_cast<size_t>(i)] = std::max(0.0, es.eigenvalues()(i));
      total += p[static_cast<size_t>(i)];
    }
    double acc = 0.0;
    for (int i = 0; i < kNumLevels; ++i) {
      acc += p[static_cast<size_t>(i)] / total;
      cdf.push_back(acc);
      states.push_back(es.eigenvectors().col(i));
    }
    cdf.back() = 1.0;
  }

  const Vector8c& draw(double u) const {
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    return states[static_cast<size_t>(it - cdf.begin())];
  }
};

struct SequenceRunner {
  const LindbladSystem& sys;
  const StepTable& tab;
  const InitialSampler& init;
  const TrajectoryOptions& opt;
  const PopulationAccumulator* sample_grid;  // for the times only

  void run(uint32_t seq_index, uint64_t seed, std::vector<EmissionEvent>& out,
           std::vector<double>* acc_s, std::vector<double>* acc_p,
           std::vector<double>* acc_d) const {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(seq_index)));
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Vector8c psi = init.draw(uni(rng));
    double threshold = uni(rng);
    size_t sample_idx = 0;
    auto maybe_sample = [&](double t) {
      if (!sample_grid) return;
      while (sample_idx < sample_grid->times.size() &&
             sample_grid->times[sample_idx] <= t + 1e-9) {
        const double n2 = psi.squaredNorm();
        double s = 0, p = 0, d = 0;
        for (int i = 0; i < 2; ++i) s += std::norm(psi(i));
        for (int i = 2; i < 4; ++i) p += std::norm(psi(i));
        for (int i = 4; i < 8; ++i) d += std::norm(psi(i));
        (*acc_s)[sample_idx] += s / n2;
        (*acc_p)[sample_idx] += p / n2;
        (*acc_d)[sample_idx] += d / n2;
        ++sample_idx;
      }
    };

    auto collapse = [&](double t_jump) {
      const auto& jumps = sys.jumps();
      std::vector<double> w(jumps.size());
      double tot = 0.0;
      for (size_t k = 0; k < jumps.size(); ++k) {
        w[k] = jumps[k].rate * std::norm(psi(jumps[k].upper));
        tot += w[k];
      }
      size_t pick = jumps.size() - 1;
      double u = uni(rng) * tot;
      for (size_t k = 0; k < jumps.size(); ++k) {
        if (u < w[k]) {
          pick = k;
          break;
        }
        u -= w[k];
      }
      const auto& j = jumps[pick];
      if (opt.record_all || j.detected)
        out.push_back({seq_index, t_jump, static_cast<int>(pick), j.detected});
      psi.setZero();
      psi(j.lower) = 1.0;
      threshold = uni(rng);
    };

    maybe_sample(0.0);
    for (const auto& st : tab.steps) {
      const double n2_old = psi.squaredNorm();
      Vector8c psi_new = (*st.u) * psi;
      double n2_new = psi_new.squaredNorm();
      if (n2_new > threshold) {
        psi = psi_new;
      } else {
        // One or more jumps inside this substep. March in <= 1 ns chunks; the
        // norm decay is close to a single exponential over a chunk, so the
        // log interpolation of the crossing is accurate there. (Interpolating
        // across the whole substep is not: with a mixed state the norm is
        // constant-plus-exponential and the estimate lands way too late.)
        double t_local = st.t0;
        double span_left = st.dt;
        while (span_left > 1e-12) {
          const double h = std::min(1.0, span_left);
          const double n2a = psi.squaredNorm();
          Vector8c trial = psi;
          rk4_span(*st.heff, trial, h);
          const double n2b = trial.squaredNorm();
          if (n2b > threshold) {
            psi = trial;
            t_local += h;
            span_left -= h;
            continue;
          }
          double frac = 0.5;
          if (n2a > 0.0 && n2b > 0.0 && n2a != n2b)
            frac = std::log(n2a / threshold) / std::log(n2a / n2b);
          frac = std::clamp(frac, 0.0, 1.0);
          const double dt_jump = frac * h;
          rk4_span(*st.heff, psi, dt_jump);
          t_local += dt_jump;
          span_left -= dt_jump;
          collapse(t_local);
        }
      }
      maybe_sample(st.t0 + st.dt);
    }
  }
};

}  // namespace

std::vector<double> trajectory_step_times(const LindbladSystem& sys,
                                          const TrajectoryOptions& opt) {
  const StepTable tab = build_step_table(sys, opt);
  std::vector<double> t;
  t.push_back(0.0);
  for (const auto& s : tab.steps) t.push_back(s.t0 + s.dt);
  return t;
}

std::vector<EmissionEvent> quantum_jump_trajectories(const LindbladSystem& sys,
                                                     const Matrix8c& rho_start,
                                                     uint64_t n_sequences, uint64_t seed,
                                                     const TrajectoryOptions& opt,
                                                     PopulationAccumulator* accum) {
  if (n_sequences < 1) throw std::invalid_argument("quantum_jump_trajectories: n_sequences < 1");
  const StepTable tab = build_step_table(sys, opt);
  const InitialSampler init(rho_start);

  if (accum) {
    accum->sum_S.assign(accum->times.size(), 0.0);
    accum->sum_P.assign(accum->times.size(), 0.0);
    accum->sum_D.assign(accum->times.size(), 0.0);
    accum->n_sequences = n_sequences;
  }

  int nthreads = std::max(1, opt.max_threads);
  nthreads = static_cast<int>(std::min<uint64_t>(static_cast<uint64_t>(nthreads), n_sequences));

  std::vector<std::vector<EmissionEvent>> events(static_cast<size_t>(nthreads));
  std::vector<std::vector<double>> acc_s(static_cast<size_t>(nthreads)),
      acc_p(static_cast<size_t>(nthreads)), acc_d(static_cast<size_t>(nthreads));

  auto worker = [&](int tid) {
    const size_t ti = static_cast<size_t>(tid);
    if (accum) {
      acc_s[ti].assign(accum->times.size(), 0.0);
      acc_p[ti].assign(accum->times.size(), 0.0);
      acc_d[ti].assign(accum->times.size(), 0.0);
    }
    SequenceRunner runner{sys, tab, init, opt, accum};
    for (uint64_t i = static_cast<uint64_t>(tid); i < n_sequences;
         i += static_cast<uint64_t>(nthreads)) {
      runner.run(static_cast<uint32_t>(i), seed, events[ti], accum ? &acc_s[ti] : nullptr,
                 accum ? &acc_p[ti] : nullptr, accum ? &acc_d[ti] : nullptr);
    }
  };

  if (nthreads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }

  std::vector<EmissionEvent> all;
  size_t total = 0;
  for (const auto& v : events) total += v.size();
  all.reserve(total);
  for (auto& v : events) all.insert(all.end(), v.begin(), v.end());
  std::sort(all.begin(), all.end(), [](const EmissionEvent& a, const EmissionEvent& b) {
    if (a.sequence_index != b.sequence_index) return a.sequence_index < b.sequence_index;
    return a.time < b.time;
  });

  if (accum) {
    for (int t = 0; t < nthreads; ++t) {
      const size_t ti = static_cast<size_t>(t);
      for (size_t k = 0; k < accum->times.size(); ++k) {
        accum->sum_S[k] += acc_s[ti][k];
        accum->sum_P[k] += acc_p[ti][k];
        accum->sum_D[k] += acc_d[ti][k];
      }
    }
  }
  return all;
}

}  // namespace rps
