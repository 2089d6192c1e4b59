#include "rps/regression.hpp"

#include <algorithm>
#include <cmath>

namespace rps {

double TwoTimeCorrelation::intensity_at(double t) const {
  if (t_grid.empty()) return 0.0;
  if (t < t_grid.front() || t > t_grid.back()) return 0.0;
  const auto it = std::upper_bound(t_grid.begin(), t_grid.end(), t);
  if (it == t_grid.begin()) return intensity.front();
  if (it == t_grid.end()) return intensity.back();
  const size_t i = static_cast<size_t>(it - t_grid.begin());
  const double t0 = t_grid[i - 1], t1 = t_grid[i];
  const double x = (t1 > t0) ? (t - t0) / (t1 - t0) : 0.0;
  return (1.0 - x) * intensity[i - 1] + x * intensity[i];
}

TwoTimeCorrelation two_time_correlation(const LindbladSystem& sys, const Matrix8c& rho_start,
                                        const std::vector<double>& t_grid,
                                        const std::vector<double>& tau_grid,
                                        const IntegratorOptions& opt) {
  if (t_grid.empty() || tau_grid.empty())
    throw std::invalid_argument("two_time_correlation: empty grid");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) ||
      !std::is_sorted(tau_grid.begin(), tau_grid.end()))
    throw std::invalid_argument("two_time_correlation: grids must be increasing");

  TwoTimeCorrelation out;
  out.t_grid = t_grid;
  out.tau_grid = tau_grid;
  out.values.resize(static_cast<Eigen::Index>(t_grid.size()),
                    static_cast<Eigen::Index>(tau_grid.size()));
  out.intensity.resize(t_grid.size());

  Matrix8c rho = rho_start;
  double t_cur = 0.0;
  for (size_t it = 0; it < t_grid.size(); ++it) {
    const double t = t_grid[it];
    std::vector<double> one{t};
    propagate_operator(
        sys, rho, t_cur, one, [](size_t, const Matrix8c&) {}, opt);
    t_cur = t;
    out.intensity[it] = std::real(rho(kDetectedUpper, kDetectedUpper));

    // M(0) = E rho(t): only the row of the lower level survives.
    Matrix8c m = Matrix8c::Zero();
    m.row(kDetectedLower) = rho.row(kDetectedUpper);

    std::vector<double> abs_times(tau_grid.size());
    for (size_t k = 0; k < tau_grid.size(); ++k) abs_times[k] = t + tau_grid[k];
    propagate_operator(
        sys, m, t,  abs_times,
        [&](size_t k, const Matrix8c& mk) {
          out.values(static_cast<Eigen::Index>(it), static_cast<Eigen::Index>(k)) =
              mk(kDetectedLower, kDetectedUpper);
        },
        opt);
  }
  return out;
}

}  // namespace rps
