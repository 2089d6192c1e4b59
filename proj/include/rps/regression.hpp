#pragma once

#include <vector>

#include "rps/master.hpp"

namespace rps {

// Two-time correlation G(t, t+tau) = <E+(t) E(t+tau)> of the detected-channel
// lowering operator E = |S(+1/2)><P(-1/2)|. The diagonal G(t,t) equals the
// detected emission rate divided by gamma_detected.
struct TwoTimeCorrelation {
  std::vector<double> t_grid;    // ns, absolute within the period
  std::vector<double> tau_grid;  // ns, >= 0, increasing
  Eigen::MatrixXcd values;       // t_grid.size() x tau_grid.size()
  std::vector<double> intensity;  // n(t) = G(t,t)

  // n at arbitrary time by linear interpolation, zero outside the grid.
  double intensity_at(double t) const;
};

// Quantum regression theorem: G(t, t+tau) = Tr[E+ Phi_{t->t+tau}(E rho(t))],
// with Phi the master-equation propagator. rho_start is the state at t = 0
// of the period (normally the cyclic fixed point).
TwoTimeCorrelation two_time_correlation(const LindbladSystem& sys, const Matrix8c& rho_start,
                                        const std::vector<double>& t_grid,
                                        const std::vector<double>& tau_grid,
                                        const IntegratorOptions& opt = {});

}  // namespace rps
