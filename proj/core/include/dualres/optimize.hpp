#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace dualres {

// Derivative-free minimization over a box lo <= x <= hi (bounds may be
// infinite; lo == hi fixes a coordinate). Open box faces are reached only
// in the limit, so feasible iterates never touch a bound. Internally the
// box is mapped onto R^n (logistic for two-sided, log for one-sided
// bounds) and searched with a restarted Nelder-Mead simplex.
struct BoxOptions {
  std::size_t max_evals = 500;
  double ftol = 1e-10;      // stop when simplex f-spread <= ftol * (|f_best| + ftol)
  double xtol = 1e-10;      // ... and when the simplex diameter in R^n is below xtol
  double initial_step = 0.5;  // simplex edge in the unbounded coordinates
  std::size_t restarts = 2;
};

struct BoxResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

BoxResult minimize_box(const Objective& f, std::vector<double> x0, const std::vector<double>& lo,
                       const std::vector<double>& hi, const BoxOptions& opts = {});

}  // namespace dualres
