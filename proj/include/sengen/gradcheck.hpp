#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sengen/params.hpp"

namespace sengen {

struct GradCheckResult {
  double max_rel_err = 0;
  std::string worst_entry;  // "param[i]"
};

// Central finite differences (default h=1e-5) against the gradients already
// accumulated in the stores. Relative error denominator is floored at 1e-8.
GradCheckResult finite_difference_check(std::vector<ParamStore*> stores,
                                        const std::function<double()>& eval,
                                        double h = 1e-5);

struct SuiteCheck {
  std::string name;
  double max_rel_err = 0;
  double tolerance = 0;
  bool passed() const { return max_rel_err < tolerance; }
};

// Per-op checks at 1e-6 plus full-ELBO checks (both decoder cells) at 1e-4,
// on randomized toy instances.
std::vector<SuiteCheck> run_gradient_suite(unsigned long long seed);

}  // namespace sengen
