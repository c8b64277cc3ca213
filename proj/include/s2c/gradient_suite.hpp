#ifndef S2C_GRADIENT_SUITE_HPP
#define S2C_GRADIENT_SUITE_HPP

#include "s2c/gradcheck.hpp"

#include <string>
#include <vector>

namespace s2c {

/// Names of every check in the finite-difference suite, in run order.
std::vector<std::string> gradient_suite_names();

/// Runs every differentiable operation through grad_check at 64-bit on random
/// inputs in [-1, 1]. The check named `corrupt` (if any) has its analytic
/// gradient negated, as a negative control.
std::vector<GradCheckReport> run_gradient_suite(std::uint64_t seed = 42, const std::string& corrupt = "",
                                                double tolerance = 1e-4);

} // namespace s2c

#endif
