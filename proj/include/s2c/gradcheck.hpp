#ifndef S2C_GRADCHECK_HPP
#define S2C_GRADCHECK_HPP

#include "s2c/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace s2c {

struct GradCheckOptions {
    double tolerance = 1e-4;
    double step = 1e-6;
    /// Denominator floor for the relative error, so entries whose true
    /// gradient is ~0 are compared absolutely.
    double floor = 1e-3;
    /// Check every `stride`-th entry of each input (1 = all).
    Index stride = 1;
    /// Negate the analytic gradient before comparing (negative control).
    bool corrupt = false;
    /// Retry a mismatching entry at step / 10 before counting it.
    bool refine_on_failure = true;
};

struct GradCheckReport {
    std::string name;
    double max_rel_error = 0.0;
    bool passed = false;
    Index entries_checked = 0;
    /// Location of the worst entry: input (or parameter) index and flat entry index.
    std::size_t worst_input = 0;
    Index worst_entry = 0;
};

/// Computation over leaf inputs returning a 1 x 1 node.
using ScalarFunction = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

/// Compares analytic gradients against central differences for every input.
GradCheckReport grad_check(const ScalarFunction& fn, const std::vector<Matrix<double>>& inputs,
                           const GradCheckOptions& options = {});

/// Same comparison over parameters bound inside `fn` via tape.param().
GradCheckReport grad_check_params(const std::function<Var<double>(Tape<double>&)>& fn, ParameterSet<double>& params,
                                  const GradCheckOptions& options = {});

} // namespace s2c

#endif
