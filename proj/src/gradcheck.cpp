#include "s2c/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace s2c {

namespace {

double scalar_value(const Var<double>& out) {
    if (out.value().size() != 1)
        throw UsageError("grad_check: computation must return a scalar, got " + shape_of(out.value()));
    return out.value()(0, 0);
}

double relative_error(const GradCheckOptions& opt, double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), opt.floor});
    return std::abs(analytic - numeric) / denom;
}

// Central difference at `slot`; on a mismatch the step is retried ten times
// smaller, since a kink (ReLU, clamp) lying inside the first stencil corrupts
// the numeric side only. A wrong analytic gradient fails at both steps.
template <typename Eval>
void check_entry(GradCheckReport& report, const GradCheckOptions& opt, std::size_t input, Index entry,
                 double analytic, double& slot, Eval&& evaluate) {
    if (opt.corrupt) analytic = -analytic;
    const double x0 = slot;
    auto central = [&](double h) {
        slot = x0 + h;
        const double fp = evaluate();
        slot = x0 - h;
        const double fm = evaluate();
        slot = x0;
        return (fp - fm) / (2.0 * h);
    };
    double err = relative_error(opt, analytic, central(opt.step));
    if (!(err < opt.tolerance) && opt.refine_on_failure)
        err = std::min(err, relative_error(opt, analytic, central(0.1 * opt.step)));
    ++report.entries_checked;
    if (!(err <= report.max_rel_error)) {
        report.max_rel_error = std::isnan(err) ? INFINITY : err;
        report.worst_input = input;
        report.worst_entry = entry;
    }
}

} // namespace

GradCheckReport grad_check(const ScalarFunction& fn, const std::vector<Matrix<double>>& inputs,
                           const GradCheckOptions& options) {
    GradCheckReport report;
    std::vector<Matrix<double>> analytic;
    {
        Tape<double> tape;
        std::vector<Var<double>> vars;
        for (const auto& m : inputs) vars.push_back(tape.variable(m));
        auto out = fn(tape, vars);
        scalar_value(out);
        tape.backward(out);
        for (const auto& v : vars) analytic.push_back(tape.gradient(v));
    }
    auto evaluate = [&](const std::vector<Matrix<double>>& xs) {
        Tape<double> tape(false);
        std::vector<Var<double>> vars;
        for (const auto& m : xs) vars.push_back(tape.constant(m));
        return scalar_value(fn(tape, vars));
    };
    std::vector<Matrix<double>> work = inputs;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        for (Index e = 0; e < inputs[k].size(); e += std::max<Index>(options.stride, 1))
            check_entry(report, options, k, e, analytic[k].data()[e], work[k].data()[e], [&] { return evaluate(work); });
    }
    report.passed = report.max_rel_error < options.tolerance;
    return report;
}

GradCheckReport grad_check_params(const std::function<Var<double>(Tape<double>&)>& fn, ParameterSet<double>& params,
                                  const GradCheckOptions& options) {
    GradCheckReport report;
    params.zero_grad();
    {
        Tape<double> tape;
        auto out = fn(tape);
        scalar_value(out);
        tape.backward(out);
    }
    std::vector<Matrix<double>> analytic;
    for (auto& p : params) analytic.push_back(p.grad);
    auto evaluate = [&]() {
        Tape<double> tape(false);
        return scalar_value(fn(tape));
    };
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& value = params[k].value;
        for (Index e = 0; e < value.size(); e += std::max<Index>(options.stride, 1))
            check_entry(report, options, k, e, analytic[k].data()[e], value.data()[e], evaluate);
    }
    params.zero_grad();
    report.passed = report.max_rel_error < options.tolerance;
    return report;
}

} // namespace s2c
