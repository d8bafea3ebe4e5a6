#include "gait/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace gait {
namespace {

double evaluate(const LossBuilder& loss, const std::vector<Tensor<double>>& inputs) {
  Graph<double> graph(false);
  std::vector<Var<double>> leaves;
  leaves.reserve(inputs.size());
  for (const auto& t : inputs) leaves.push_back(graph.constant(t));
  const Var<double> out = loss(graph, leaves);
  if (out.value().size() != 1) throw ShapeError("grad_check: loss must be a scalar");
  return out.value()[0];
}

void compare(GradCheckEntry& entry, double analytic, double numeric, const GradCheckOptions& options) {
  const double abs_err = std::abs(analytic - numeric);
  const double denom = std::max({std::abs(analytic), std::abs(numeric), options.magnitude_floor});
  entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
  entry.max_rel_error = std::max(entry.max_rel_error, abs_err / denom);
  ++entry.elements;
}

}  // namespace

GradCheckReport grad_check(const LossBuilder& loss, std::vector<Tensor<double>> inputs,
                           ParamStore<double>* params, const GradCheckOptions& options) {
  GradCheckReport report;

  // Analytic pass.
  if (params) params->zero_grad();
  std::vector<Tensor<double>> input_grads(inputs.size());
  {
    Graph<double> graph(true);
    std::vector<Var<double>> leaves;
    for (const auto& t : inputs) leaves.push_back(options.check_inputs ? graph.leaf(t) : graph.constant(t));
    const Var<double> out = loss(graph, leaves);
    if (out.value().size() != 1) throw ShapeError("grad_check: loss must be a scalar");
    if (!std::isfinite(out.value()[0])) {
      report.finite = false;
      report.message = "non-finite loss at the unperturbed point";
      return report;
    }
    graph.backward(out);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      input_grads[i] = leaves[i].grad().empty() ? Tensor<double>(inputs[i].shape()) : leaves[i].grad();
    }
  }

  auto numeric = [&](double& slot) -> double {
    const double saved = slot;
    slot = saved + options.epsilon;
    const double plus = evaluate(loss, inputs);
    slot = saved - options.epsilon;
    const double minus = evaluate(loss, inputs);
    slot = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) return std::nan("");
    return (plus - minus) / (2.0 * options.epsilon);
  };

  auto fail_nonfinite = [&](const std::string& where) {
    report.finite = false;
    report.message = "non-finite loss while perturbing " + where;
  };

  if (options.check_inputs) {
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      GradCheckEntry entry;
      entry.name = "input[" + std::to_string(i) + "]";
      for (std::size_t e = 0; e < inputs[i].size(); ++e) {
        const double n = numeric(inputs[i][e]);
        if (std::isnan(n)) {
          fail_nonfinite(entry.name);
          return report;
        }
        compare(entry, input_grads[i][e], n, options);
      }
      report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
      report.entries.push_back(std::move(entry));
    }
  }

  if (params && options.check_params) {
    for (auto& [name, p] : params->entries()) {
      if (!p.trainable) continue;
      GradCheckEntry entry;
      entry.name = name;
      const Tensor<double> analytic = p.grad;
      for (std::size_t e = 0; e < p.value.size(); ++e) {
        const double n = numeric(p.value[e]);
        if (std::isnan(n)) {
          fail_nonfinite(name);
          return report;
        }
        compare(entry, analytic[e], n, options);
      }
      report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
      report.entries.push_back(std::move(entry));
    }
  }
  return report;
}

}  // namespace gait
