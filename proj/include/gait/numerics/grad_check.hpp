#pragma once

// Central-difference gradient verification in double precision.

#include <functional>
#include <string>
#include <vector>

#include "gait/numerics/autodiff.hpp"

namespace gait {

struct GradCheckEntry {
  std::string name;  // "input[i]" or a parameter name
  std::size_t elements = 0;
  double max_abs_error = 0;
  double max_rel_error = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0;
  bool finite = true;
  std::string message;  // set when the check aborted

  bool passed(double tolerance) const { return finite && max_rel_error < tolerance; }
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Denominator floor for the relative error |a - n| / max(|a|, |n|, floor),
  // so gradients that are zero up to roundoff are compared absolutely.
  // Central differences on losses of size ~1e3 carry ~1e-8 of cancellation
  // noise at epsilon 1e-5, which this floor keeps below 1e-4 relative.
  double magnitude_floor = 1e-5;
  bool check_inputs = true;
  bool check_params = true;
};

/// Builds a scalar loss from graph leaves for the given inputs.
using LossBuilder = std::function<Var<double>(Graph<double>&, const std::vector<Var<double>>&)>;

/// Compares the analytic gradient of `loss` with central differences for
/// every input element and every trainable parameter element in `params`
/// (which may be null). A non-finite loss aborts the check and is reported.
GradCheckReport grad_check(const LossBuilder& loss, std::vector<Tensor<double>> inputs,
                           ParamStore<double>* params, const GradCheckOptions& options = {});

}  // namespace gait
