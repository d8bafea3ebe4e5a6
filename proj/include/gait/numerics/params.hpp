#pragma once

#include <functional>
#include <map>
#include <string>

#include "gait/numerics/tensor.hpp"

namespace gait {

/// A named model tensor. Non-trainable entries are buffers (running
/// statistics) that are saved with the model but never receive gradients.
template <typename Real>
struct Parameter {
  Tensor<Real> value;
  Tensor<Real> grad;
  bool trainable = true;
};

/// Owns every parameter of a model under a hierarchical dotted name.
/// Iteration order is lexicographic by name, which fixes checkpoint layout
/// and optimizer update order.
template <typename Real>
class ParamStore {
 public:
  using Map = std::map<std::string, Parameter<Real>>;

  /// Registers a new entry; a duplicate name is a configuration error.
  Parameter<Real>& add(const std::string& name, Tensor<Real> init, bool trainable = true) {
    auto [it, inserted] = params_.try_emplace(name);
    if (!inserted) throw ConfigError("duplicate parameter name: " + name);
    it->second.value = std::move(init);
    it->second.trainable = trainable;
    if (trainable) it->second.grad = Tensor<Real>(it->second.value.shape());
    return it->second;
  }

  bool contains(const std::string& name) const { return params_.contains(name); }

  Parameter<Real>& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }
  const Parameter<Real>& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter: " + name);
    return it->second;
  }

  void zero_grad() {
    for (auto& [name, p] : params_) {
      if (p.trainable) p.grad.fill(Real(0));
    }
  }

  Map& entries() { return params_; }
  const Map& entries() const { return params_; }
  std::size_t size() const { return params_.size(); }

  std::size_t trainable_elements() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) {
      if (p.trainable) n += p.value.size();
    }
    return n;
  }

  /// Copy with values converted to another precision (gradients zeroed).
  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& [name, p] : params_) out.add(name, p.value.template cast<Other>(), p.trainable);
    return out;
  }

 private:
  Map params_;
};

}  // namespace gait
