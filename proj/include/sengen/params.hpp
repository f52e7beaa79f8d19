#pragma once

#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sengen/tensor.hpp"

namespace sengen {

// Named parameter tensor with a matching gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Ordered collection of parameters. Insertion order is the serialization
// order used by checkpoints, so it must stay fixed per model.
class ParamStore {
 public:
  int add(const std::string& name, Shape shape) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter " + name);
    index_[name] = (int)params_.size();
    params_.push_back({name, Tensor(shape), Tensor(shape)});
    return (int)params_.size() - 1;
  }

  Param& operator[](int i) { return params_[i]; }
  const Param& operator[](int i) const { return params_[i]; }
  Param& at(const std::string& name) { return params_[index_.at(name)]; }
  const Param& at(const std::string& name) const { return params_[index_.at(name)]; }
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  int size() const { return (int)params_.size(); }

  void zero_grads() {
    for (auto& p : params_) p.grad.fill(0.0);
  }

  double grad_sq_norm() const {
    double acc = 0;
    for (const auto& p : params_)
      for (double g : p.grad.data) acc += g * g;
    return acc;
  }

  void scale_grads(double c) {
    for (auto& p : params_)
      for (double& g : p.grad.data) g *= c;
  }

  // Uniform [-range, range] for matrices, zeros for vectors (biases).
  void init_uniform(std::mt19937_64& rng, double range) {
    std::uniform_real_distribution<double> u(-range, range);
    for (auto& p : params_) {
      if (p.value.shape.size() >= 2)
        for (double& v : p.value.data) v = u(rng);
      else
        p.value.fill(0.0);
    }
  }

 private:
  std::vector<Param> params_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace sengen
