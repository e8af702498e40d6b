#pragma once

#include <cassert>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace nav3d::nn {

// Dense row-major tensor. Scalar is float for training, double for gradient
// checks.
template <typename S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> dims) : shape(std::move(dims)) {
    v.assign(count(shape), S(0));
  }

  static std::size_t count(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }

  std::size_t size() const { return v.size(); }
  S* data() { return v.data(); }
  const S* data() const { return v.data(); }
  S& operator[](std::size_t i) { return v[i]; }
  const S& operator[](std::size_t i) const { return v[i]; }

  void fill(S value) { std::fill(v.begin(), v.end(), value); }

  template <typename T>
  Tensor<T> cast() const {
    Tensor<T> out;
    out.shape = shape;
    out.v.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<T>(v[i]);
    return out;
  }
};

// Ordered by name so that iteration (serialization, Adam updates, gradient
// flattening) is deterministic.
template <typename S>
using Params = std::map<std::string, Tensor<S>>;

template <typename S>
std::size_t total_count(const Params<S>& params) {
  std::size_t n = 0;
  for (const auto& [name, t] : params) n += t.size();
  return n;
}

}  // namespace nav3d::nn
