#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "gal/common.hpp"

namespace gal {

/// Dense row-major matrix of 64-bit floats, optionally bound to a node on
/// the active tape. `node < 0` means the tensor is detached (plain values).
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;
  int node = -1;
  std::uint32_t tape_id = 0;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> v);

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor full(std::size_t rows, std::size_t cols, double value);
  static Tensor scalar(double value);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);
  static Tensor row(std::vector<double> v);
  static Tensor column(std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool detached() const { return node < 0; }

  std::string shape_str() const;
};

}  // namespace gal
