#pragma once

#include <span>
#include <vector>

#include "toda/error.hpp"

namespace toda {

/// Uniform grid t_i = t0 + i h, i = 0..n.
struct TGrid {
  double t0 = 0.0;
  double h = 0.0;
  int n = 0;

  static TGrid uniform(double t0, double length, int n) {
    require(n >= 2 && length > 0.0, "t-grid needs at least 2 intervals and positive length");
    return {t0, length / n, n};
  }
  double t(int i) const { return t0 + i * h; }
  double length() const { return n * h; }
  int nodes() const { return n + 1; }
};

/// Values indexed by (t-node, cross-section sample or mode), t-major.
struct ScalarField {
  TGrid grid;
  int dof = 0;
  std::vector<double> data;

  ScalarField() = default;
  ScalarField(const TGrid& g, int d, double fill = 0.0)
      : grid(g), dof(d), data(static_cast<std::size_t>(g.nodes()) * d, fill) {}

  std::span<double> slice(int i) { return {data.data() + static_cast<std::size_t>(i) * dof, static_cast<std::size_t>(dof)}; }
  std::span<const double> slice(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * dof, static_cast<std::size_t>(dof)};
  }
  double& at(int i, int k) { return data[static_cast<std::size_t>(i) * dof + k]; }
  double at(int i, int k) const { return data[static_cast<std::size_t>(i) * dof + k]; }
};

}  // namespace toda
