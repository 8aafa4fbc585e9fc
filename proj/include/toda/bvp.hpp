#pragma once

#include <functional>
#include <string>
#include <vector>

#include "toda/cross_section.hpp"
#include "toda/field.hpp"
#include "toda/model_families.hpp"

namespace toda {

enum class BvpId { BVP1 = 1, BVP2 = 2, BVP3 = 3, BVP4 = 4 };
std::string to_string(BvpId id);
BvpId bvp_from_string(const std::string& s);

/// Psi, B, K of the canonical equation
///   Delta u + Psi (e^u)_tt + B (e^u)_t + 2K (e^u - 1) = 0.
struct CoefficientProfile {
  std::string name;
  std::function<double(double)> psi;
  std::function<double(double)> b;
  std::function<double(double)> k;

  struct Samples {
    std::vector<double> psi, b, k;
  };
  /// Samples on the grid; throws unless Psi > 0 and K <= 0 at every node.
  Samples sample(const TGrid& grid) const;
};

struct BvpSpec {
  BvpId id = BvpId::BVP1;
  /// Boundary data on the cross-section (grid values or mode coefficients).
  std::vector<double> phi;
  /// Prescribed only for BVP2.
  double a = 1.0;
};

/// xi as a function of the canonical variable t, with derivatives.
struct VariableMap {
  BvpId id = BvpId::BVP1;
  double a = 0.0;
  double b = 1.0;
  double t_start = 0.0;

  double xi(double t) const;
  double dxi(double t) const;
  double d2xi(double t) const;
  double d3xi(double t) const;
  double t_of_xi(double xi) const;
};

struct NormalizedBoundary {
  std::vector<double> phi;
  double phibar = 0.0;
};

NormalizedBoundary normalize_boundary(const CrossSection& cs, std::span<const double> phi);

/// Boundary slice log(e^{s phi} / mean e^{s phi}).
std::vector<double> continuation_slice(const CrossSection& cs, std::span<const double> phi_n, double s);

struct CanonicalProblem {
  BvpId id = BvpId::BVP1;
  CoefficientProfile profile;
  VariableMap map;
  std::vector<double> phi_normalized;
  double phibar = 0.0;
  double a = 0.0;
  double b = 1.0;
  ModelFamily model;
  bool type_ii = false;

  /// v_mod and its xi-derivative.
  double vmod(double xi) const;
  double dvmod(double xi) const;
  /// d^order v_mod / dxi^order for order 0..3.
  double vmod_derivative(double xi, int order) const;
};

CanonicalProblem adapt_to_canonical(const BvpSpec& spec, const CrossSection& cs);

struct RecoveredV {
  ScalarField v;
  std::vector<double> xi;
  std::vector<double> vmod;
};

RecoveredV recover_v(const ScalarField& u, const CanonicalProblem& prob, const CrossSection& cs);

}  // namespace toda
