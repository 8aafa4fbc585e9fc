#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "toda/bvp.hpp"
#include "toda/cross_section.hpp"
#include "toda/curvature.hpp"
#include "toda/field.hpp"

namespace toda {

struct FrameOptions {
  /// Degree of the circle bundle; 0 requires zero flux and uses `period`.
  int degree = 1;
  double period = 1.0;
  /// Absolute tolerance on (W e^v)_xixi + Delta W at the clipped interior.
  double closure_tol = 1e-2;
  bool check_closure = true;
  /// Nodes dropped at each end of the t-grid before curvature evaluation.
  int clip = 5;
  /// Order of the centered t-differences (4 or 6).
  int t_order = 4;
};

/// Data defining v = u + vmod(xi(t)) on a t-grid.
struct FrameSource {
  ScalarField u;
  VariableMap map;
  bool type_ii = false;
  /// Mean of (W e^v)_xi over the cross-section; a/2 for the model families.
  double flux = 0.0;
  /// d^order vmod / dxi^order, order 0..3.
  std::function<double(double, int)> vmod;
};

FrameSource frame_source(const ScalarField& u, const CanonicalProblem& prob);

/// S^1-invariant conformally Kahler metric on a t-grid times the torus,
/// coordinates (t, theta, s1, s2):
///   g = W xi'^2 dt^2 + W^{-1}(dtheta + A)^2 + W e^v G,   h = xi^{-2} g.
/// A = monopole + periodic part with A_t = 0. The periodic part is stored per
/// node from the s1-s2 component of d eta; its t-derivative at a node comes from
/// the dxi components of d eta.
struct MetricFrame {
  CrossSection cs;
  TGrid grid;
  VariableMap map;
  bool type_ii = false;
  std::vector<double> xi;
  ScalarField u;
  std::array<std::vector<double>, 4> vm;  // vmod derivatives per t-node
  ScalarField w;    // W
  ScalarField wev;  // W e^v
  ScalarField a1, a2;  // periodic connection components along s1, s2
  double flux = 0.0;   // monopole curvature density (per unit area)
  double period = 0.0;
  int degree = 0;
  double degree_check = 0.0;
  int orientation = 1;
  // diagnostics gathered during assembly
  double min_w = 0.0;
  int min_w_t = 0;
  int min_w_sample = 0;
  double closure_residual = 0.0;
  double flux_deviation = 0.0;
  int clip = 5;
  int t_order = 4;

  int first_node() const;
  int last_node() const;
};

/// W from v through the type formula at every node (4th-order v_t).
ScalarField compute_W(const FrameSource& src);

/// Builds the frame; throws InvariantViolation naming the node if W <= 0
/// or if the closure residual exceeds the tolerance.
MetricFrame assemble(const FrameSource& src, const CrossSection& cs, const FrameOptions& opts = {});

/// Kahler metric jet at node (i, k) of the frame.
curv::MetricJet kahler_jet(const MetricFrame& f, int i, int k);
/// Jet of f = -log|xi| at node i, so that h = e^{2f} g.
curv::ScalarJet conformal_jet(const MetricFrame& f, int i);
/// Einstein metric jet e^{2f} g at node (i, k).
curv::MetricJet einstein_jet(const MetricFrame& f, int i, int k);
/// einstein_jet for every sample of slice i.
std::vector<curv::MetricJet> einstein_slice_jets(const MetricFrame& f, int i);

struct CurvatureField {
  std::vector<int> t_index;  // evaluated t-nodes
  int dof = 0;
  std::vector<double> xi;
  // node-major arrays of size t_index.size() * dof
  std::vector<double> einstein, weyl_plus, weyl_minus, scalar_g;
  double einstein_sup = 0.0;
  double weyl_plus_sup = 0.0;
  /// sup of |s_g - target| with target 0 (Type I) or xi (Type II)
  double bridge_sup = 0.0;
  /// sup relative gap | |xi| - (2 sqrt6 |W+|)^{1/3} | / |xi|, Type II only
  double weyl_relation_sup = 0.0;
};

CurvatureField frame_curvature_serial(const MetricFrame& f);
CurvatureField frame_curvature_parallel(const MetricFrame& f);
CurvatureField frame_curvature(const MetricFrame& f, bool parallel = true);

struct CuspProfile {
  std::vector<double> t, r, diff;  // diff = sup over the slice of |h - h_mod|_{h_mod}
  std::vector<double> log_diff;
  /// log-profile shape over the fit window, the later half of the points
  int fit_from = 0;
  double slope = 0.0;      // linear least-squares slope against r
  double curvature = 0.0;  // quadratic coefficient of the log profile
  /// change of the slope across the window relative to |slope|
  double slope_change = 0.0;
  double max_second_difference = 0.0;
  int points = 0;
  bool concave = false;  // slope steepens by more than 5%
  bool linear = false;   // negative slope, steady within 5%
};

/// Difference from the model frame along the end. For the torus the full
/// metric including A is compared; on a synthetic surface W and e^v at the
/// quadrature nodes are compared.
CuspProfile cusp_comparison(const FrameSource& src, const CrossSection& cs, const FrameOptions& opts = {});

}  // namespace toda
