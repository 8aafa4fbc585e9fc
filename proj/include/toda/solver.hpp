#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toda/bvp.hpp"
#include "toda/cross_section.hpp"
#include "toda/field.hpp"

namespace toda {

/// Finite-difference rows for d/dt and d^2/dt^2 at each interior node.
/// Order 2 uses 3-point centered stencils; order 4 uses 5-point centered
/// stencils and one-sided 6-point rows next to the two boundaries; order 6
/// uses 7-point centered stencils and 8-point one-sided rows.
struct TStencil {
  struct Row {
    int first = 0;
    std::vector<double> d1, d2;
  };
  int order = 4;
  std::vector<Row> rows;  // rows[i] for node i = 1..n-1 (rows[0], rows[n] unused)

  static TStencil build(const TGrid& grid, int order);
  int lower_bandwidth() const;
  int upper_bandwidth() const;
};

/// First derivative of nodal values at all nodes, 4th order including ends.
std::vector<double> derivative_nodes(std::span<const double> f, double h);

enum class LinearSolver { Auto, Direct, Krylov };

struct SolverOptions {
  int t_order = 4;
  double tol_newton = 1e-10;
  int max_newton = 40;
  /// Initial number of equal continuation steps in s.
  int continuation_steps = 1;
  /// Explicit s-schedule; overrides continuation_steps when non-empty.
  std::vector<double> schedule;
  /// Stop the continuation after reaching this s.
  double stop_at_s = 1.0;
  double min_step = 1e-4;
  LinearSolver linear = LinearSolver::Auto;
  int gmres_restart = 40;
  int gmres_max_iter = 2000;
  bool parallel = true;
};

enum class SolveStatus { Converged, NewtonFailure, ContinuationExhausted };
std::string to_string(SolveStatus s);

struct ContinuationStep {
  double s = 0.0;
  int newton_iterations = 0;
  int linear_iterations = 0;
  double residual = 0.0;
  bool accepted = false;
};

struct DecayFit {
  std::string model;
  double delta = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
  int points = 0;
  bool meaningful = false;
  std::string note;
};

struct MinWRecord {
  double value = 0.0;
  int t_index = 0;
  int sample = 0;
  double xi = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Converged;
  std::string failing_stage;
  std::string message;
  double pde_residual_sup = 0.0;
  double mass_drift_sup = 0.0;
  double u_sup = 0.0;
  double phi_sup = 0.0;
  bool max_principle_ok = true;
  double s_reached = 0.0;
  int newton_total = 0;
  int linear_total = 0;
  std::vector<ContinuationStep> steps;
  std::optional<DecayFit> decay;
  std::optional<MinWRecord> min_w;
  bool converged() const { return status == SolveStatus::Converged; }
};

struct SolveResult {
  ScalarField u;
  SolveReport report;
};

/// Discrete canonical operator on a t-grid times a cross-section.
class CanonicalOperator {
 public:
  CanonicalOperator(const CoefficientProfile::Samples& coeffs, const CrossSection& cs, const TGrid& grid, int order);

  const TGrid& grid() const { return grid_; }
  const CrossSection& cross_section() const { return cs_; }
  const TStencil& stencil() const { return st_; }
  const CoefficientProfile::Samples& coefficients() const { return co_; }
  int interior_size() const { return (grid_.n - 1) * cs_.dof(); }

  /// E_i = exp_field(u_i) - 1 at every node.
  void exp_all(const ScalarField& u, ScalarField& e, bool parallel) const;
  /// Residual at interior nodes, written into r (interior-major).
  void residual(const ScalarField& u, const ScalarField& e, std::vector<double>& r, bool parallel) const;
  /// Serial and OpenMP variants of the residual kernel.
  void residual_serial(const ScalarField& u, const ScalarField& e, std::vector<double>& r) const;
  void residual_parallel(const ScalarField& u, const ScalarField& e, std::vector<double>& r) const;
  /// Jacobian at u applied to interior increments du.
  void jacobian_apply(const ScalarField& u, const ScalarField& e, std::span<const double> du, std::span<double> out,
                      bool parallel) const;

 private:
  void residual_node(int i, const ScalarField& u, const ScalarField& e, double* out) const;

  CoefficientProfile::Samples co_;
  CrossSection cs_;
  TGrid grid_;
  TStencil st_;
};

/// Solves the canonical equation with u(t0) = phi_n and u(t0 + T) = 0 by
/// continuation in s and damped Newton. Always returns a report.
SolveResult solve(const CoefficientProfile& profile, const CrossSection& cs, std::span<const double> phi_n,
                  const TGrid& grid, const SolverOptions& opts = {});

/// Sup over interior nodes of the continuous-coefficient discrete residual.
double residual_sup(const CoefficientProfile& profile, const CrossSection& cs, const ScalarField& u, int order);

double mass_drift(const CrossSection& cs, const ScalarField& u);

}  // namespace toda
