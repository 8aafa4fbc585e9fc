#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toda/bvp.hpp"
#include "toda/solver.hpp"

namespace toda {

/// E = 1/2 int w phi with -Delta phi = w. Throws unless w has zero mean.
double h_minus1_energy(const CrossSection& cs, std::span<const double> w);

/// Positive root of k^2 + k1 k - k0 = 0.
double kappa2(double kappa0, double kappa1);

struct EnergyTrace {
  std::vector<double> t, e, d1, d2, bound;
  double kappa0 = 0.0, kappa1 = 0.0, kappa2 = 0.0;
  double a_prime = 0.0;  // max sup |u_i|
  double slack = 0.0;    // 10 dt^2 max E
  /// worst violations; <= 0 means satisfied
  double inequality_gap = 0.0;
  double monotone_gap = 0.0;
  double bound_gap = 0.0;
  bool inequality_ok = true;
  bool monotone = true;
  bool bound_ok = true;
};

struct EnergyOptions {
  double mass_tol = 1e-6;
};

/// H^{-1} energy of w = e^{u1} - e^{u2} on a common grid, with the constants
/// of the differential inequality E'' >= k0 E - k1 |E'|.
EnergyTrace energy_trace(const CoefficientProfile& profile, const CrossSection& cs, const ScalarField& u1,
                         const ScalarField& u2, const EnergyOptions& opts = {});

struct StabilityRung {
  double eps = 0.0;
  double data_norm = 0.0;  // sup |phi1 - phi2| after normalization
  std::vector<double> profile;  // D(t) = sup |u1 - u2|
  DecayFit fit;
  double amplitude = 0.0;  // sup_t D e^{delta t} with the common delta
};

struct StabilityResult {
  std::vector<StabilityRung> rungs;
  double delta = 0.0;     // common rate: smallest meaningful fitted rate
  double exponent = 0.0;  // slope of log amplitude against log data norm
  bool rate_positive = false;
  /// D shrinks at least like the quarter power of the data difference
  bool quarter_power_ok = false;
  TGrid grid;
};

/// Pairs (phi, phi + eps * direction) for each eps; both are normalized by
/// the BVP adaptation before solving.
StabilityResult stability_experiment(const BvpSpec& base, std::span<const double> direction,
                                     std::span<const double> eps_list, const CrossSection& cs, const TGrid& grid,
                                     const SolverOptions& opts = {});

struct DegenerationOptions {
  double xi_lo = 1.0;
  double xi_hi = 5.0;
  int n_t = 400;
  /// t-length is t_factor times t(xi_hi) - 1.
  double t_factor = 2.0;
  int window_points = 41;
  SolverOptions solver;
};

struct DegenerationMember {
  int n_shift = 0;  // N
  CanonicalProblem prob;
  ScalarField u;
  SolveReport report;
  double window_error = 0.0;  // sup over the window of |v_N - log xi|
};

struct DegenerationResult {
  std::vector<DegenerationMember> members;
  bool monotone = false;
  /// smallest N after which the error column is nonincreasing
  int threshold_n = 0;
  /// set when a member failed to solve; members holds the achieved range
  std::string failure;
};

/// BVP2 with a = 1 and phi = -N + phi0 for each N.
DegenerationResult degeneration_family(const CrossSection& cs, std::span<const double> phi0,
                                       std::span<const int> n_list, const DegenerationOptions& opts = {});

/// v and v_xi of a member at cross-section sample k and arbitrary xi in the grid.
struct PointValue {
  double v = 0.0, v_xi = 0.0;
};
PointValue member_value(const DegenerationMember& m, int k, double xi);

struct RescaledFit {
  double a = 0.0, b = 0.0, rms = 0.0;
  int points = 0;
};

/// Least-squares fit of e^{u_N} = b + a zeta along zeta in [0, zeta_max] at sample k,
/// where u_N(zeta) = v_N(e^{-N} zeta) + N.
RescaledFit rescaled_limit_fit(const DegenerationMember& m, int k, double zeta_max = 5.0, int points = 41);

struct BlowUpComparison {
  std::vector<double> z;
  /// relative sup deviations of the dz^2, fiber and base coefficients, and of the twist
  double dev_zz = 0.0, dev_fiber = 0.0, dev_base = 0.0, dev_twist = 0.0;
  double max_dev = 0.0;
};

/// Compares the rescaled metric of a member, normalized by the fitted a, b,
/// with the blow-up limit metric on z in [z_lo, z_hi].
BlowUpComparison blow_up_comparison(const DegenerationMember& m, int k, const RescaledFit& fit, double z_lo = -0.5,
                                    double z_hi = 0.5, int points = 21);

enum class LimitRegime { XiENToZero, XiENToConst, XiENToInfXiToZero, XiToConst, XiToInf };
enum class LimitTag { RealHyperbolic, BlowUpLimit, ComplexHyperbolic, ComplexHyperbolicCusp, Line, Ambiguous };
std::string to_string(LimitTag t);
std::string to_string(LimitRegime r);

struct BasepointRule {
  LimitRegime regime = LimitRegime::XiToConst;
  std::function<double(int)> xi;  // xi(p_N) as a function of N
};

struct PointedLimit {
  LimitTag tag = LimitTag::Ambiguous;
  /// component-wise deviations of the last member from the local models
  double dev_rh = 0.0, dev_bu = 0.0, dev_ch = 0.0;
  double fitted_c = 0.0;  // blow-up parameter of the best fit
  double collapse_scale = 0.0;  // rescaled torus side of the last member
  bool regime_consistent = true;
  std::string note;
};

PointedLimit pointed_limit_classifier(const DegenerationResult& fam, const BasepointRule& rule, int k = 0);

}  // namespace toda
