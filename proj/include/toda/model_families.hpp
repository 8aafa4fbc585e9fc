#pragma once

#include <optional>
#include <string>
#include <vector>

namespace toda {

/// The constant xi_* = -12^{1/3}.
double xi_star();

enum class FamilyKind { TypeI, TypeIITorus, TypeIISigma };

/// Closed-form xi-only solution. For TypeIISigma, b is derived from a.
struct ModelFamily {
  FamilyKind kind = FamilyKind::TypeI;
  double a = 0.0;
  double b = 1.0;

  static ModelFamily type_i(double a, double b);
  static ModelFamily type_ii_torus(double a, double b);
  static ModelFamily type_ii_sigma(double a);
};

std::string to_string(FamilyKind k);

struct ProfileValue {
  double ev = 0.0;   // e^v
  double wev = 0.0;  // W e^v
  double w = 0.0;    // W
  bool w_infinite = false;
};

ProfileValue profile(const ModelFamily& fam, double xi);
/// d(e^v)/dxi and d^2(e^v)/dxi^2.
double profile_d1(const ModelFamily& fam, double xi);
double profile_d2(const ModelFamily& fam, double xi);

enum class Threshold { Below, At, Above, NotApplicable };  // sign of 2b^3 - 3a^3
Threshold threshold(const ModelFamily& fam);
std::string to_string(Threshold t);

struct Roots {
  std::optional<double> xi_plus;
  std::optional<double> xi_minus;
  std::optional<double> xi_under;
};

Roots roots(const ModelFamily& fam);
/// -2b/a; throws if a = 0.
double xi_under(const ModelFamily& fam);

enum class EndTag { PE, AHCusp, ACHCusp, ACHExpanding, SigmaCusp, Conical, TwoThirdsHorn, FourThirdsHorn };
std::string to_string(EndTag t);

struct Endpoint {
  double xi = 0.0;  // may be +-infinity
  EndTag tag = EndTag::PE;
  /// Cone angle per unit fiber period, for conical ends.
  std::optional<double> angle_per_period;
};

struct MaximalInterval {
  Endpoint lo;
  Endpoint hi;
};

struct Classification {
  int table = 0;  // 1, 2; 0 for the surface family
  int case_no = 0;
  Threshold branch = Threshold::NotApplicable;
  std::vector<MaximalInterval> intervals;
};

Classification maximal_intervals(const ModelFamily& fam);

struct ConeAngle {
  double angle = 0.0;
  bool smooth = false;
};

ConeAngle cone_angle(const ModelFamily& fam, double xi_hat, double period);

struct HornExponents {
  double fiber = 0.0;
  double base = 0.0;
};

/// Fitted exponents of the fiber and base coefficients of h against the
/// distance-like coordinate zeta near a horn end.
HornExponents horn_exponents(const ModelFamily& fam, const Endpoint& end, const Endpoint& other);

}  // namespace toda
