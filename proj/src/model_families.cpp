#include "toda/model_families.hpp"

#include <cmath>
#include <limits>

#include "toda/error.hpp"
#include "toda/numeric.hpp"

namespace toda {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double poly_p(double a, double b, double x) { return b + a * x - b / 6.0 * x * x * x - a / 24.0 * x * x * x * x; }

Endpoint end(double xi, EndTag tag) { return Endpoint{xi, tag, std::nullopt}; }

}  // namespace

double xi_star() {
  static const double v = -std::cbrt(12.0);
  return v;
}

ModelFamily ModelFamily::type_i(double a, double b) { return {FamilyKind::TypeI, a, b}; }
ModelFamily ModelFamily::type_ii_torus(double a, double b) { return {FamilyKind::TypeIITorus, a, b}; }
ModelFamily ModelFamily::type_ii_sigma(double a) {
  const double xs = xi_star();
  return {FamilyKind::TypeIISigma, a, xs * xs / 3.0 - 0.5 * a * xs};
}

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::TypeI: return "TypeI";
    case FamilyKind::TypeIITorus: return "TypeII_Torus";
    case FamilyKind::TypeIISigma: return "TypeII_Sigma";
  }
  return "?";
}

std::string to_string(Threshold t) {
  switch (t) {
    case Threshold::Below: return "below";
    case Threshold::At: return "threshold";
    case Threshold::Above: return "above";
    case Threshold::NotApplicable: return "n/a";
  }
  return "?";
}

std::string to_string(EndTag t) {
  switch (t) {
    case EndTag::PE: return "PE";
    case EndTag::AHCusp: return "AH_cusp";
    case EndTag::ACHCusp: return "ACH_cusp";
    case EndTag::ACHExpanding: return "ACH_expanding";
    case EndTag::SigmaCusp: return "Sigma_cusp";
    case EndTag::Conical: return "Conical";
    case EndTag::TwoThirdsHorn: return "TwoThirdsHorn";
    case EndTag::FourThirdsHorn: return "FourThirdsHorn";
  }
  return "?";
}

ProfileValue profile(const ModelFamily& fam, double xi) {
  ProfileValue p;
  switch (fam.kind) {
    case FamilyKind::TypeI: p.ev = fam.b + fam.a * xi; break;
    case FamilyKind::TypeIITorus: p.ev = poly_p(fam.a, fam.b, xi); break;
    case FamilyKind::TypeIISigma: {
      const double xs = xi_star();
      const double d = xi - xs;
      p.ev = d * d * (1.0 / 3.0 - xs * xs / 18.0 * xi + fam.a / 24.0 * (xs * xs - xi * xi));
      break;
    }
  }
  p.wev = fam.b + 0.5 * fam.a * xi;
  if (p.ev == 0.0) {
    p.w_infinite = true;
    p.w = std::copysign(kInf, p.wev);
  } else {
    p.w = p.wev / p.ev;
  }
  return p;
}

double profile_d1(const ModelFamily& fam, double xi) {
  const double a = fam.a, b = fam.b;
  switch (fam.kind) {
    case FamilyKind::TypeI: return a;
    case FamilyKind::TypeIITorus: return a - 0.5 * b * xi * xi - a / 6.0 * xi * xi * xi;
    case FamilyKind::TypeIISigma: return a - 0.5 * b * xi * xi - a / 6.0 * xi * xi * xi - 2.0 * xi;
  }
  return 0.0;
}

double profile_d2(const ModelFamily& fam, double xi) {
  const double a = fam.a, b = fam.b;
  switch (fam.kind) {
    case FamilyKind::TypeI: return 0.0;
    case FamilyKind::TypeIITorus: return -b * xi - 0.5 * a * xi * xi;
    case FamilyKind::TypeIISigma: return -b * xi - 0.5 * a * xi * xi - 2.0;
  }
  return 0.0;
}

Threshold threshold(const ModelFamily& fam) {
  if (fam.kind != FamilyKind::TypeIITorus) return Threshold::NotApplicable;
  const double l = 2.0 * fam.b * fam.b * fam.b, r = 3.0 * fam.a * fam.a * fam.a;
  const double scale = std::max(std::abs(l), std::abs(r));
  if (scale == 0.0) return Threshold::NotApplicable;
  const double d = l - r;
  if (std::abs(d) <= 1e-10 * scale) return Threshold::At;
  return d < 0 ? Threshold::Below : Threshold::Above;
}

double xi_under(const ModelFamily& fam) {
  if (fam.a == 0.0) fail(ErrorCode::InvalidInput, "xi_under = -2b/a requires a != 0");
  return -2.0 * fam.b / fam.a;
}

namespace {

/// First root of f to the right of `start` (exclusive), scanning offsets log-spaced in [1e-14, 1e8].
std::optional<double> first_root_right(const std::function<double(double)>& f, double start) {
  const double s = std::max(1.0, std::abs(start));
  std::vector<double> xs{start};
  for (double d : num::logspace(-14, 8, 40)) xs.push_back(start + s * d);
  auto br = num::sign_changes(f, xs);
  for (auto [lo, hi] : br) {
    if (lo == start && f(lo) == 0.0) continue;
    return num::find_root(f, lo, hi);
  }
  return std::nullopt;
}

/// First root of f to the left of `start` (exclusive), bounded below by `floor`.
std::optional<double> first_root_left(const std::function<double(double)>& f, double start, double floor) {
  const double s = std::max(1.0, std::abs(start));
  std::vector<double> xs;
  for (double d : num::logspace(-14, 8, 40)) {
    const double x = start - s * d;
    if (x <= floor) break;
    xs.push_back(x);
  }
  if (std::isfinite(floor)) xs.push_back(floor);
  std::vector<double> asc(xs.rbegin(), xs.rend());
  asc.push_back(start);
  auto br = num::sign_changes(f, asc);
  for (auto it = br.rbegin(); it != br.rend(); ++it) {
    if (it->second == start && f(start) == 0.0) continue;
    if (it->first == floor && f(floor) == 0.0) continue;
    return num::find_root(f, it->first, it->second);
  }
  return std::nullopt;
}

}  // namespace

Roots roots(const ModelFamily& fam) {
  Roots r;
  if (fam.a != 0.0) r.xi_under = xi_under(fam);
  if (fam.kind != FamilyKind::TypeIITorus) return r;
  const double a = fam.a, b = fam.b;
  auto P = [&](double x) { return poly_p(a, b, x); };
  const Threshold th = threshold(fam);

  // xi_+: bounds the positive interval starting at 0, or at xi_under in the a>0, b<0 sector.
  if (b > 0 || (b == 0 && a > 0)) {
    r.xi_plus = first_root_right(P, 0.0);
  } else if (a > 0 && b < 0) {
    r.xi_plus = first_root_right(P, *r.xi_under);
  }

  // xi_-: root on the far side of xi_under below the threshold, the triple root at it.
  if (a != 0 && b != 0 && ((a > 0 && b > 0) || (a < 0 && b < 0))) {
    const double xu = *r.xi_under;
    if (th == Threshold::At) {
      auto P2 = [&](double x) { return -b * x - 0.5 * a * x * x; };
      const double w = 1e-3 * std::abs(xu);
      r.xi_minus = num::find_root(P2, xu - w, xu + w);
    } else if (th == Threshold::Below) {
      if (a > 0) r.xi_minus = first_root_right(P, xu);
      else r.xi_minus = first_root_left(P, xu, -kInf);
    }
  }
  return r;
}

ConeAngle cone_angle(const ModelFamily& fam, double xi_hat, double period) {
  require(xi_hat != 0.0, "cone angle requires a nonzero root");
  require(period > 0.0, "fiber period must be positive");
  const auto pv = profile(fam, xi_hat);
  const double d1 = profile_d1(fam, xi_hat);
  const double scale = std::max({1.0, std::abs(fam.a), std::abs(fam.b)}) * std::max(1.0, std::pow(std::abs(xi_hat), 4));
  require(std::abs(pv.ev) <= 1e-9 * scale, "cone angle requires a root of the profile polynomial");
  require(std::abs(d1) > 1e-9 * scale, "cone angle requires a simple root (double root found)");
  require(pv.wev > 0.0, "cone angle requires W e^v > 0 at the root");
  ConeAngle c;
  c.angle = period * std::abs(d1) / (2.0 * pv.wev);
  c.smooth = std::abs(c.angle - 2.0 * M_PI) <= 1e-8 * 2.0 * M_PI;
  return c;
}

namespace {

struct Coeffs {
  double radial, fiber, base;
};

Coeffs h_coeffs(const ModelFamily& fam, double xi) {
  const auto p = profile(fam, xi);
  const double s = 1.0 / (xi * xi);
  return {s * p.wev / p.ev, s * p.ev / p.wev, s * p.wev};
}

double simpson(const std::function<double(double)>& f, double lo, double hi, int n) {
  if (n % 2) ++n;
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace

HornExponents horn_exponents(const ModelFamily& fam, const Endpoint& e, const Endpoint& other) {
  std::array<double, 2> zeta{}, lf{}, lb{};
  if (std::isfinite(e.xi)) {
    const double dir = other.xi > e.xi ? 1.0 : -1.0;
    const double L = std::max(1.0, std::abs(e.xi));
    const std::array<double, 2> depth{1e-6 * L, 1e-5 * L};
    for (int k = 0; k < 2; ++k) {
      // xi = e.xi + dir s^2 removes the square-root singularity of sqrt(h_radial)
      auto integrand = [&](double s) {
        if (s == 0.0) {
          const double ds = 1e-9 * std::sqrt(depth[0]);
          const double x = e.xi + dir * ds * ds;
          return std::sqrt(h_coeffs(fam, x).radial) * 2.0 * ds;
        }
        const double x = e.xi + dir * s * s;
        return std::sqrt(h_coeffs(fam, x).radial) * 2.0 * s;
      };
      zeta[k] = simpson(integrand, 0.0, std::sqrt(depth[k]), 2000);
      const auto c = h_coeffs(fam, e.xi + dir * depth[k]);
      lf[k] = std::log(c.fiber);
      lb[k] = std::log(c.base);
    }
  } else {
    const double sign = e.xi < 0 ? -1.0 : 1.0;
    const std::array<double, 2> mag{1e6, 1e5};
    for (int k = 0; k < 2; ++k) {
      auto integrand = [&](double y) {
        const double x = sign * std::exp(y);
        return std::sqrt(h_coeffs(fam, x).radial) * std::exp(y);
      };
      const double y0 = std::log(mag[k]);
      zeta[k] = simpson(integrand, y0, y0 + 80.0, 20000);
      const auto c = h_coeffs(fam, sign * mag[k]);
      lf[k] = std::log(c.fiber);
      lb[k] = std::log(c.base);
    }
  }
  const double dz = std::log(zeta[1]) - std::log(zeta[0]);
  return {(lf[1] - lf[0]) / dz, (lb[1] - lb[0]) / dz};
}

namespace {

void attach_angles(const ModelFamily& fam, Classification& c) {
  for (auto& iv : c.intervals)
    for (Endpoint* e : {&iv.lo, &iv.hi})
      if (e->tag == EndTag::Conical) {
        const auto pv = profile(fam, e->xi);
        e->angle_per_period = std::abs(profile_d1(fam, e->xi)) / (2.0 * pv.wev);
      }
}

void check_horns(const ModelFamily& fam, const Classification& c) {
  for (const auto& iv : c.intervals)
    for (int side = 0; side < 2; ++side) {
      const Endpoint& e = side ? iv.hi : iv.lo;
      const Endpoint& o = side ? iv.lo : iv.hi;
      double fiber = 0, base = 0;
      if (e.tag == EndTag::TwoThirdsHorn) {
        fiber = -2.0 / 3.0;
        base = 2.0 / 3.0;
      } else if (e.tag == EndTag::FourThirdsHorn) {
        fiber = -2.0 / 3.0;
        base = 4.0 / 3.0;
      } else {
        continue;
      }
      const auto ex = horn_exponents(fam, e, o);
      if (std::abs(ex.fiber - fiber) > 0.02 || std::abs(ex.base - base) > 0.02)
        fail(ErrorCode::Internal, "horn exponent cross-check failed at xi = " + num::format_double(e.xi));
    }
}

}  // namespace

Classification maximal_intervals(const ModelFamily& fam) {
  const double a = fam.a, b = fam.b;
  if (a == 0.0 && b == 0.0) fail(ErrorCode::InvalidInput, "parameter pair a = b = 0 is not covered by the tables");
  Classification c;
  if (fam.kind == FamilyKind::TypeIISigma) {
    c.intervals.push_back({end(xi_star(), EndTag::SigmaCusp), end(0.0, EndTag::PE)});
    return c;
  }
  if (fam.kind == FamilyKind::TypeI) {
    c.table = 1;
    if (a == 0 && b > 0) {
      c.case_no = 1;
      c.intervals.push_back({end(0.0, EndTag::PE), end(kInf, EndTag::AHCusp)});
    } else if (a > 0 && b > 0) {
      c.case_no = 2;
      c.intervals.push_back({end(0.0, EndTag::PE), end(kInf, EndTag::ACHCusp)});
    } else if (a < 0 && b > 0) {
      c.case_no = 3;
      c.intervals.push_back({end(0.0, EndTag::PE), end(-b / a, EndTag::Conical)});
    } else if (a > 0 && b < 0) {
      c.case_no = 4;
      c.intervals.push_back({end(-2.0 * b / a, EndTag::TwoThirdsHorn), end(kInf, EndTag::ACHCusp)});
    } else if (b == 0 && a > 0) {
      c.case_no = 5;
      c.intervals.push_back({end(0.0, EndTag::ACHExpanding), end(kInf, EndTag::ACHCusp)});
    } else {
      fail(ErrorCode::InvalidInput, "Type I parameters (a, b) not covered by the table (needs b > 0, or a > 0)");
    }
    attach_angles(fam, c);
    check_horns(fam, c);
    return c;
  }

  c.table = 2;
  const Roots r = roots(fam);
  c.branch = threshold(fam);
  if (a == 0 && b > 0) {
    c.case_no = 1;
    c.branch = Threshold::NotApplicable;
    c.intervals.push_back({end(0.0, EndTag::PE), end(*r.xi_plus, EndTag::Conical)});
    c.intervals.push_back({end(-kInf, EndTag::FourThirdsHorn), end(0.0, EndTag::PE)});
  } else if (a > 0 && b > 0) {
    c.case_no = 2;
    c.intervals.push_back({end(0.0, EndTag::PE), end(*r.xi_plus, EndTag::Conical)});
    if (c.branch == Threshold::Below)
      c.intervals.push_back({end(*r.xi_minus, EndTag::Conical), end(0.0, EndTag::PE)});
    else if (c.branch == Threshold::At)
      c.intervals.push_back({end(*r.xi_under, EndTag::ACHCusp), end(0.0, EndTag::PE)});
    else
      c.intervals.push_back({end(*r.xi_under, EndTag::TwoThirdsHorn), end(0.0, EndTag::PE)});
  } else if (a < 0 && b > 0) {
    c.case_no = 3;
    c.intervals.push_back({end(0.0, EndTag::PE), end(*r.xi_plus, EndTag::Conical)});
    c.intervals.push_back({end(-kInf, EndTag::TwoThirdsHorn), end(0.0, EndTag::PE)});
  } else if (a > 0 && b < 0) {
    c.case_no = 4;
    c.intervals.push_back({end(*r.xi_under, EndTag::TwoThirdsHorn), end(*r.xi_plus, EndTag::Conical)});
  } else if (a < 0 && b < 0) {
    c.case_no = 5;
    if (c.branch == Threshold::Below)
      c.intervals.push_back({end(-kInf, EndTag::TwoThirdsHorn), end(*r.xi_minus, EndTag::Conical)});
    else if (c.branch == Threshold::At)
      c.intervals.push_back({end(-kInf, EndTag::TwoThirdsHorn), end(*r.xi_under, EndTag::ACHCusp)});
    else
      c.intervals.push_back({end(-kInf, EndTag::TwoThirdsHorn), end(*r.xi_under, EndTag::TwoThirdsHorn)});
  } else if (b == 0 && a > 0) {
    c.case_no = 6;
    c.branch = Threshold::NotApplicable;
    c.intervals.push_back({end(0.0, EndTag::ACHExpanding), end(*r.xi_plus, EndTag::Conical)});
  } else if (b == 0 && a < 0) {
    c.case_no = 7;
    c.branch = Threshold::NotApplicable;
    c.intervals.push_back({end(-kInf, EndTag::TwoThirdsHorn), end(0.0, EndTag::ACHExpanding)});
  } else {
    fail(ErrorCode::InvalidInput, "Type II parameters (a, b) not covered by the table (a = 0 needs b > 0)");
  }
  if (c.case_no != 2 && c.case_no != 5) c.branch = Threshold::NotApplicable;
  attach_angles(fam, c);
  check_horns(fam, c);
  return c;
}

}  // namespace toda
