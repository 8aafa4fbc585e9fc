#include "toda/bvp.hpp"

#include <algorithm>
#include <cmath>

#include "toda/error.hpp"
#include "toda/numeric.hpp"

namespace toda {

std::string to_string(BvpId id) { return "BVP" + std::to_string(static_cast<int>(id)); }

BvpId bvp_from_string(const std::string& s) {
  if (s == "BVP1") return BvpId::BVP1;
  if (s == "BVP2") return BvpId::BVP2;
  if (s == "BVP3") return BvpId::BVP3;
  if (s == "BVP4") return BvpId::BVP4;
  fail(ErrorCode::Config, "unknown bvp id '" + s + "'");
}

CoefficientProfile::Samples CoefficientProfile::sample(const TGrid& grid) const {
  Samples s;
  s.psi.resize(grid.nodes());
  s.b.resize(grid.nodes());
  s.k.resize(grid.nodes());
  for (int i = 0; i < grid.nodes(); ++i) {
    const double t = grid.t(i);
    s.psi[i] = psi(t);
    s.b[i] = b(t);
    s.k[i] = k(t);
    if (!(s.psi[i] > 0.0) || !std::isfinite(s.psi[i]))
      fail(ErrorCode::Internal, name + ": Psi is not positive at t = " + num::format_double(t));
    if (!(s.k[i] <= 0.0)) fail(ErrorCode::Internal, name + ": K is positive at t = " + num::format_double(t));
    if (!std::isfinite(s.b[i])) fail(ErrorCode::Internal, name + ": B is not finite at t = " + num::format_double(t));
  }
  return s;
}

double VariableMap::xi(double t) const {
  const double xs = xi_star();
  switch (id) {
    case BvpId::BVP1: return t;
    case BvpId::BVP2: return b * (t * t - 1.0) / a;
    case BvpId::BVP3: return xs * (1.0 - 1.0 / (t * t));
    case BvpId::BVP4: return xs * (1.0 - std::exp(-t));
  }
  return 0.0;
}

double VariableMap::dxi(double t) const {
  const double xs = xi_star();
  switch (id) {
    case BvpId::BVP1: return 1.0;
    case BvpId::BVP2: return 2.0 * b * t / a;
    case BvpId::BVP3: return 2.0 * xs / (t * t * t);
    case BvpId::BVP4: return xs * std::exp(-t);
  }
  return 0.0;
}

double VariableMap::d2xi(double t) const {
  const double xs = xi_star();
  switch (id) {
    case BvpId::BVP1: return 0.0;
    case BvpId::BVP2: return 2.0 * b / a;
    case BvpId::BVP3: return -6.0 * xs / (t * t * t * t);
    case BvpId::BVP4: return -xs * std::exp(-t);
  }
  return 0.0;
}

double VariableMap::d3xi(double t) const {
  const double xs = xi_star();
  switch (id) {
    case BvpId::BVP1:
    case BvpId::BVP2: return 0.0;
    case BvpId::BVP3: return 24.0 * xs / std::pow(t, 5);
    case BvpId::BVP4: return xs * std::exp(-t);
  }
  return 0.0;
}

double VariableMap::t_of_xi(double x) const {
  const double xs = xi_star();
  switch (id) {
    case BvpId::BVP1: return x;
    case BvpId::BVP2: return std::sqrt((b + a * x) / b);
    case BvpId::BVP3: return 1.0 / std::sqrt(1.0 - x / xs);
    case BvpId::BVP4: return -std::log(1.0 - x / xs);
  }
  return 0.0;
}

NormalizedBoundary normalize_boundary(const CrossSection& cs, std::span<const double> phi) {
  require(static_cast<int>(phi.size()) == cs.dof(), "boundary data size does not match the cross-section");
  for (double x : phi) require(std::isfinite(x), "boundary data must be finite");
  const auto pts = cs.point_values(phi);
  const double m = *std::max_element(pts.begin(), pts.end());
  std::vector<double> shifted(phi.begin(), phi.end());
  if (cs.is_torus()) {
    for (double& x : shifted) x -= m;
  } else {
    shifted[0] -= m;
  }
  std::vector<double> e(phi.size());
  cs.exp_field(shifted, e);
  NormalizedBoundary nb;
  nb.phibar = m + std::log(cs.mean(e));
  nb.phi.assign(phi.begin(), phi.end());
  if (cs.is_torus()) {
    for (double& x : nb.phi) x -= nb.phibar;
  } else {
    nb.phi[0] -= nb.phibar;
  }
  return nb;
}

std::vector<double> continuation_slice(const CrossSection& cs, std::span<const double> phi_n, double s) {
  std::vector<double> scaled(phi_n.begin(), phi_n.end());
  for (double& x : scaled) x *= s;
  if (s == 0.0) return scaled;
  return normalize_boundary(cs, scaled).phi;
}

double CanonicalProblem::vmod(double x) const {
  const double xs = xi_star();
  switch (id) {
    case BvpId::BVP1: return phibar;
    case BvpId::BVP2: return std::log(b + a * x);
    case BvpId::BVP3: return phibar + 3.0 * std::log(1.0 - x / xs) + std::log(1.0 + x / xs);
    case BvpId::BVP4:
      return 2.0 * std::log(x - xs) + std::log(1.0 / 3.0 - xs * xs / 18.0 * x + a / 24.0 * (xs * xs - x * x));
  }
  return 0.0;
}

double CanonicalProblem::dvmod(double x) const {
  const double xs = xi_star();
  switch (id) {
    case BvpId::BVP1: return 0.0;
    case BvpId::BVP2: return a / (b + a * x);
    case BvpId::BVP3: return 3.0 / (x - xs) + 1.0 / (x + xs);
    case BvpId::BVP4: {
      const double q = 1.0 / 3.0 - xs * xs / 18.0 * x + a / 24.0 * (xs * xs - x * x);
      const double dq = -xs * xs / 18.0 - a * x / 12.0;
      return 2.0 / (x - xs) + dq / q;
    }
  }
  return 0.0;
}

double CanonicalProblem::vmod_derivative(double x, int order) const {
  require(order >= 0 && order <= 3, "vmod derivative order must be 0..3");
  if (order == 0) return vmod(x);
  if (order == 1) return dvmod(x);
  const double xs = xi_star();
  const double sg = order == 2 ? -1.0 : 2.0;  // d^n of 1/(x - c) up to the power
  auto pole = [&](double c) { return sg / std::pow(x - c, order); };
  switch (id) {
    case BvpId::BVP1: return 0.0;
    case BvpId::BVP2: {
      const double r = a / (b + a * x);
      return order == 2 ? -r * r : 2.0 * r * r * r;
    }
    case BvpId::BVP3: return 3.0 * pole(xs) + pole(-xs);
    case BvpId::BVP4: {
      const double q = 1.0 / 3.0 - xs * xs / 18.0 * x + a / 24.0 * (xs * xs - x * x);
      const double q1 = (-xs * xs / 18.0 - a * x / 12.0) / q;
      const double q2 = (-a / 12.0) / q;
      if (order == 2) return 2.0 * pole(xs) + q2 - q1 * q1;
      return 2.0 * pole(xs) - 3.0 * q1 * q2 + 2.0 * q1 * q1 * q1;
    }
  }
  return 0.0;
}

CanonicalProblem adapt_to_canonical(const BvpSpec& spec, const CrossSection& cs) {
  CanonicalProblem p;
  p.id = spec.id;
  if (spec.id == BvpId::BVP4) {
    require(cs.kind() == SurfaceKind::SyntheticSurface, "BVP4 requires a synthetic genus >= 2 cross-section");
  } else {
    require(cs.kind() == SurfaceKind::FlatTorus, to_string(spec.id) + " requires a flat torus cross-section");
  }
  auto nb = normalize_boundary(cs, spec.phi);
  p.phi_normalized = std::move(nb.phi);
  p.phibar = nb.phibar;
  p.b = std::exp(p.phibar);
  const double xs = xi_star();
  const double b = p.b;

  switch (spec.id) {
    case BvpId::BVP1: {
      p.a = 0.0;
      p.profile = {"BVP1", [b](double) { return b; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
      p.map = {BvpId::BVP1, 0.0, b, 0.0};
      p.model = ModelFamily::type_i(0.0, b);
      break;
    }
    case BvpId::BVP2: {
      require(spec.a > 0.0 && std::isfinite(spec.a), "BVP2 requires a > 0");
      const double a = spec.a;
      p.a = a;
      p.profile = {"BVP2", [a, b](double) { return a * a / (4.0 * b); },
                   [a, b](double t) { return 3.0 * a * a / (4.0 * b * t); }, [](double) { return 0.0; }};
      p.map = {BvpId::BVP2, a, b, 1.0};
      p.model = ModelFamily::type_i(a, b);
      break;
    }
    case BvpId::BVP3: {
      const double a = 24.0 * b / (xs * xs * xs * xs);
      p.a = a;
      p.type_ii = true;
      p.profile = {"BVP3", [a, xs](double t) { return -(a / (8.0 * xs)) * (2.0 - 1.0 / (t * t)); },
                   [a, xs](double t) {
                     const double t2 = t * t, t4 = t2 * t2, t6 = t4 * t2;
                     return (a / (8.0 * xs)) * (30.0 * t6 - 33.0 * t4 + 9.0 * t2 - 1.0) /
                            (t2 * t * (3.0 * t4 - 3.0 * t2 + 1.0));
                   },
                   [](double) { return 0.0; }};
      p.map = {BvpId::BVP3, a, b, 1.0};
      p.model = ModelFamily::type_ii_torus(a, b);
      break;
    }
    case BvpId::BVP4: {
      const double a = (2.0 / xs) * (xs * xs / 3.0 - b);
      p.a = a;
      p.type_ii = true;
      const double c1 = a * xs * xs / 12.0 - 2.0 / 3.0;
      const double c2 = a * xs * xs / 24.0;
      auto psi = [c1, c2](double t) { return 1.0 + c1 * std::exp(-t) - c2 * std::exp(-2.0 * t); };
      auto dpsi = [c1, c2](double t) { return -c1 * std::exp(-t) + 2.0 * c2 * std::exp(-2.0 * t); };
      p.profile = {"BVP4", psi,
                   [psi, dpsi](double t) {
                     const double e = std::exp(-t);
                     const double ps = psi(t);
                     return 2.0 * dpsi(t) - 3.0 * ps + 6.0 * (1.0 - e) * (1.0 - e) / (3.0 - 3.0 * e + e * e) * ps;
                   },
                   [](double) { return -1.0; }};
      p.map = {BvpId::BVP4, a, b, 0.0};
      p.model = ModelFamily::type_ii_sigma(a);
      break;
    }
  }
  return p;
}

RecoveredV recover_v(const ScalarField& u, const CanonicalProblem& prob, const CrossSection& cs) {
  RecoveredV r;
  r.v = u;
  r.xi.resize(u.grid.nodes());
  r.vmod.resize(u.grid.nodes());
  for (int i = 0; i < u.grid.nodes(); ++i) {
    r.xi[i] = prob.map.xi(u.grid.t(i));
    r.vmod[i] = prob.vmod(r.xi[i]);
    auto s = r.v.slice(i);
    if (cs.is_torus()) {
      for (double& x : s) x += r.vmod[i];
    } else {
      s[0] += r.vmod[i];
    }
  }
  return r;
}

}  // namespace toda
