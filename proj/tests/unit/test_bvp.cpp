#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toda/bvp.hpp"
#include "toda/error.hpp"

using namespace toda;
constexpr double kPi = std::numbers::pi;

namespace {

const double XS = -std::cbrt(12.0);

double bessel_i0(double x) {
  double term = 1, sum = 1;
  for (int k = 1; k < 60; ++k) {
    term *= (x / 2) * (x / 2) / (k * k);
    sum += term;
  }
  return sum;
}

CrossSection unit_torus(int n = 16) { return CrossSection::flat_torus(Eigen::Matrix2d::Identity(), n, n); }

std::vector<double> cos_mode(const CrossSection& cs, double amp) {
  std::vector<double> v(cs.dof());
  for (int i = 0; i < cs.nx(); ++i)
    for (int j = 0; j < cs.ny(); ++j) v[i * cs.ny() + j] = amp * std::cos(2 * kPi * i / cs.nx());
  return v;
}

std::vector<double> constant_phi(const CrossSection& cs, double c) {
  if (cs.is_torus()) return std::vector<double>(cs.dof(), c);
  std::vector<double> v(cs.dof(), 0.0);
  v[0] = c;
  return v;
}

double d1(auto f, double x, double h) { return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h); }
double d2(auto f, double x, double h) {
  return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) - f(x + 2 * h)) / (12 * h * h);
}

}  // namespace

TEST_CASE("bvp ids") {
  CHECK(bvp_from_string("BVP3") == BvpId::BVP3);
  CHECK(to_string(BvpId::BVP4) == "BVP4");
  CHECK_THROWS_AS(bvp_from_string("BVP9"), Error);
}

TEST_CASE("normalize_boundary") {
  auto cs = unit_torus();
  auto z = normalize_boundary(cs, std::vector<double>(cs.dof(), 0.0));
  CHECK(z.phibar == 0.0);
  for (double x : z.phi) CHECK(x == 0.0);
  auto c = normalize_boundary(cs, std::vector<double>(cs.dof(), -7.25));
  CHECK(c.phibar == doctest::Approx(-7.25).epsilon(1e-15));
  for (double x : c.phi) CHECK(std::abs(x) < 1e-14);
  auto n = normalize_boundary(cs, cos_mode(cs, 0.5));
  CHECK(n.phibar == doctest::Approx(std::log(bessel_i0(0.5))).epsilon(1e-14));
  std::vector<double> e(cs.dof());
  for (int k = 0; k < cs.dof(); ++k) e[k] = std::exp(n.phi[k]);
  CHECK(cs.mean(e) == doctest::Approx(1.0).epsilon(1e-14));
  // huge negative mean stays finite
  auto big = cos_mode(cs, 0.5);
  for (double& x : big) x -= 800;
  auto nb = normalize_boundary(cs, big);
  CHECK(nb.phibar == doctest::Approx(std::log(bessel_i0(0.5)) - 800).epsilon(1e-14));
}

TEST_CASE("continuation slices") {
  auto cs = unit_torus();
  auto phi = normalize_boundary(cs, cos_mode(cs, 0.5)).phi;
  for (double x : continuation_slice(cs, phi, 0.0)) CHECK(std::abs(x) < 1e-15);
  auto one = continuation_slice(cs, phi, 1.0);
  for (int k = 0; k < cs.dof(); ++k) CHECK(std::abs(one[k] - phi[k]) < 1e-14);
  auto half = continuation_slice(cs, phi, 0.5);
  const double lam = std::log(bessel_i0(0.25));
  auto raw = cos_mode(cs, 0.25);
  for (int k = 0; k < cs.dof(); ++k) CHECK(std::abs(half[k] - (raw[k] - lam)) < 1e-14);
}

TEST_CASE("coefficient profiles at documented points") {
  auto cs = unit_torus(8);
  BvpSpec s2{BvpId::BVP2, constant_phi(cs, 0.0), 1.0};
  auto p2 = adapt_to_canonical(s2, cs);
  CHECK(p2.profile.psi(1.7) == doctest::Approx(0.25));
  CHECK(p2.profile.b(2.0) == doctest::Approx(0.375));
  CHECK(p2.profile.k(3.0) == 0.0);

  // e^phibar chosen so that a = 1
  BvpSpec s3{BvpId::BVP3, constant_phi(cs, std::log(std::pow(XS, 4) / 24)), 0.0};
  auto p3 = adapt_to_canonical(s3, cs);
  CHECK(p3.a == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p3.profile.psi(1e6) == doctest::Approx(-1 / (4 * XS)).epsilon(1e-10));
  CHECK(p3.profile.psi(1.0) == doctest::Approx(-1 / (8 * XS)).epsilon(1e-14));
  CHECK(p3.model.kind == FamilyKind::TypeIITorus);
  CHECK(threshold(p3.model) == Threshold::At);

  auto sy = CrossSection::synthetic_surface(2, {0.0, 2.0});
  BvpSpec s4{BvpId::BVP4, constant_phi(sy, std::log(XS * XS / 3)), 0.0};
  auto p4 = adapt_to_canonical(s4, sy);
  CHECK(std::abs(p4.a) < 1e-14);
  for (double t : {0.0, 0.3, 2.0, 9.0}) CHECK(p4.profile.psi(t) == doctest::Approx(1 - 2.0 / 3 * std::exp(-t)).epsilon(1e-13));
  CHECK(p4.profile.k(1.0) == -1.0);

  BvpSpec s1{BvpId::BVP1, constant_phi(cs, std::log(2.5)), 0.0};
  auto p1 = adapt_to_canonical(s1, cs);
  CHECK(p1.profile.psi(0.4) == doctest::Approx(2.5));
  CHECK(p1.profile.b(0.4) == 0.0);
}

TEST_CASE("adapter validation") {
  auto cs = unit_torus(8);
  auto sy = CrossSection::synthetic_surface(2, {0.0});
  CHECK_THROWS_AS(adapt_to_canonical({BvpId::BVP2, constant_phi(cs, 0.0), 0.0}, cs), Error);
  CHECK_THROWS_AS(adapt_to_canonical({BvpId::BVP2, constant_phi(cs, 0.0), -1.0}, cs), Error);
  CHECK_THROWS_AS(adapt_to_canonical({BvpId::BVP4, constant_phi(cs, 0.0), 0.0}, cs), Error);
  CHECK_THROWS_AS(adapt_to_canonical({BvpId::BVP1, constant_phi(sy, 0.0), 0.0}, sy), Error);
  CHECK_THROWS_AS(adapt_to_canonical({BvpId::BVP1, std::vector<double>(3, 0.0), 0.0}, cs), Error);
}

TEST_CASE("coefficient sampling asserts Psi > 0 and K <= 0") {
  CoefficientProfile bad{"bad", [](double t) { return 1.0 - t; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
  CHECK_THROWS_AS(bad.sample(TGrid::uniform(0, 2, 4)), Error);
  CoefficientProfile badk{"badk", [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.5; }};
  CHECK_THROWS_AS(badk.sample(TGrid::uniform(0, 2, 4)), Error);
}

TEST_CASE("variable maps: inverse and derivatives") {
  auto cs = unit_torus(8);
  auto sy = CrossSection::synthetic_surface(2, {0.0});
  std::vector<CanonicalProblem> probs{
      adapt_to_canonical({BvpId::BVP1, constant_phi(cs, 0.3), 0.0}, cs),
      adapt_to_canonical({BvpId::BVP2, constant_phi(cs, 0.3), 1.7}, cs),
      adapt_to_canonical({BvpId::BVP3, constant_phi(cs, 0.3), 0.0}, cs),
      adapt_to_canonical({BvpId::BVP4, constant_phi(sy, 0.3), 0.0}, sy)};
  for (const auto& p : probs) {
    const double t0 = p.map.t_start;
    CHECK(std::abs(p.map.xi(t0)) < 1e-15);
    for (double dt : {0.1, 0.7, 2.3, 6.0}) {
      const double t = t0 + dt;
      CHECK(p.map.t_of_xi(p.map.xi(t)) == doctest::Approx(t).epsilon(1e-12));
      auto X = [&](double s) { return p.map.xi(s); };
      CHECK(p.map.dxi(t) == doctest::Approx(d1(X, t, 1e-3)).epsilon(1e-9));
      CHECK(p.map.d2xi(t) == doctest::Approx(d2(X, t, 1e-3)).epsilon(1e-6));
      auto DX = [&](double s) { return p.map.d2xi(s); };
      CHECK(p.map.d3xi(t) == doctest::Approx(d1(DX, t, 1e-3)).epsilon(1e-8).scale(1e-3));
    }
  }
  CHECK(probs[2].map.xi(1e8) == doctest::Approx(XS).epsilon(1e-12));
  CHECK(probs[3].map.xi(60) == doctest::Approx(XS).epsilon(1e-12));
}

TEST_CASE("v-equation residual equals the canonical residual under v = v_mod + u(t(xi))") {
  auto cs = unit_torus(8);
  auto sy = CrossSection::synthetic_surface(2, {0.0, 1.0});
  struct Case {
    CanonicalProblem p;
    double kconst;  // -2 K_Sigma on the left side
  };
  std::vector<Case> cases{{adapt_to_canonical({BvpId::BVP1, constant_phi(cs, 0.4), 0.0}, cs), 0.0},
                          {adapt_to_canonical({BvpId::BVP2, constant_phi(cs, -0.2), 1.3}, cs), 0.0},
                          {adapt_to_canonical({BvpId::BVP3, constant_phi(cs, 0.1), 0.0}, cs), 0.0},
                          {adapt_to_canonical({BvpId::BVP4, constant_phi(sy, 0.2), 0.0}, sy), 2.0},
                          {adapt_to_canonical({BvpId::BVP4, constant_phi(sy, 0.9), 0.0}, sy), 2.0}};
  // u(t) along one cross-section point, with an arbitrary Laplacian value L(t)
  auto alpha = [](double t) { return 0.3 * std::exp(-0.5 * t) * std::sin(1.3 * t) + 0.05; };
  auto alpha1 = [](double t) { return 0.3 * std::exp(-0.5 * t) * (1.3 * std::cos(1.3 * t) - 0.5 * std::sin(1.3 * t)); };
  auto alpha2 = [](double t) {
    return 0.3 * std::exp(-0.5 * t) * (0.25 * std::sin(1.3 * t) - 1.3 * std::cos(1.3 * t) - 1.69 * std::sin(1.3 * t));
  };
  auto L = [](double t) { return -0.7 * std::cos(t); };
  for (const auto& c : cases) {
    const auto& p = c.p;
    const bool t2 = p.id == BvpId::BVP3 || p.id == BvpId::BVP4;
    for (double dt : {0.2, 0.9, 1.7, 3.1}) {
      const double t = p.map.t_start + dt;
      const double xi = p.map.xi(t);
      auto V = [&](double x) { return p.vmod(x) + alpha(p.map.t_of_xi(x)); };
      auto EV = [&](double x) { return std::exp(V(x)); };
      const double h = t2 ? 1e-3 * std::clamp(std::abs(xi - XS), 0.05, 1.0) : 1e-3;
      const double vx = d1(V, xi, h);
      double lhs = d2(EV, xi, h) + L(t) + c.kconst;
      if (t2) lhs += xi * (12 - 6 * xi * vx) / (12 + xi * xi * xi) * EV(xi);
      const double eu = std::exp(alpha(t));
      const double eut = alpha1(t) * eu;
      const double eutt = (alpha2(t) + alpha1(t) * alpha1(t)) * eu;
      const double rhs = L(t) + p.profile.psi(t) * eutt + p.profile.b(t) * eut + 2 * p.profile.k(t) * (eu - 1);
      INFO(to_string(p.id), " t=", t, " xi=", xi);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6).scale(1.0));
      CHECK(p.dvmod(xi) == doctest::Approx(d1([&](double x) { return p.vmod(x); }, xi, h)).epsilon(1e-7));
    }
  }
}

TEST_CASE("model profiles match the families") {
  auto cs = unit_torus(8);
  auto sy = CrossSection::synthetic_surface(2, {0.0});
  auto p2 = adapt_to_canonical({BvpId::BVP2, constant_phi(cs, 0.0), 1.0}, cs);
  auto p3 = adapt_to_canonical({BvpId::BVP3, constant_phi(cs, 0.6), 0.0}, cs);
  auto p4 = adapt_to_canonical({BvpId::BVP4, constant_phi(sy, 0.3), 0.0}, sy);
  for (double x : {0.1, 0.5, 2.0}) CHECK(p2.vmod(x) == doctest::Approx(std::log(1 + x)).epsilon(1e-15));
  for (double x : {-0.1, -1.0, -2.2}) {
    const double fac = -(p3.a / 24) * std::pow(x - XS, 3) * (x + XS);
    CHECK(std::exp(p3.vmod(x)) == doctest::Approx(fac).epsilon(1e-12));
    CHECK(std::exp(p3.vmod(x)) == doctest::Approx(profile(p3.model, x).ev).epsilon(1e-12));
    CHECK(std::exp(p4.vmod(x)) == doctest::Approx(profile(p4.model, x).ev).epsilon(1e-12));
  }
  CHECK(std::exp(p4.vmod(0.0)) == doctest::Approx(std::exp(0.3)).epsilon(1e-13));
}

TEST_CASE("recover_v") {
  auto cs = unit_torus(8);
  auto grid = TGrid::uniform(0, 4, 8);
  ScalarField u(grid, cs.dof(), 0.0);
  auto p1 = adapt_to_canonical({BvpId::BVP1, constant_phi(cs, 0.0), 0.0}, cs);
  auto r1 = recover_v(u, p1, cs);
  for (double x : r1.v.data) CHECK(x == 0.0);
  auto p2 = adapt_to_canonical({BvpId::BVP2, constant_phi(cs, 0.0), 1.0}, cs);
  ScalarField u2(TGrid::uniform(1, 3, 6), cs.dof(), 0.0);
  auto r2 = recover_v(u2, p2, cs);
  for (int i = 0; i < u2.grid.nodes(); ++i) {
    CHECK(r2.xi[i] == doctest::Approx(u2.grid.t(i) * u2.grid.t(i) - 1).epsilon(1e-14));
    CHECK(r2.v.at(i, 5) == doctest::Approx(std::log(1 + r2.xi[i])).epsilon(1e-14));
  }
  auto sy = CrossSection::synthetic_surface(2, {0.0, 1.0});
  auto p4 = adapt_to_canonical({BvpId::BVP4, constant_phi(sy, 0.0), 0.0}, sy);
  ScalarField u4(grid, 2, 0.0);
  u4.at(3, 1) = 0.25;
  auto r4 = recover_v(u4, p4, sy);
  CHECK(r4.v.at(3, 0) == doctest::Approx(p4.vmod(r4.xi[3])).epsilon(1e-14));
  CHECK(r4.v.at(3, 1) == 0.25);
}

TEST_CASE("v_mod derivatives against finite differences") {
  auto cs = CrossSection::flat_torus(Eigen::Matrix2d::Identity(), 4, 4);
  auto sy = CrossSection::synthetic_surface(2, {0.0, 2.0});
  for (BvpId id : {BvpId::BVP1, BvpId::BVP2, BvpId::BVP3, BvpId::BVP4}) {
    const CrossSection& c = id == BvpId::BVP4 ? sy : cs;
    BvpSpec spec;
    spec.id = id;
    spec.a = 1.3;
    spec.phi.assign(c.dof(), 0.0);
    auto p = adapt_to_canonical(spec, c);
    for (double t : {1.2, 1.7, 2.5}) {
      const double x = p.map.xi(t);
      for (int m = 1; m <= 3; ++m) {
        auto f = [&](double y) { return p.vmod_derivative(y, m - 1); };
        const double h = 1e-4 * std::max(0.1, std::min(1.0, std::abs(x - xi_star())));
        const double fd = (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
        CHECK(p.vmod_derivative(x, m) == doctest::Approx(fd).epsilon(1e-7).scale(1.0));
      }
    }
  }
}
