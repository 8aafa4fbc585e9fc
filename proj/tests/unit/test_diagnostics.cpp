#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "toda/diagnostics.hpp"
#include "toda/error.hpp"

using namespace toda;
constexpr double kPi = std::numbers::pi;

namespace {

CrossSection torus(int nx, int ny) { return CrossSection::flat_torus(Eigen::Matrix2d::Identity(), nx, ny); }

std::vector<double> field(const CrossSection& cs, double (*f)(double, double)) {
  std::vector<double> v(cs.dof());
  for (int i = 0; i < cs.nx(); ++i)
    for (int j = 0; j < cs.ny(); ++j) v[i * cs.ny() + j] = f(double(i) / cs.nx(), double(j) / cs.ny());
  return v;
}

std::vector<double> cos_x(const CrossSection& cs, double amp) {
  auto v = field(cs, [](double x, double) { return std::cos(2 * kPi * x); });
  for (double& x : v) x *= amp;
  return v;
}

}  // namespace

TEST_CASE("H^-1 energy of Fourier modes") {
  auto cs = torus(16, 16);
  CHECK(h_minus1_energy(cs, std::vector<double>(cs.dof(), 0.0)) == 0.0);
  // 1/2 |w|^2 / lambda with |cos|^2 = 1/2
  const auto c = field(cs, [](double x, double) { return std::cos(2 * kPi * x); });
  CHECK(h_minus1_energy(cs, c) == doctest::Approx(1.0 / (16 * kPi * kPi)).epsilon(1e-12));
  const auto s = field(cs, [](double, double y) { return std::sin(4 * kPi * y); });
  const double es = 1.0 / (4 * 16 * kPi * kPi);
  CHECK(h_minus1_energy(cs, s) == doctest::Approx(es).epsilon(1e-12));
  std::vector<double> sum(cs.dof());
  for (int k = 0; k < cs.dof(); ++k) sum[k] = c[k] + s[k];
  CHECK(h_minus1_energy(cs, sum) == doctest::Approx(1.0 / (16 * kPi * kPi) + es).epsilon(1e-12));

  auto bad = c;
  for (double& x : bad) x += 0.1;
  CHECK_THROWS_AS(h_minus1_energy(cs, bad), Error);
}

TEST_CASE("kappa2 root formula") {
  CHECK(kappa2(4.0, 0.0) == doctest::Approx(2.0).epsilon(1e-15));
  for (auto [k0, k1] : {std::pair{3.0, 0.5}, std::pair{1e-3, 40.0}, std::pair{79.0, 1e-8}}) {
    const double k2 = kappa2(k0, k1);
    CHECK(k2 > 0);
    CHECK(std::abs(k2 * k2 + k1 * k2 - k0) <= 4e-16 * std::max(k0, k1 * k2));
  }
}

TEST_CASE("energy trace") {
  auto cs = torus(16, 4);
  const auto grid = TGrid::uniform(0.0, 2.0, 200);
  SUBCASE("identical fields give a zero trace") {
    auto p = adapt_to_canonical({BvpId::BVP1, cos_x(cs, 0.3), 0.0}, cs);
    auto r = solve(p.profile, cs, p.phi_normalized, grid);
    REQUIRE(r.report.converged());
    auto tr = energy_trace(p.profile, cs, r.u, r.u);
    for (double e : tr.e) CHECK(e == 0.0);
  }
  SUBCASE("BVP1 pair obeys the inequality, monotonicity and the exponential bound") {
    auto p1 = adapt_to_canonical({BvpId::BVP1, cos_x(cs, 0.3), 0.0}, cs);
    auto p0 = adapt_to_canonical({BvpId::BVP1, std::vector<double>(cs.dof(), 0.0), 0.0}, cs);
    auto r1 = solve(p1.profile, cs, p1.phi_normalized, grid);
    auto r0 = solve(p0.profile, cs, p0.phi_normalized, grid);
    REQUIRE(r1.report.converged());
    auto tr = energy_trace(p1.profile, cs, r1.u, r0.u);
    // BVP1: B = 0 so kappa1 = 0 and kappa2 = sqrt(kappa0)
    CHECK(tr.kappa1 == 0.0);
    CHECK(tr.kappa2 == doctest::Approx(std::sqrt(tr.kappa0)));
    const double a = tr.a_prime;
    CHECK(tr.kappa0 == doctest::Approx(2 * 4 * kPi * kPi * std::exp(-a) / std::exp(p1.phibar)));
    CHECK(tr.e[0] > 1e-4);
    CHECK(tr.inequality_ok);
    CHECK(tr.monotone);
    CHECK(tr.bound_ok);
    for (std::size_t i = 0; i < tr.e.size(); ++i) CHECK(tr.e[i] <= tr.bound[i] + tr.slack);
  }
  SUBCASE("mass drift is rejected") {
    ScalarField u(grid, cs.dof(), 0.1);
    CHECK_THROWS_AS(energy_trace(adapt_to_canonical({BvpId::BVP1, cos_x(cs, 0.0), 0.0}, cs).profile, cs, u, u), Error);
  }
}

TEST_CASE("stability experiment") {
  auto cs = torus(16, 4);
  const auto dir = cos_x(cs, 1.0);
  SUBCASE("equal data: D = 0") {
    const std::vector<double> eps{0.0};
    auto r = stability_experiment({BvpId::BVP1, cos_x(cs, 0.2), 0.0}, dir, eps, cs, TGrid::uniform(0, 2, 80));
    for (double d : r.rungs[0].profile) CHECK(d == 0.0);
  }
  SUBCASE("BVP1 ladder is in the linear regime") {
    const std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
    auto r = stability_experiment({BvpId::BVP1, std::vector<double>(cs.dof(), 0.0), 0.0}, dir, eps, cs,
                                  TGrid::uniform(0, 2, 160));
    CHECK(r.rate_positive);
    // lowest mode of the linearization decays like e^{-2 pi t}
    CHECK(r.delta == doctest::Approx(2 * kPi).epsilon(0.05));
    CHECK(r.exponent == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r.quarter_power_ok);
  }
  SUBCASE("BVP3 cos-mode pair decays") {
    const std::vector<double> eps{0.2};
    auto r = stability_experiment({BvpId::BVP3, cos_x(cs, 0.3), 0.0}, dir, eps, cs, TGrid::uniform(1, 4, 120));
    CHECK(r.rungs[0].fit.meaningful);
    CHECK(r.rate_positive);
  }
}

TEST_CASE("degeneration family and pointed limits") {
  auto cs = torus(16, 4);
  const auto phi0 = cos_x(cs, 0.3);
  const std::vector<int> ns{2, 3, 4, 5};
  DegenerationOptions o;
  o.n_t = 240;
  auto fam = degeneration_family(cs, phi0, ns, o);
  REQUIRE(fam.failure.empty());
  REQUIRE(fam.members.size() == 4);
  CHECK(fam.monotone);
  for (std::size_t i = 1; i < fam.members.size(); ++i)
    CHECK(fam.members[i].window_error < fam.members[i - 1].window_error);

  const auto& last = fam.members.back();
  auto fit = rescaled_limit_fit(last, 0);
  CHECK(fit.a > 0);
  CHECK(fit.b > 0);
  // mean mass gives a = 1 exactly; the base point sees phi0(0) = 0.3
  CHECK(fit.a == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fit.b == doctest::Approx(std::exp(0.3)).epsilon(0.05));
  auto bu = blow_up_comparison(last, 0, fit);
  CHECK(bu.max_dev < 0.05);

  SUBCASE("classifier") {
    auto tag = [&](LimitRegime r, double (*xi)(int)) {
      return pointed_limit_classifier(fam, {r, [xi](int n) { return xi(n); }}, 0);
    };
    auto cusp = tag(LimitRegime::XiToConst, [](int) { return 1.0; });
    CHECK(cusp.tag == LimitTag::ComplexHyperbolicCusp);
    CHECK(cusp.regime_consistent);
    auto bl = tag(LimitRegime::XiENToConst, [](int n) { return std::exp(-double(n)); });
    CHECK(bl.tag == LimitTag::BlowUpLimit);
    CHECK(bl.fitted_c == doctest::Approx(std::exp(0.3 - 0.0)).epsilon(0.2));
    auto rh = tag(LimitRegime::XiENToZero, [](int n) { return std::exp(-2.0 * n); });
    CHECK(rh.tag == LimitTag::RealHyperbolic);
    CHECK(rh.dev_rh < 0.5 * rh.dev_bu);
    CHECK_THROWS_AS(tag(LimitRegime::XiToInf, [](int) { return 1e9; }), Error);
  }
}
