#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "toda/dehn.hpp"
#include "toda/error.hpp"
#include "toda/numeric.hpp"
#include "toda/solver.hpp"

using namespace toda;
constexpr double kPi = std::numbers::pi;

namespace {

MetricFrame bvp1_frame(double amp, double T, int n, int m = 8) {
  auto cs = CrossSection::flat_torus(Eigen::Matrix2d::Identity(), m, m);
  BvpSpec spec;
  spec.phi.assign(cs.dof(), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) spec.phi[i * m + j] = amp * std::cos(2 * kPi * i / m);
  auto prob = adapt_to_canonical(spec, cs);
  auto res = solve(prob.profile, cs, prob.phi_normalized, TGrid::uniform(0.0, T, n));
  REQUIRE(res.report.converged());
  FrameOptions o;
  o.degree = 0;
  return assemble(frame_source(res.u, prob), cs, o);
}

}  // namespace

TEST_CASE("black hole invariants") {
  for (double a : {1.0, 1e-3, 27.0}) {
    BlackHole bh{a};
    const double sp = bh.s_plus();
    CHECK(sp * sp * sp == doctest::Approx(a).epsilon(1e-14));
    CHECK(std::abs(bh.V(sp)) < 1e-14 * sp * sp);
    CHECK(bh.dV(sp) == doctest::Approx(3 * sp).epsilon(1e-14));
    CHECK(bh.beta() * bh.dV(sp) / 2 == doctest::Approx(2 * kPi).epsilon(1e-14));
  }
}

TEST_CASE("black hole and hyperbolic cusp are Einstein at 4th order") {
  for (double a : {1.0, 0.05}) {
    BlackHole bh{a};
    const double sp = bh.s_plus();
    std::vector<curv::Vec4> pts;
    for (double f : {1.5, 3.0, 10.0}) pts.emplace_back(f * sp, 0.0, 0.0, 0.0);
    auto lad = curv::einstein_fd_ladder([&](const curv::Vec4& x) { return bh.metric(x); }, pts,
                                        curv::Vec4(0.05 * sp, 0, 0, 0), {true, false, false, false}, 4);
    INFO("a ", a, " residuals ", lad.residual[0], " ", lad.residual[3]);
    for (double r : lad.rate) CHECK(r == doctest::Approx(4.0).epsilon(0.1));
    CHECK(lad.residual.back() < 1e-6);
  }
  std::vector<curv::Vec4> pts{{0.2, 0, 0, 0}, {1.0, 0, 0, 0}, {5.0, 0, 0, 0}};
  auto lad = curv::einstein_fd_ladder(curv::hyperbolic_cusp, pts, curv::Vec4(0.01, 0, 0, 0),
                                      {true, false, false, false}, 4);
  // relative steps differ per point; the smallest s dominates
  for (double r : lad.rate) CHECK(r == doctest::Approx(4.0).epsilon(0.1));
  CHECK(lad.residual.back() < 1e-6);
}

TEST_CASE("twisted Sigma cusp residual decays like e^{-2r}") {
  std::vector<double> r, lr;
  for (double rr = 1.0; rr <= 7.0; rr += 0.5) {
    const curv::Vec4 x(rr, 0.0, 0.3, 1.2);
    const auto pc = curv::evaluate(curv::fd_jet(curv::sigma_cusp_twisted, x, curv::Vec4(1e-3, 0, 0, 1e-3),
                                                {true, false, false, true}));
    r.push_back(rr);
    lr.push_back(std::log(pc.einstein));
  }
  auto fit = num::fit_line(r, lr);
  CHECK(fit.slope == doctest::Approx(-2.0).epsilon(0.05));
  CHECK(fit.rms < 0.05);
}

TEST_CASE("asymptotic agreement with the hyperbolic metric") {
  BlackHole bh{0.3};
  const double sp = bh.s_plus();
  double cmax = 0.0;
  for (int j = 0; j <= 80; ++j) {
    const double s = sp * (2.0 + 8.0 * j / 80.0);
    const curv::Vec4 x(s, 0, 0, 0);
    const curv::Mat4 h = curv::hyperbolic_cusp(x), d = bh.metric(x) - h;
    // |d|_h with h diagonal
    double n2 = 0.0;
    for (int p = 0; p < 4; ++p)
      for (int q = 0; q < 4; ++q) n2 += d(p, q) * d(p, q) / (h(p, p) * h(q, q));
    CHECK(bh.deviation(s) == doctest::Approx(std::sqrt(n2)).epsilon(1e-12));
    cmax = std::max(cmax, std::sqrt(n2) * s * s * s / bh.a);
  }
  // at s = 2 s_plus: q = 1/8, sqrt((8/7 - 1)^2 / q^2 + 1)
  CHECK(cmax == doctest::Approx(std::hypot(8.0 / 7.0, 1.0)).epsilon(1e-12));
}

TEST_CASE("match_parameters") {
  SUBCASE("defining relation and consistency") {
    for (double R : {0.5, 5.0, 20.0})
      for (double l : {0.1, 3.0, 1e3, 1e6}) {
        auto m = match_parameters(l, R);
        CHECK(m.residual <= 1e-12);
        CHECK(m.consistency <= 1e-12);
        CHECK(m.a > 0.0);
        CHECK(m.a < std::exp(-3 * R));
        // x l = (4 pi / 3) sqrt(1 - x^3) from the relation itself
        CHECK(m.x * l == doctest::Approx(4 * kPi / 3 * std::sqrt(1 - std::pow(m.x, 3))).epsilon(1e-13));
      }
  }
  SUBCASE("s_plus e^R l tends to 4 pi / 3") {
    double prev = 1e9;
    for (double l : {4.0, 16.0, 64.0, 256.0}) {
      auto m = match_parameters(l, 3.0);
      const double gap = std::abs(m.s_plus * std::exp(3.0) * l / (4 * kPi / 3) - 1.0);
      CHECK(gap < prev);
      prev = gap;
    }
    CHECK(prev < 1e-5);
  }
  SUBCASE("a decreases in R at fixed l") {
    double prev = 1.0;
    for (double R : {1.0, 2.0, 4.0, 8.0}) {
      const double a = match_parameters(50.0, R).a;
      CHECK(a < prev);
      prev = a;
    }
  }
  CHECK_THROWS_AS(match_parameters(-1.0, 2.0), Error);
  CHECK_THROWS_AS(match_parameters(1.0, std::nan("")), Error);
}

TEST_CASE("matching lattice") {
  Eigen::Matrix3d basis;
  basis << 3.0, 0.4, -1.1,  //
      1.0, 2.0, 0.3,        //
      -0.5, 0.2, 1.7;
  const double R = 4.0;
  auto lm = match_lattice(basis, R);
  CHECK(lm.match.l == doctest::Approx(std::exp(-R) * basis.col(0).norm()).epsilon(1e-15));
  CHECK(lm.length_gap <= 1e-10);
  CHECK(lm.angle_gap <= 1e-10);
  CHECK(lm.sigma_gap <= 1e-12);
  // independent Gram of the black hole generators in the slice metric
  BlackHole bh{lm.match.a};
  const double e = std::exp(-R);
  Eigen::Matrix3d slice = Eigen::Vector3d(bh.V(e), e * e, e * e).asDiagonal();
  Eigen::Matrix3d g = lm.bh_lattice.transpose() * slice * lm.bh_lattice;
  Eigen::Matrix3d gc = e * e * basis.transpose() * basis;
  CHECK((g - gc).norm() <= 1e-10 * gc.norm());
}

TEST_CASE("cutoff profile") {
  CHECK(cutoff(-10.0) == 1.0);
  CHECK(cutoff(-30.0) == 1.0);
  CHECK(cutoff(10.0) == 0.0);
  CHECK(cutoff(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (double x : {-9.0, -3.3, 0.7, 8.1}) {
    CHECK(cutoff(x) + cutoff(-x) == doctest::Approx(1.0).epsilon(1e-14));
    const double h = 1e-3;
    CHECK(cutoff(x, 1) == doctest::Approx((cutoff(x + h) - cutoff(x - h)) / (2 * h)).epsilon(1e-6));
    CHECK(cutoff(x, 2) == doctest::Approx((cutoff(x + h, 1) - cutoff(x - h, 1)) / (2 * h)).epsilon(1e-5));
  }
  for (double x : {-10.0, 10.0}) {
    CHECK(cutoff(x, 1) == 0.0);
    CHECK(cutoff(x, 2) == 0.0);
  }
}

TEST_CASE("glued metric defect") {
  auto f = bvp1_frame(0.3, 6.0, 240);
  SUBCASE("pure black hole and pure cusp are Einstein") {
    for (auto mode : {CutoffMode::One, CutoffMode::Zero}) {
      GluedOptions o;
      o.mode = mode;
      auto g = glued_defect(f, 20.0, 4e5, o);
      CHECK(g.grid_samples == 0);
      CHECK(g.tail_deviation < 1e-10);
      CHECK(g.band_sup < 1e-12);
      CHECK(g.outside_sup < 1e-12);
    }
  }
  SUBCASE("defect lives in the band and scales like l^-3") {
    std::vector<double> ll, ld, lw;
    for (double l : {2e5, 4e5, 8e5, 1.6e6}) {
      auto g = glued_defect(f, 20.0, l);
      CHECK(g.supported_in_band);
      CHECK(g.outside_sup < 1e-12);
      CHECK(g.band_sup > 1e3 * g.outside_sup);
      ll.push_back(std::log(l));
      ld.push_back(std::log(g.band_sup));
      lw.push_back(std::log(g.weighted_sup));
    }
    CHECK(num::fit_line(ll, ld).slope == doctest::Approx(-3.0).epsilon(0.03));
    CHECK(num::fit_line(ll, lw).slope == doctest::Approx(-2.0).epsilon(0.03));  // delta = 1
  }
  SUBCASE("zero cutoff inside the grid reproduces the frame residual") {
    GluedOptions o;
    o.mode = CutoffMode::Zero;
    auto g = glued_defect(f, 10.0, 4e5, o);
    REQUIRE(g.grid_samples > 50);
    auto c = frame_curvature(f);
    for (std::size_t j = 0; j < g.rho.size(); ++j) {
      if (!g.in_grid[j]) continue;
      const int i = static_cast<int>(std::lround((std::exp(10.0 - g.rho[j]) - f.grid.t(0)) / f.grid.h));
      auto it = std::find(c.t_index.begin(), c.t_index.end(), i);
      REQUIRE(it != c.t_index.end());
      const auto row = it - c.t_index.begin();
      double sup = 0.0;
      for (int k = 0; k < c.dof; ++k) sup = std::max(sup, c.einstein[row * c.dof + k]);
      CHECK(g.defect[j] == doctest::Approx(sup).epsilon(1e-10));
    }
  }
  SUBCASE("band must be covered") {
    CHECK_THROWS_AS(glued_defect(f, 20.0, 1e4), Error);  // reaches the horizon
    auto rough = f;
    for (int k = 0; k < rough.cs.dof(); ++k) rough.u.at(rough.last_node(), k) = 1e-6;
    CHECK_THROWS_WITH_AS(glued_defect(rough, 20.0, 4e5), doctest::Contains("band outside the cusp_frame grid"), Error);
    CHECK_THROWS_WITH_AS(glued_defect(f, 1.0, 4e5), doctest::Contains("band outside"), Error);
  }
}
