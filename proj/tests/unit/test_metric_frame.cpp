#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "toda/bvp.hpp"
#include "toda/metric_frame.hpp"
#include "toda/solver.hpp"

using namespace toda;
constexpr double kPi = std::numbers::pi;

namespace {

CrossSection torus(int n) { return CrossSection::flat_torus(Eigen::Matrix2d::Identity(), n, n); }

CanonicalProblem model_problem(BvpId id, const CrossSection& cs, double a = 1.0) {
  BvpSpec spec;
  spec.id = id;
  spec.a = a;
  spec.phi.assign(cs.dof(), 0.0);
  return adapt_to_canonical(spec, cs);
}

FrameSource model_source(const CanonicalProblem& p, const CrossSection& cs, double t0, double len, int n) {
  return frame_source(ScalarField(TGrid::uniform(t0, len, n), cs.dof(), 0.0), p);
}

struct Solved {
  ScalarField u;
  CanonicalProblem prob;
};

Solved bvp1_solution(const CrossSection& cs, double amp, double T, int n) {
  std::vector<double> phi(cs.dof());
  for (int i = 0; i < cs.nx(); ++i)
    for (int j = 0; j < cs.ny(); ++j) phi[i * cs.ny() + j] = amp * std::cos(2 * kPi * i / cs.nx());
  BvpSpec spec;
  spec.phi = phi;
  auto prob = adapt_to_canonical(spec, cs);
  auto res = solve(prob.profile, cs, prob.phi_normalized, TGrid::uniform(0.0, T, n));
  REQUIRE(res.report.converged());
  return {res.u, prob};
}

}  // namespace

TEST_CASE("compute_W on model data") {
  auto cs = torus(8);
  SUBCASE("constant v, Type I") {
    auto p = model_problem(BvpId::BVP1, cs);
    auto w = compute_W(model_source(p, cs, 0.0, 4.0, 40));
    for (double x : w.data) CHECK(x == doctest::Approx(1.0));
  }
  SUBCASE("BVP3 model: W = t^6/(2t^2-1)") {
    auto p = model_problem(BvpId::BVP3, cs);
    auto src = model_source(p, cs, 1.0, 3.0, 60);
    auto w = compute_W(src);
    for (int i = 0; i <= 60; i += 6) {
      const double t = src.u.grid.t(i);
      CHECK(w.at(i, 3) == doctest::Approx(std::pow(t, 6) / (2 * t * t - 1)).epsilon(1e-10));
    }
  }
  SUBCASE("BVP2 model: W = 1 - xi/(2(1+xi)) tends to 1/2") {
    auto p = model_problem(BvpId::BVP2, cs, 1.0);
    auto src = model_source(p, cs, 1.0, 30.0, 300);
    auto w = compute_W(src);
    for (int i = 0; i <= 300; i += 30) {
      const double xi = src.map.xi(src.u.grid.t(i));
      CHECK(w.at(i, 0) == doctest::Approx(1.0 - xi / (2 * (1 + xi))).epsilon(1e-12));
    }
    CHECK(w.at(300, 0) == doctest::Approx(0.5).epsilon(2e-3));
  }
}

TEST_CASE("hyperbolic model frame is exactly Einstein and ASD") {
  auto cs = torus(8);
  auto p = model_problem(BvpId::BVP1, cs);
  FrameOptions o;
  o.degree = 0;
  o.period = 1.0;
  auto f = assemble(model_source(p, cs, 0.0, 5.0, 50), cs, o);
  auto c = frame_curvature(f);
  CHECK(c.einstein_sup < 1e-10);
  CHECK(c.weyl_plus_sup < 1e-10);
  CHECK(c.bridge_sup < 1e-10);
  CHECK(f.degree_check == 0.0);
}

TEST_CASE("Type I a=1 model frame: Einstein, ASD, scalar-flat Kahler, connection data") {
  auto cs = torus(8);
  auto p = model_problem(BvpId::BVP2, cs, 1.0);
  auto f = assemble(model_source(p, cs, 1.0, 3.0, 120), cs);
  CHECK(f.flux == doctest::Approx(0.5));
  CHECK(f.period == doctest::Approx(0.5));  // a/(2 l), l = 1
  CHECK(std::abs(f.degree_check - 1.0) < 1e-8);
  CHECK(f.flux_deviation < 1e-6);
  auto c = frame_curvature(f);
  CHECK(c.einstein_sup < 1e-5);
  CHECK(c.weyl_plus_sup < 1e-5);
  CHECK(c.bridge_sup < 1e-5);
  double wm = 0.0;
  for (double x : c.weyl_minus) wm = std::max(wm, x);
  CHECK(wm > 1e-2);  // not conformally flat
}

TEST_CASE("curvature of a model frame converges at the t-order") {
  auto cs = torus(4);
  auto p = model_problem(BvpId::BVP2, cs, 1.0);
  for (int order : {4, 6}) {
    std::vector<double> e;
    const int n0 = order == 4 ? 20 : 40;
    for (int n : {n0, 2 * n0, 4 * n0}) {
      FrameOptions o;
      o.clip = 3;
      o.t_order = order;
      auto f = assemble(model_source(p, cs, 1.0, 2.0, n), cs, o);
      auto c = frame_curvature(f);
      // residual at the common node t = 1.5
      const int i = n / 4;
      auto it = std::find(c.t_index.begin(), c.t_index.end(), i);
      REQUIRE(it != c.t_index.end());
      e.push_back(c.einstein[(it - c.t_index.begin()) * c.dof]);
    }
    INFO("order ", order, " errors ", e[0], " ", e[1], " ", e[2]);
    CHECK(std::log2(e[0] / e[1]) > order - 0.5);
    CHECK(std::log2(e[1] / e[2]) > order - 0.5);
  }
}

TEST_CASE("Type II model frame: Einstein, s_g = xi, Weyl relation") {
  auto cs = torus(4);
  auto p = model_problem(BvpId::BVP3, cs);
  auto f = assemble(model_source(p, cs, 1.0, 2.0, 200), cs);
  auto c = frame_curvature(f);
  CHECK(c.einstein_sup < 1e-5);
  CHECK(c.bridge_sup < 1e-5);
  CHECK(c.weyl_relation_sup < 1e-5);
}

TEST_CASE("solved BVP1 frame") {
  auto cs = torus(16);
  auto sol = bvp1_solution(cs, 0.3, 6.0, 240);
  FrameOptions o;
  o.degree = 0;
  auto src = frame_source(sol.u, sol.prob);
  auto f = assemble(src, cs, o);
  CHECK(f.min_w > 0.0);
  CHECK(f.closure_residual < 2e-3);
  auto c = frame_curvature(f);
  CHECK(c.einstein_sup < 1e-4);
  CHECK(c.weyl_plus_sup < 1e-4);
  CHECK(c.bridge_sup < 1e-3);

  SUBCASE("serial and parallel kernels agree") {
    auto s = frame_curvature_serial(f);
    auto q = frame_curvature_parallel(f);
    REQUIRE(s.einstein.size() == q.einstein.size());
    for (std::size_t k = 0; k < s.einstein.size(); ++k) CHECK(s.einstein[k] == q.einstein[k]);
  }
  SUBCASE("gauge shift leaves curvature unchanged") {
    MetricFrame g = f;
    // A += d chi, chi = 0.3 sin(2 pi s1) cos(2 pi s2)
    for (int i = 0; i < g.grid.nodes(); ++i)
      for (int a = 0; a < cs.nx(); ++a)
        for (int b = 0; b < cs.ny(); ++b) {
          const double s1 = double(a) / cs.nx(), s2 = double(b) / cs.ny();
          const int k = a * cs.ny() + b;
          g.a1.at(i, k) += 0.3 * 2 * kPi * std::cos(2 * kPi * s1) * std::cos(2 * kPi * s2);
          g.a2.at(i, k) += -0.3 * 2 * kPi * std::sin(2 * kPi * s1) * std::sin(2 * kPi * s2);
        }
    auto cg = frame_curvature(g);
    for (std::size_t k = 0; k < c.einstein.size(); ++k) {
      CHECK(std::abs(cg.einstein[k] - c.einstein[k]) < 1e-9);
      CHECK(std::abs(cg.weyl_minus[k] - c.weyl_minus[k]) < 1e-9 * (1.0 + c.weyl_minus[k]));
    }
  }
  SUBCASE("cusp comparison is concave in r") {
    auto prof = cusp_comparison(src, cs, o);
    CHECK(prof.points > 50);
    CHECK(prof.concave);
  }
}

TEST_CASE("rescaled cross-section gives an isometric frame") {
  const double lam = 1.7;
  auto cs1 = torus(8);
  auto cs2 = CrossSection::flat_torus(lam * Eigen::Matrix2d::Identity(), 8, 8, false);
  auto p = model_problem(BvpId::BVP2, cs1, 1.0);
  auto src1 = model_source(p, cs1, 1.0, 2.0, 60);
  // arbitrary perturbation; the isometry does not need v to solve anything
  for (int i = 0; i < src1.u.grid.nodes(); ++i)
    for (int a = 0; a < cs1.nx(); ++a)
      for (int b = 0; b < cs1.ny(); ++b)
        src1.u.at(i, a * cs1.ny() + b) = 0.05 * std::exp(-src1.u.grid.t(i)) * std::cos(2 * kPi * a / cs1.nx());
  FrameSource src2 = src1;
  src2.vmod = [p, lam](double x, int m) { return p.vmod_derivative(x, m) - (m == 0 ? 2 * std::log(lam) : 0.0); };
  src2.flux = src1.flux / (lam * lam);
  FrameOptions o;
  o.check_closure = false;
  auto c1 = frame_curvature(assemble(src1, cs1, o));
  auto c2 = frame_curvature(assemble(src2, cs2, o));
  REQUIRE(c1.einstein.size() == c2.einstein.size());
  for (std::size_t k = 0; k < c1.weyl_minus.size(); k += 7) {
    CHECK(c2.weyl_minus[k] == doctest::Approx(c1.weyl_minus[k]).epsilon(1e-9));
    CHECK(c2.einstein[k] == doctest::Approx(c1.einstein[k]).epsilon(1e-7));
  }
  CHECK(c1.einstein_sup > 1e-4);
}

TEST_CASE("W <= 0 is reported with the node") {
  auto cs = torus(4);
  auto p = model_problem(BvpId::BVP1, cs);
  auto src = model_source(p, cs, 0.0, 2.0, 40);
  for (int i = 0; i <= 40; ++i)
    for (int k = 0; k < cs.dof(); ++k) src.u.at(i, k) = 5.0 * src.u.grid.t(i);  // W = 1 - 2.5 xi
  FrameOptions o;
  o.degree = 0;
  try {
    assemble(src, cs, o);
    FAIL("expected an invariant violation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvariantViolation);
    CHECK(std::string(e.what()).find("t-node") != std::string::npos);
  }
}

TEST_CASE("degree and flux consistency") {
  auto cs = torus(4);
  auto p1 = model_problem(BvpId::BVP1, cs);
  CHECK_THROWS_AS(assemble(model_source(p1, cs, 0.0, 2.0, 40), cs), Error);  // l = 1 with zero flux
  auto p2 = model_problem(BvpId::BVP2, cs, 1.0);
  FrameOptions o;
  o.degree = 0;
  CHECK_THROWS_AS(assemble(model_source(p2, cs, 1.0, 2.0, 40), cs, o), Error);
  o.degree = 3;
  auto f = assemble(model_source(p2, cs, 1.0, 2.0, 40), cs, o);
  CHECK(f.period == doctest::Approx(0.5 / 3));
  CHECK(std::abs(f.degree_check - 3.0) < 1e-8);
}

TEST_CASE("model against itself has zero cusp difference") {
  auto cs = torus(4);
  auto p = model_problem(BvpId::BVP2, cs, 1.0);
  auto prof = cusp_comparison(model_source(p, cs, 1.0, 4.0, 80), cs);
  CHECK(prof.points == 0);
}

TEST_CASE("solved BVP3 frame with nonzero flux satisfies the Weyl relation") {
  auto cs = torus(16);
  BvpSpec spec;
  spec.id = BvpId::BVP3;
  spec.phi.assign(cs.dof(), 0.0);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) spec.phi[i * 16 + j] = 0.3 * std::cos(2 * kPi * i / 16);
  auto prob = adapt_to_canonical(spec, cs);
  SolverOptions so;
  so.t_order = 6;
  auto res = solve(prob.profile, cs, prob.phi_normalized, TGrid::uniform(prob.map.t_start, 6.0, 480), so);
  REQUIRE(res.report.converged());
  FrameOptions o;
  o.t_order = 6;
  // the far slices are flat to roundoff relative to their mean flux
  auto f = assemble(frame_source(res.u, prob), cs, o);
  CHECK(f.min_w > 0.0);
  auto c = frame_curvature(f);
  CHECK(c.weyl_relation_sup < 1e-3);
  CHECK(c.einstein_sup < 1e-4);

  o.closure_tol = 1e-30;
  CHECK_THROWS_WITH_AS(assemble(frame_source(res.u, prob), cs, o), doctest::Contains("at t-node"), Error);
}

TEST_CASE("Sigma cusp end: log-profile is linear past the boundary layer") {
  auto sy = CrossSection::synthetic_surface(2, {0.0, 2.0, 6.0});
  auto p = adapt_to_canonical({BvpId::BVP4, {0.0, 0.4, -0.2}, 1.0}, sy);
  auto r = solve(p.profile, sy, p.phi_normalized, TGrid::uniform(p.map.t_start, 12.0, 240));
  REQUIRE(r.report.converged());
  FrameOptions o;
  o.degree = 0;
  auto prof = cusp_comparison(frame_source(r.u, p), sy, o);
  CHECK(prof.fit_from == prof.points / 2);
  CHECK(prof.linear);
  CHECK_FALSE(prof.concave);
  CHECK(prof.slope < -1.0);
  // the whole profile, boundary layer included, bends
  CHECK(prof.log_diff[prof.fit_from] - prof.log_diff[0] >
        prof.slope * (prof.r[prof.fit_from] - prof.r[0]) + 0.1);
}
