#include "toda/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "toda/decay.hpp"
#include "toda/error.hpp"
#include "toda/numeric.hpp"

namespace toda {

double h_minus1_energy(const CrossSection& cs, std::span<const double> w) {
  if (!cs.has_zero_mean(w)) fail(ErrorCode::InvalidInput, "H^-1 energy needs a mean-zero slice");
  if (num::sup_abs(w) == 0.0) return 0.0;
  const auto phi = cs.solve_poisson_meanzero(w);
  return 0.5 * cs.inner(w, phi);
}

double kappa2(double kappa0, double kappa1) {
  require(kappa0 >= 0.0 && kappa1 >= 0.0, "kappa0, kappa1 must be nonnegative");
  // (sqrt(k1^2 + 4 k0) - k1) / 2 without cancellation
  const double r = std::sqrt(kappa1 * kappa1 + 4.0 * kappa0);
  return r + kappa1 > 0.0 ? 2.0 * kappa0 / (r + kappa1) : 0.0;
}

namespace {

std::vector<double> exp_slice(const CrossSection& cs, std::span<const double> u) {
  std::vector<double> e(u.size());
  cs.exp_field(u, e);
  return e;
}

double field_sup(const CrossSection& cs, const ScalarField& u) {
  double m = 0.0;
  for (int i = 0; i < u.grid.nodes(); ++i) m = std::max(m, cs.sup_norm(u.slice(i)));
  return m;
}

}  // namespace

EnergyTrace energy_trace(const CoefficientProfile& profile, const CrossSection& cs, const ScalarField& u1,
                         const ScalarField& u2, const EnergyOptions& opts) {
  require(u1.grid.n == u2.grid.n && u1.grid.t0 == u2.grid.t0 && u1.grid.h == u2.grid.h,
          "energy trace needs both fields on the same grid");
  require(u1.dof == cs.dof() && u2.dof == cs.dof(), "field size does not match the cross-section");
  for (const auto* u : {&u1, &u2}) {
    const double drift = mass_drift(cs, *u);
    if (!(drift <= opts.mass_tol))
      fail(ErrorCode::InvariantViolation,
           "slice mass drift " + num::format_double(drift) + " exceeds " + num::format_double(opts.mass_tol));
  }
  const TGrid& g = u1.grid;
  const int nt = g.nodes();
  EnergyTrace tr;
  tr.t.resize(nt);
  tr.e.resize(nt);
  for (int i = 0; i < nt; ++i) {
    tr.t[i] = g.t(i);
    auto e1 = exp_slice(cs, u1.slice(i));
    const auto e2 = exp_slice(cs, u2.slice(i));
    for (std::size_t k = 0; k < e1.size(); ++k) e1[k] -= e2[k];
    // remove the mass drift left by the solver (checked above)
    const double m = cs.mean(e1);
    if (cs.is_torus()) {
      for (double& x : e1) x -= m;
    } else {
      e1[0] -= m;
    }
    tr.e[i] = h_minus1_energy(cs, e1);
  }

  const double h = g.h;
  tr.d1.assign(nt, 0.0);
  tr.d2.assign(nt, 0.0);
  for (int i = 1; i + 1 < nt; ++i) {
    tr.d1[i] = (tr.e[i + 1] - tr.e[i - 1]) / (2.0 * h);
    tr.d2[i] = (tr.e[i + 1] - 2.0 * tr.e[i] + tr.e[i - 1]) / (h * h);
  }
  if (nt >= 4) {
    tr.d1[0] = (-3.0 * tr.e[0] + 4.0 * tr.e[1] - tr.e[2]) / (2.0 * h);
    tr.d1[nt - 1] = (3.0 * tr.e[nt - 1] - 4.0 * tr.e[nt - 2] + tr.e[nt - 3]) / (2.0 * h);
    tr.d2[0] = (2.0 * tr.e[0] - 5.0 * tr.e[1] + 4.0 * tr.e[2] - tr.e[3]) / (h * h);
    tr.d2[nt - 1] = (2.0 * tr.e[nt - 1] - 5.0 * tr.e[nt - 2] + 4.0 * tr.e[nt - 3] - tr.e[nt - 4]) / (h * h);
  }

  const auto co = profile.sample(g);
  const double sup_psi = *std::max_element(co.psi.begin(), co.psi.end());
  const double inf_psi = *std::min_element(co.psi.begin(), co.psi.end());
  double sup_b = 0.0;
  for (double b : co.b) sup_b = std::max(sup_b, std::abs(b));
  tr.a_prime = std::max(field_sup(cs, u1), field_sup(cs, u2));
  tr.kappa0 = 2.0 * cs.lambda1() * std::exp(-tr.a_prime) / sup_psi;
  tr.kappa1 = sup_b / inf_psi;
  tr.kappa2 = kappa2(tr.kappa0, tr.kappa1);

  const double emax = *std::max_element(tr.e.begin(), tr.e.end());
  tr.slack = 10.0 * h * h * emax;
  tr.bound.resize(nt);
  tr.inequality_gap = -std::numeric_limits<double>::infinity();
  tr.monotone_gap = -std::numeric_limits<double>::infinity();
  tr.bound_gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < nt; ++i) {
    tr.bound[i] = tr.e[0] * std::exp(-tr.kappa2 * (tr.t[i] - tr.t[0]));
    tr.bound_gap = std::max(tr.bound_gap, tr.e[i] - tr.bound[i]);
    if (i + 1 < nt) tr.monotone_gap = std::max(tr.monotone_gap, tr.e[i + 1] - tr.e[i]);
    if (i > 0 && i + 1 < nt)
      tr.inequality_gap =
          std::max(tr.inequality_gap, tr.kappa0 * tr.e[i] - tr.kappa1 * std::abs(tr.d1[i]) - tr.d2[i]);
  }
  tr.inequality_ok = tr.inequality_gap <= tr.slack;
  tr.monotone = tr.monotone_gap <= tr.slack;
  tr.bound_ok = tr.bound_gap <= tr.slack;
  return tr;
}

StabilityResult stability_experiment(const BvpSpec& base, std::span<const double> direction,
                                     std::span<const double> eps_list, const CrossSection& cs, const TGrid& grid,
                                     const SolverOptions& opts) {
  require(direction.size() == base.phi.size(), "perturbation direction does not match the boundary data");
  require(!eps_list.empty(), "empty eps ladder");
  const auto p1 = adapt_to_canonical(base, cs);
  auto r1 = solve(p1.profile, cs, p1.phi_normalized, grid, opts);
  if (!r1.report.converged())
    fail(ErrorCode::NonConvergence, "stability base solve failed: " + r1.report.message);

  StabilityResult res;
  res.grid = grid;
  for (double eps : eps_list) {
    BvpSpec s2 = base;
    for (std::size_t k = 0; k < s2.phi.size(); ++k) s2.phi[k] += eps * direction[k];
    const auto p2 = adapt_to_canonical(s2, cs);
    auto r2 = solve(p2.profile, cs, p2.phi_normalized, grid, opts);
    if (!r2.report.converged())
      fail(ErrorCode::NonConvergence,
           "stability solve failed at eps = " + num::format_double(eps) + ": " + r2.report.message);
    StabilityRung rung;
    rung.eps = eps;
    std::vector<double> dphi(p1.phi_normalized.size());
    for (std::size_t k = 0; k < dphi.size(); ++k) dphi[k] = p1.phi_normalized[k] - p2.phi_normalized[k];
    rung.data_norm = cs.sup_norm(dphi);
    rung.profile.resize(grid.nodes());
    std::vector<double> d(cs.dof());
    for (int i = 0; i < grid.nodes(); ++i) {
      auto a = r1.u.slice(i);
      auto b = r2.u.slice(i);
      for (int k = 0; k < cs.dof(); ++k) d[k] = a[k] - b[k];
      rung.profile[i] = cs.sup_norm(d);
    }
    rung.fit = fit_decay_profile(rung.profile, grid, p1.map, RateModel::ExpT);
    res.rungs.push_back(std::move(rung));
  }

  res.delta = std::numeric_limits<double>::infinity();
  for (const auto& r : res.rungs)
    if (r.fit.meaningful) res.delta = std::min(res.delta, r.fit.delta);
  if (!std::isfinite(res.delta)) res.delta = 0.0;
  res.rate_positive = res.delta > 0.0;

  const int last = static_cast<int>(std::floor(0.9 * grid.n));
  std::vector<double> lx, ly;
  for (auto& r : res.rungs) {
    for (int i = 0; i <= last; ++i)
      r.amplitude = std::max(r.amplitude, r.profile[i] * std::exp(res.delta * (grid.t(i) - grid.t0)));
    if (r.amplitude > 0.0 && r.data_norm > 0.0) {
      lx.push_back(std::log(r.data_norm));
      ly.push_back(std::log(r.amplitude));
    }
  }
  if (lx.size() >= 2) {
    res.exponent = num::fit_line(lx, ly).slope;
    res.quarter_power_ok = res.exponent >= 0.25 - 0.1;
  }
  return res;
}

namespace {

/// Lagrange value and first derivative of column k at t from 7 nearby nodes.
std::pair<double, double> interp_column(const ScalarField& u, int k, double t) {
  const TGrid& g = u.grid;
  const int p = std::min(6, g.n);
  const double x = (t - g.t0) / g.h;
  require(x >= -1e-9 && x <= g.n + 1e-9, "interpolation point outside the t-grid");
  const int lo = std::clamp(static_cast<int>(std::floor(x)) - p / 2, 0, g.n - p);
  std::vector<double> nodes(p + 1);
  for (int j = 0; j <= p; ++j) nodes[j] = lo + j;
  const auto w = num::fd_weights(x, nodes, 1);
  double v = 0.0, d = 0.0;
  for (int j = 0; j <= p; ++j) {
    v += w[0][j] * u.at(lo + j, k);
    d += w[1][j] * u.at(lo + j, k);
  }
  return {v, d / g.h};
}

}  // namespace

PointValue member_value(const DegenerationMember& m, int k, double xi) {
  const double t = m.prob.map.t_of_xi(xi);
  const auto [u, ut] = interp_column(m.u, k, t);
  PointValue pv;
  pv.v = u + m.prob.vmod(xi);
  pv.v_xi = ut / m.prob.map.dxi(t) + m.prob.dvmod(xi);
  return pv;
}

DegenerationResult degeneration_family(const CrossSection& cs, std::span<const double> phi0,
                                       std::span<const int> n_list, const DegenerationOptions& opts) {
  require(cs.is_torus(), "degeneration experiments use a flat torus");
  require(static_cast<int>(phi0.size()) == cs.dof(), "phi0 size does not match the cross-section");
  require(opts.xi_lo > 0.0 && opts.xi_hi > opts.xi_lo, "window needs 0 < xi_lo < xi_hi");
  DegenerationResult res;
  for (int n : n_list) {
    BvpSpec spec;
    spec.id = BvpId::BVP2;
    spec.a = 1.0;
    spec.phi.assign(phi0.begin(), phi0.end());
    for (double& x : spec.phi) x -= n;
    DegenerationMember m;
    m.n_shift = n;
    m.prob = adapt_to_canonical(spec, cs);
    const double t_hi = m.prob.map.t_of_xi(opts.xi_hi);
    const TGrid grid = TGrid::uniform(m.prob.map.t_start, opts.t_factor * (t_hi - m.prob.map.t_start), opts.n_t);
    auto r = solve(m.prob.profile, cs, m.prob.phi_normalized, grid, opts.solver);
    if (!r.report.converged()) {
      res.failure = "N = " + std::to_string(n) + ": " + r.report.message;
      break;
    }
    m.u = std::move(r.u);
    m.report = std::move(r.report);
    for (int j = 0; j < opts.window_points; ++j) {
      const double xi = opts.xi_lo + (opts.xi_hi - opts.xi_lo) * j / std::max(1, opts.window_points - 1);
      for (int k = 0; k < cs.dof(); ++k)
        m.window_error = std::max(m.window_error, std::abs(member_value(m, k, xi).v - std::log(xi)));
    }
    res.members.push_back(std::move(m));
  }
  const auto& mem = res.members;
  res.monotone = mem.size() >= 2;
  for (std::size_t j = 1; j < mem.size(); ++j)
    if (!(mem[j].window_error < mem[j - 1].window_error)) res.monotone = false;
  std::size_t first = mem.empty() ? 0 : mem.size() - 1;
  while (first > 0 && mem[first].window_error <= mem[first - 1].window_error) --first;
  res.threshold_n = mem.empty() ? 0 : mem[first].n_shift;
  return res;
}

RescaledFit rescaled_limit_fit(const DegenerationMember& m, int k, double zeta_max, int points) {
  require(zeta_max > 0.0 && points >= 3, "fit needs zeta_max > 0 and at least 3 points");
  std::vector<double> z(points), y(points);
  const double s = std::exp(-static_cast<double>(m.n_shift));
  for (int j = 0; j < points; ++j) {
    z[j] = zeta_max * j / (points - 1);
    y[j] = std::exp(member_value(m, k, s * z[j]).v + m.n_shift);
  }
  const auto lf = num::fit_line(z, y);
  return {lf.slope, lf.intercept, lf.rms, lf.points};
}

BlowUpComparison blow_up_comparison(const DegenerationMember& m, int k, const RescaledFit& fit, double z_lo,
                                    double z_hi, int points) {
  require(fit.a > 0.0 && fit.b > 0.0, "blow-up comparison needs a, b > 0");
  BlowUpComparison c;
  const double s = std::exp(-static_cast<double>(m.n_shift));
  for (int j = 0; j < points; ++j) {
    const double z = z_lo + (z_hi - z_lo) * j / std::max(1, points - 1);
    const double zeta = fit.b / fit.a * std::exp(z);
    const double xi = s * zeta;
    const auto pv = member_value(m, k, xi);
    const double w = 1.0 - 0.5 * xi * pv.v_xi;
    const double ez = std::exp(z);
    const double w_inf = (1.0 + 0.5 * ez) / (1.0 + ez);
    const double base = w * std::exp(pv.v + m.n_shift) / fit.b;  // times e^{-2z}
    c.z.push_back(z);
    c.dev_zz = std::max(c.dev_zz, std::abs(w / w_inf - 1.0));
    c.dev_fiber = std::max(c.dev_fiber, std::abs(w_inf / w - 1.0));
    c.dev_base = std::max(c.dev_base, std::abs(base / (1.0 + 0.5 * ez) - 1.0));
  }
  // d eta = (1/(2a)) dx dy in the normalized chart; the limit has 1/2
  c.dev_twist = std::abs(1.0 / fit.a - 1.0);
  c.max_dev = std::max({c.dev_zz, c.dev_fiber, c.dev_base, c.dev_twist});
  return c;
}

std::string to_string(LimitTag t) {
  switch (t) {
    case LimitTag::RealHyperbolic: return "real_hyperbolic";
    case LimitTag::BlowUpLimit: return "blow_up_limit";
    case LimitTag::ComplexHyperbolic: return "complex_hyperbolic";
    case LimitTag::ComplexHyperbolicCusp: return "complex_hyperbolic_cusp";
    case LimitTag::Line: return "line";
    case LimitTag::Ambiguous: return "ambiguous";
  }
  return "?";
}

std::string to_string(LimitRegime r) {
  switch (r) {
    case LimitRegime::XiENToZero: return "xi_eN_to_0";
    case LimitRegime::XiENToConst: return "xi_eN_to_c";
    case LimitRegime::XiENToInfXiToZero: return "xi_eN_to_inf_xi_to_0";
    case LimitRegime::XiToConst: return "xi_to_c";
    case LimitRegime::XiToInf: return "xi_to_inf";
  }
  return "?";
}

PointedLimit pointed_limit_classifier(const DegenerationResult& fam, const BasepointRule& rule, int k) {
  require(!fam.members.empty(), "classifier needs at least one solved member");
  require(static_cast<bool>(rule.xi), "basepoint rule needs xi(N)");
  const auto& m = fam.members.back();
  const double lam = rule.xi(m.n_shift);
  require(lam > 0.0, "basepoint xi must be positive");
  const TGrid& g = m.u.grid;
  const double xi_max = m.prob.map.xi(g.t(g.n));
  if (!(lam * std::exp(1.0) <= xi_max))
    fail(ErrorCode::InvalidInput, "base point ball leaves the solved range (xi up to " + num::format_double(xi_max) + ")");

  // rescaled chart zeta = xi / lambda on the ball z = log zeta in [-1, 1]
  const int np = 21;
  std::vector<double> z(np), w(np), e(np);
  const double v0 = member_value(m, k, lam).v;
  for (int j = 0; j < np; ++j) {
    z[j] = -1.0 + 2.0 * j / (np - 1);
    const double xi = lam * std::exp(z[j]);
    const auto pv = member_value(m, k, xi);
    w[j] = 1.0 - 0.5 * xi * pv.v_xi;
    e[j] = std::exp(pv.v - v0);
  }
  auto deviation = [&](auto wm, auto em) {
    double d = 0.0;
    for (int j = 0; j < np; ++j) {
      d = std::max(d, std::abs(w[j] / wm(z[j]) - 1.0));
      d = std::max(d, std::abs(e[j] / em(z[j]) - 1.0));
    }
    return d;
  };
  PointedLimit pl;
  pl.dev_rh = deviation([](double) { return 1.0; }, [](double) { return 1.0; });
  pl.dev_ch = deviation([](double) { return 0.5; }, [](double x) { return std::exp(x); });
  pl.dev_bu = std::numeric_limits<double>::infinity();
  // blow-up family over a bounded parameter range; its ends approach the other two models
  for (int j = 0; j <= 600; ++j) {
    const double c = std::exp(std::log(0.05) + (std::log(20.0) - std::log(0.05)) * j / 600.0);
    const double d = deviation([c](double x) { return (c + 0.5 * std::exp(x)) / (c + std::exp(x)); },
                               [c](double x) { return (c + std::exp(x)) / (c + 1.0); });
    if (d < pl.dev_bu) {
      pl.dev_bu = d;
      pl.fitted_c = c;
    }
  }
  pl.collapse_scale = 1.0 / std::sqrt(lam);

  std::array<std::pair<double, int>, 3> cand{{{pl.dev_rh, 0}, {pl.dev_bu, 1}, {pl.dev_ch, 2}}};
  std::sort(cand.begin(), cand.end());
  if (cand[1].first < 2.0 * cand[0].first) {
    pl.tag = LimitTag::Ambiguous;
    pl.note = "two local models within a factor 2";
  } else if (cand[0].second == 0) {
    pl.tag = LimitTag::RealHyperbolic;
  } else if (cand[0].second == 1) {
    pl.tag = LimitTag::BlowUpLimit;
  } else {
    // locally complex hyperbolic; the declared regime decides between the global limits
    switch (rule.regime) {
      case LimitRegime::XiToConst: pl.tag = LimitTag::ComplexHyperbolicCusp; break;
      case LimitRegime::XiToInf:
        pl.tag = pl.collapse_scale < 0.1 ? LimitTag::Line : LimitTag::ComplexHyperbolicCusp;
        if (pl.tag == LimitTag::Line) pl.note = "torus and fiber shrink in the rescaled chart";
        break;
      default: pl.tag = LimitTag::ComplexHyperbolic; break;
    }
  }
  LimitTag expect = LimitTag::Ambiguous;
  switch (rule.regime) {
    case LimitRegime::XiENToZero: expect = LimitTag::RealHyperbolic; break;
    case LimitRegime::XiENToConst: expect = LimitTag::BlowUpLimit; break;
    case LimitRegime::XiENToInfXiToZero: expect = LimitTag::ComplexHyperbolic; break;
    case LimitRegime::XiToConst: expect = LimitTag::ComplexHyperbolicCusp; break;
    case LimitRegime::XiToInf: expect = LimitTag::Line; break;
  }
  pl.regime_consistent = pl.tag == expect;
  return pl;
}

}  // namespace toda
