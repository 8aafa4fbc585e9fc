#include "toda/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "toda/dehn.hpp"
#include "toda/decay.hpp"
#include "toda/diagnostics.hpp"
#include "toda/io.hpp"
#include "toda/metric_frame.hpp"
#include "toda/model_families.hpp"
#include "toda/numeric.hpp"

namespace toda {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using io::cell;
constexpr double kPi = std::numbers::pi;

ExitCode exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config: return ExitCode::Config;
    case ErrorCode::NonConvergence: return ExitCode::NonConvergence;
    case ErrorCode::InvariantViolation: return ExitCode::InvariantViolation;
    case ErrorCode::InvalidInput: return ExitCode::InvalidInput;
    case ErrorCode::Internal: return ExitCode::Internal;
  }
  return ExitCode::Internal;
}

namespace {

std::string code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config: return "config";
    case ErrorCode::NonConvergence: return "non_convergence";
    case ErrorCode::InvariantViolation: return "invariant_violation";
    case ErrorCode::InvalidInput: return "invalid_input";
    case ErrorCode::Internal: return "internal";
  }
  return "internal";
}

json num_json(double x) {
  if (std::isfinite(x)) return x;
  return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
}

struct Context {
  const RunConfig& cfg;
  fs::path out;
  io::Meta meta;
  json results = json::object();
  json warnings = json::array();
  std::vector<std::string> artifacts;

  void csv(const fs::path& rel, const io::Table& t) {
    io::write_csv(out / rel, meta, t);
    artifacts.push_back(rel.generic_string());
  }
  void check(bool ok, const std::string& what) {
    if (!ok) warnings.push_back(what);
  }
};

Eigen::Vector2d mode_phase(int kx, int ky, int i, int j, const CrossSection& cs) {
  const double ph = 2.0 * kPi * (double(kx) * i / cs.nx() + double(ky) * j / cs.ny());
  return {std::cos(ph), std::sin(ph)};
}

std::vector<double> cos_mode(const CrossSection& cs, int kx, int ky) {
  std::vector<double> v(cs.dof(), 0.0);
  if (cs.is_torus()) {
    for (int i = 0; i < cs.nx(); ++i)
      for (int j = 0; j < cs.ny(); ++j) v[i * cs.ny() + j] = mode_phase(kx, ky, i, j, cs)[0];
  } else {
    require(cs.dof() > 1, "surrogate needs a nonconstant mode");
    v[1] = 1.0;
  }
  return v;
}

json decay_json(const DecayFit& f) {
  return {{"model", f.model},         {"delta", num_json(f.delta)}, {"intercept", num_json(f.intercept)},
          {"rms", num_json(f.rms)},   {"points", f.points},         {"meaningful", f.meaningful},
          {"note", f.note}};
}

json report_json(const SolveReport& r) {
  return {{"status", to_string(r.status)},
          {"failing_stage", r.failing_stage},
          {"message", r.message},
          {"pde_residual_sup", num_json(r.pde_residual_sup)},
          {"mass_drift_sup", num_json(r.mass_drift_sup)},
          {"u_sup", num_json(r.u_sup)},
          {"phi_sup", num_json(r.phi_sup)},
          {"max_principle_ok", r.max_principle_ok},
          {"s_reached", num_json(r.s_reached)},
          {"newton_total", r.newton_total},
          {"linear_total", r.linear_total}};
}

struct Solved {
  CanonicalProblem prob;
  SolveResult res;
};

Solved solve_from(Context& ctx, const CrossSection& cs, const BvpSpec& spec, const std::string& key) {
  Solved s;
  s.prob = adapt_to_canonical(spec, cs);
  const auto grid =
      TGrid::uniform(s.prob.map.t_start, ctx.cfg.get_double("grid.length"), int(ctx.cfg.get_int("grid.n_t")));
  s.res = solve(s.prob.profile, cs, s.prob.phi_normalized, grid, build_solver(ctx.cfg));
  ctx.results[key] = report_json(s.res.report);
  if (!s.res.report.converged())
    fail(ErrorCode::NonConvergence, key + ": " + to_string(s.res.report.status) + " at " + s.res.report.failing_stage +
                                        (s.res.report.message.empty() ? "" : ": " + s.res.report.message));
  ctx.check(s.res.report.max_principle_ok, key + ": max principle violated");
  ctx.check(s.res.report.mass_drift_sup <= 1e-6, key + ": mass drift above 1e-6");
  return s;
}

MetricFrame frame_from(const RunConfig& cfg, const CrossSection& cs, const Solved& s) {
  auto src = frame_source(s.res.u, s.prob);
  FrameOptions o;
  const long deg = cfg.get_int("frame.degree");
  o.degree = deg >= 0 ? int(deg) : (src.flux == 0.0 ? 0 : 1);
  o.period = cfg.get_double("frame.period");
  o.clip = int(cfg.get_int("frame.clip"));
  o.t_order = int(cfg.get_int("frame.t_order"));
  o.closure_tol = cfg.get_double("frame.closure_tol");
  return assemble(src, cs, o);
}

// ---------------------------------------------------------------- solve

void run_solve(Context& ctx) {
  const auto cs = build_cross_section(ctx.cfg);
  const auto spec = build_bvp(ctx.cfg, cs);
  auto s = solve_from(ctx, cs, spec, "solve");
  const auto& u = s.res.u;
  ctx.results["bvp"] = to_string(spec.id);
  ctx.results["phibar"] = num_json(s.prob.phibar);
  ctx.results["a"] = num_json(s.prob.a);
  ctx.results["b"] = num_json(s.prob.b);

  const auto model = rate_model_for(spec.id);
  const auto fit = fit_decay(cs, u, s.prob.map, model);
  ctx.results["decay"] = decay_json(fit);
  const auto sup = sup_profile(cs, u);
  const double slope = model == RateModel::Power ? fit.delta : -fit.delta;
  io::Table t{{"t", "xi", "sup_u", "fitted"}, {}};
  for (int i = 0; i < u.grid.nodes(); ++i) {
    const double tt = u.grid.t(i), xi = s.prob.map.xi(tt);
    const double fitted = std::exp(fit.intercept + slope * rate_abscissa(model, tt, xi));
    t.add({cell(tt), cell(xi), cell(sup[i]), cell(fitted)});
  }
  ctx.csv("decay.csv", t);

  if (!ctx.cfg.get_bool("frame.enabled") || !cs.is_torus()) {
    ctx.results["frame"] = "skipped";
    return;
  }
  const auto f = frame_from(ctx.cfg, cs, s);
  const auto c = frame_curvature(f);
  ctx.results["frame"] = {{"degree", f.degree},
                          {"period", num_json(f.period)},
                          {"min_w", num_json(f.min_w)},
                          {"min_w_t_index", f.min_w_t},
                          {"closure_residual", num_json(f.closure_residual)},
                          {"flux_deviation", num_json(f.flux_deviation)},
                          {"einstein_sup", num_json(c.einstein_sup)},
                          {"weyl_plus_sup", num_json(c.weyl_plus_sup)},
                          {"bridge_sup", num_json(c.bridge_sup)},
                          {"weyl_relation_sup", num_json(c.weyl_relation_sup)}};
  io::Table ct{{"t", "xi", "einstein", "weyl_plus", "weyl_minus"}, {}};
  for (std::size_t r = 0; r < c.t_index.size(); ++r) {
    double e = 0, wp = 0, wm = 0;
    for (int k = 0; k < c.dof; ++k) {
      e = std::max(e, c.einstein[r * c.dof + k]);
      wp = std::max(wp, c.weyl_plus[r * c.dof + k]);
      wm = std::max(wm, c.weyl_minus[r * c.dof + k]);
    }
    ct.add({cell(f.grid.t(c.t_index[r])), cell(c.xi[r]), cell(e), cell(wp), cell(wm)});
  }
  ctx.csv("curvature.csv", ct);
}

// ---------------------------------------------------------------- classify

json endpoint_json(const Endpoint& e) {
  json j{{"xi", num_json(e.xi)}, {"tag", to_string(e.tag)}};
  if (e.angle_per_period) j["angle_per_period"] = num_json(*e.angle_per_period);
  return j;
}

json classification_json(const Classification& c) {
  json iv = json::array();
  for (const auto& m : c.intervals) iv.push_back({{"lo", endpoint_json(m.lo)}, {"hi", endpoint_json(m.hi)}});
  return {{"table", c.table}, {"case", c.case_no}, {"branch", to_string(c.branch)}, {"intervals", iv}};
}

ModelFamily family_of(const std::string& name, double a, double b) {
  if (name == "type_i") return ModelFamily::type_i(a, b);
  if (name == "type_ii_torus") return ModelFamily::type_ii_torus(a, b);
  return ModelFamily::type_ii_sigma(a);
}

void run_classify(Context& ctx) {
  const long table = ctx.cfg.get_int("classify.table");
  if (table == 0) {
    const auto fam =
        family_of(ctx.cfg.get_string("classify.family"), ctx.cfg.get_double("classify.a"), ctx.cfg.get_double("classify.b"));
    ctx.results["family"] = to_string(fam.kind);
    ctx.results["a"] = num_json(fam.a);
    ctx.results["b"] = num_json(fam.b);
    ctx.results["classification"] = classification_json(maximal_intervals(fam));
    return;
  }
  if (table != 1 && table != 2) fail(ErrorCode::Config, "classify.table must be 0, 1 or 2");
  io::Table t{{"a", "b", "table", "case", "branch", "interval", "lo", "lo_tag", "hi", "hi_tag", "note"}, {}};
  int rows = 0, skipped = 0;
  for (double a : ctx.cfg.get_double_list("classify.a_list"))
    for (double b : ctx.cfg.get_double_list("classify.b_list")) {
      const auto fam = table == 1 ? ModelFamily::type_i(a, b) : ModelFamily::type_ii_torus(a, b);
      try {
        const auto c = maximal_intervals(fam);
        for (std::size_t k = 0; k < c.intervals.size(); ++k) {
          const auto& m = c.intervals[k];
          t.add({cell(a), cell(b), cell(c.table), cell(c.case_no), to_string(c.branch), cell(long(k)), cell(m.lo.xi),
                 to_string(m.lo.tag), cell(m.hi.xi), to_string(m.hi.tag), ""});
          ++rows;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidInput) throw;
        t.add({cell(a), cell(b), cell(table), "0", "", "", "", "", "", "", "not covered"});
        ++skipped;
      }
    }
  ctx.csv("classify_table" + std::to_string(table) + ".csv", t);
  ctx.results["table"] = table;
  ctx.results["interval_rows"] = rows;
  ctx.results["uncovered_pairs"] = skipped;
}

// ---------------------------------------------------------------- diagnose

void run_diagnose(Context& ctx) {
  const auto cs = build_cross_section(ctx.cfg);
  const auto spec = build_bvp(ctx.cfg, cs);
  const auto dir =
      cos_mode(cs, int(ctx.cfg.get_int("diagnose.direction_kx")), int(ctx.cfg.get_int("diagnose.direction_ky")));
  BvpSpec spec2 = spec;
  const double pe = ctx.cfg.get_double("diagnose.pair_eps");
  for (int k = 0; k < cs.dof(); ++k) spec2.phi[k] += pe * dir[k];
  auto s1 = solve_from(ctx, cs, spec, "solve_1");
  auto s2 = solve_from(ctx, cs, spec2, "solve_2");

  const auto tr = energy_trace(s1.prob.profile, cs, s1.res.u, s2.res.u);
  ctx.results["energy"] = {{"kappa0", num_json(tr.kappa0)},
                           {"kappa1", num_json(tr.kappa1)},
                           {"kappa2", num_json(tr.kappa2)},
                           {"kappa_identity", num_json(tr.kappa2 * tr.kappa2 + tr.kappa1 * tr.kappa2 - tr.kappa0)},
                           {"a_prime", num_json(tr.a_prime)},
                           {"slack", num_json(tr.slack)},
                           {"inequality_ok", tr.inequality_ok},
                           {"monotone", tr.monotone},
                           {"bound_ok", tr.bound_ok},
                           {"inequality_gap", num_json(tr.inequality_gap)},
                           {"monotone_gap", num_json(tr.monotone_gap)},
                           {"bound_gap", num_json(tr.bound_gap)}};
  ctx.check(tr.inequality_ok, "energy: differential inequality violated");
  ctx.check(tr.monotone, "energy: not nonincreasing");
  ctx.check(tr.bound_ok, "energy: exponential bound violated");
  io::Table et{{"t", "E", "bound"}, {}};
  for (std::size_t i = 0; i < tr.t.size(); ++i) et.add({cell(tr.t[i]), cell(tr.e[i]), cell(tr.bound[i])});
  ctx.csv("energy.csv", et);

  const auto eps = ctx.cfg.get_double_list("diagnose.eps_list");
  if (eps.empty()) return;
  const auto st = stability_experiment(spec, dir, eps, cs, s1.res.u.grid, build_solver(ctx.cfg));
  ctx.results["stability"] = {{"delta", num_json(st.delta)},
                              {"exponent", num_json(st.exponent)},
                              {"rate_positive", st.rate_positive},
                              {"quarter_power_ok", st.quarter_power_ok}};
  ctx.check(st.rate_positive, "stability: no positive decay rate");
  ctx.check(st.quarter_power_ok, "stability: differences shrink slower than the quarter power");
  io::Table tt{{"eps", "data_norm", "amplitude", "fit_delta", "fit_meaningful"}, {}};
  for (const auto& r : st.rungs)
    tt.add({cell(r.eps), cell(r.data_norm), cell(r.amplitude), cell(r.fit.delta), cell(r.fit.meaningful)});
  ctx.csv("stability.csv", tt);
}

// ---------------------------------------------------------------- degenerate

void run_degenerate(Context& ctx) {
  const auto cs = build_cross_section(ctx.cfg);
  const auto phi0 = build_boundary(ctx.cfg, cs);
  std::vector<int> ns;
  for (long n : ctx.cfg.get_int_list("degenerate.n_list")) ns.push_back(int(n));
  if (ns.empty()) fail(ErrorCode::Config, "degenerate.n_list is empty");
  DegenerationOptions o;
  o.xi_lo = ctx.cfg.get_double("degenerate.xi_lo");
  o.xi_hi = ctx.cfg.get_double("degenerate.xi_hi");
  o.n_t = int(ctx.cfg.get_int("degenerate.n_t"));
  o.t_factor = ctx.cfg.get_double("degenerate.t_factor");
  o.solver = build_solver(ctx.cfg);
  const auto fam = degeneration_family(cs, phi0, ns, o);
  const int k = int(ctx.cfg.get_int("degenerate.sample"));
  require(k >= 0 && k < cs.dof(), "degenerate.sample out of range");

  io::Table t{{"N", "window_error", "newton_total"}, {}};
  for (const auto& m : fam.members) {
    t.add({cell(m.n_shift), cell(m.window_error), cell(m.report.newton_total)});
    io::Table w{{"xi", "v", "log_xi"}, {}};
    for (int j = 0; j < o.window_points; ++j) {
      const double xi = o.xi_lo + (o.xi_hi - o.xi_lo) * j / (o.window_points - 1);
      w.add({cell(xi), cell(member_value(m, k, xi).v), cell(std::log(xi))});
    }
    ctx.csv(fs::path("members") / ("N_" + std::to_string(m.n_shift)) / "window.csv", w);
  }
  ctx.csv("degeneration.csv", t);
  ctx.results["monotone"] = fam.monotone;
  ctx.results["threshold_n"] = fam.threshold_n;
  ctx.results["failure"] = fam.failure;
  ctx.check(fam.monotone, "degeneration: error column not monotone");
  if (!fam.failure.empty()) {
    ctx.check(false, "degeneration: " + fam.failure);
    if (fam.members.empty()) fail(ErrorCode::NonConvergence, fam.failure);
  }

  const auto& last = fam.members.back();
  const auto fit = rescaled_limit_fit(last, k);
  ctx.results["rescaled_fit"] = {{"N", last.n_shift}, {"a", num_json(fit.a)}, {"b", num_json(fit.b)},
                                 {"rms", num_json(fit.rms)}};
  ctx.check(fit.a > 0 && fit.b > 0, "degeneration: rescaled fit without positive a, b");
  const auto bu = blow_up_comparison(last, k, fit);
  ctx.results["blow_up"] = {{"dev_zz", num_json(bu.dev_zz)},       {"dev_fiber", num_json(bu.dev_fiber)},
                            {"dev_base", num_json(bu.dev_base)},   {"dev_twist", num_json(bu.dev_twist)},
                            {"max_dev", num_json(bu.max_dev)}};

  struct Rule {
    LimitRegime regime;
    double (*xi)(int);
  };
  const Rule rules[] = {
      {LimitRegime::XiToConst, [](int) { return 1.0; }},
      {LimitRegime::XiENToConst, [](int n) { return std::exp(-double(n)); }},
      {LimitRegime::XiENToZero, [](int n) { return std::exp(-2.0 * n); }},
  };
  json limits = json::array();
  for (const auto& r : rules) {
    auto fn = r.xi;
    const auto pl = pointed_limit_classifier(fam, {r.regime, [fn](int n) { return fn(n); }}, k);
    limits.push_back({{"regime", to_string(r.regime)},
                      {"tag", to_string(pl.tag)},
                      {"dev_rh", num_json(pl.dev_rh)},
                      {"dev_bu", num_json(pl.dev_bu)},
                      {"dev_ch", num_json(pl.dev_ch)},
                      {"fitted_c", num_json(pl.fitted_c)},
                      {"regime_consistent", pl.regime_consistent},
                      {"note", pl.note}});
  }
  ctx.results["pointed_limits"] = limits;
}

// ---------------------------------------------------------------- dehn

void run_dehn(Context& ctx) {
  const auto cs = build_cross_section(ctx.cfg);
  const auto spec = build_bvp(ctx.cfg, cs);
  if (spec.id != BvpId::BVP1) fail(ErrorCode::Config, "dehn needs bvp.id = BVP1 (AH cusp frame)");
  if (!cs.is_torus()) fail(ErrorCode::Config, "dehn needs a torus cross-section");
  const auto rs = ctx.cfg.get_double_list("dehn.r_list");
  const auto ls = ctx.cfg.get_double_list("dehn.l_list");
  if (rs.size() != ls.size() || rs.empty()) fail(ErrorCode::Config, "dehn.r_list and dehn.l_list must pair up");
  auto s = solve_from(ctx, cs, spec, "solve");
  const auto f = frame_from(ctx.cfg, cs, s);

  GluedOptions o;
  o.delta = ctx.cfg.get_double("dehn.delta");
  o.margin = ctx.cfg.get_double("dehn.margin");
  o.samples_per_unit = int(ctx.cfg.get_int("dehn.samples_per_unit"));
  const long n = static_cast<long>(rs.size());
  std::vector<GluedDefect> gd(n);
  std::vector<LatticeMatch> lm(n);
  std::vector<std::string> err(n);
  const double b = std::exp(s.prob.phibar);
  // members are independent; each one owns its subdirectory
#pragma omp parallel for schedule(dynamic, 1)
  for (long m = 0; m < n; ++m) {
    try {
      gd[m] = glued_defect(f, rs[m], ls[m], o);
      Eigen::Matrix3d basis = Eigen::Matrix3d::Zero();
      basis(0, 0) = ls[m] * std::exp(rs[m]);
      basis.block<2, 2>(1, 1) = std::sqrt(b) * cs.lattice();
      lm[m] = match_lattice(basis, rs[m]);
    } catch (const std::exception& e) {
      err[m] = e.what();
    }
  }
  for (long m = 0; m < n; ++m)
    if (!err[m].empty()) fail(ErrorCode::InvalidInput, "dehn member " + std::to_string(m) + ": " + err[m]);

  io::Table t{{"R", "l", "a", "s_plus", "beta", "sup_defect", "weighted_sup", "outside_sup", "match_residual",
               "x_l_over_4pi3", "lattice_length_gap", "lattice_angle_gap"},
              {}};
  json members = json::array();
  for (long m = 0; m < n; ++m) {
    const auto& g = gd[m];
    t.add({cell(rs[m]), cell(ls[m]), cell(g.match.a), cell(g.match.s_plus), cell(g.match.beta), cell(g.band_sup),
           cell(g.weighted_sup), cell(g.outside_sup), cell(g.match.residual), cell(g.match.x * ls[m] / (4 * kPi / 3)),
           cell(lm[m].length_gap), cell(lm[m].angle_gap)});
    io::Table p{{"rho", "defect", "weighted", "in_grid"}, {}};
    for (std::size_t j = 0; j < g.rho.size(); ++j)
      p.add({cell(g.rho[j]), cell(g.defect[j]), cell(g.weighted[j]), cell(bool(g.in_grid[j]))});
    ctx.csv(fs::path("members") / ("m" + std::to_string(m)) / "defect.csv", p);
    ctx.check(g.supported_in_band, "dehn member " + std::to_string(m) + ": defect not supported in the band");
    ctx.check(g.match.residual <= 1e-12, "dehn member " + std::to_string(m) + ": matching residual above 1e-12");
    members.push_back({{"R", num_json(rs[m])}, {"l", num_json(ls[m])}, {"grid_samples", g.grid_samples},
                       {"tail_deviation", num_json(g.tail_deviation)}});
  }
  ctx.csv("dehn.csv", t);
  ctx.results["members"] = members;
  ctx.results["chi_d1_sup"] = num_json(gd[0].chi_d1_sup);
  ctx.results["chi_d2_sup"] = num_json(gd[0].chi_d2_sup);
  ctx.results["delta"] = num_json(o.delta);

  // slope at the largest R
  const double rmax = *std::max_element(rs.begin(), rs.end());
  std::vector<double> ll, ld, lw;
  for (long m = 0; m < n; ++m)
    if (rs[m] == rmax && gd[m].band_sup > 0 && gd[m].weighted_sup > 0) {
      ll.push_back(std::log(ls[m]));
      ld.push_back(std::log(gd[m].band_sup));
      lw.push_back(std::log(gd[m].weighted_sup));
    }
  if (ll.size() >= 2) {
    const double sd = num::fit_line(ll, ld).slope, sw = num::fit_line(ll, lw).slope;
    ctx.results["defect_slope"] = num_json(sd);
    ctx.results["weighted_slope"] = num_json(sw);
    ctx.results["slope_bound"] = num_json(o.delta - 3.0 + 0.3);
    ctx.check(sw <= o.delta - 3.0 + 0.3, "dehn: weighted defect slope above delta - 3 + 0.3");
  }
}

// ---------------------------------------------------------------- plot-data

void run_plot(Context& ctx) {
  const std::string in_s = ctx.cfg.get_string("plot.input");
  const fs::path in = in_s.empty() ? ctx.out : fs::path(in_s);
  struct Series {
    std::string file, out, x;
    std::vector<std::string> ys;
  };
  const Series all[] = {
      {"decay.csv", "plot_decay.csv", "xi", {"sup_u", "fitted"}},
      {"energy.csv", "plot_energy.csv", "t", {"E", "bound"}},
      {"stability.csv", "plot_stability.csv", "eps", {"amplitude", "data_norm"}},
      {"dehn.csv", "plot_defect.csv", "l", {"sup_defect", "weighted_sup"}},
  };
  json found = json::array(), missing = json::array();
  for (const auto& s : all) {
    if (!fs::exists(in / s.file)) {
      missing.push_back(s.file);
      continue;
    }
    const auto t = io::read_csv(in / s.file);
    const auto xs = t.index(s.x);
    io::Table p{{"series", "x", "y"}, {}};
    for (const auto& y : s.ys) {
      const auto c = t.index(y);
      for (const auto& r : t.rows) p.add({y, r[xs], r[c]});
    }
    ctx.csv(s.out, p);
    found.push_back(s.file);
  }
  ctx.results["input"] = in.generic_string();
  ctx.results["inputs_found"] = found;
  ctx.results["inputs_missing"] = missing;
  if (found.empty()) fail(ErrorCode::InvalidInput, "missing inputs: no known artifacts in '" + in.generic_string() + "'");
}

json base_report(const std::string& status, int code) {
  return {{"status", status}, {"exit_code", code}};
}

}  // namespace

CrossSection build_cross_section(const RunConfig& cfg) {
  if (cfg.get_string("cross_section.kind") == "surface") {
    auto ev = cfg.get_double_list("cross_section.eigenvalues");
    if (ev.empty()) fail(ErrorCode::Config, "cross_section.eigenvalues is required for a surface");
    return CrossSection::synthetic_surface(int(cfg.get_int("cross_section.genus")), ev);
  }
  const auto l = cfg.get_double_list("cross_section.lattice");
  if (l.size() != 4) fail(ErrorCode::Config, "cross_section.lattice needs 4 entries");
  Eigen::Matrix2d basis;
  basis << l[0], l[1], l[2], l[3];
  if (!(std::abs(basis.determinant()) > 0)) fail(ErrorCode::Config, "cross_section.lattice is degenerate");
  const long nx = cfg.get_int("cross_section.nx"), ny = cfg.get_int("cross_section.ny");
  if (nx < 2 || ny < 1) fail(ErrorCode::Config, "cross_section.nx must be >= 2 and ny >= 1");
  return CrossSection::flat_torus(basis, int(nx), int(ny));
}

std::vector<double> build_boundary(const RunConfig& cfg, const CrossSection& cs) {
  std::vector<double> phi(cs.dof(), 0.0);
  const double c = cfg.get_double("bvp.phi_const");
  if (cs.is_torus()) {
    const auto amp = cfg.get_double_list("bvp.phi_cos_amp");
    const auto kx = cfg.get_int_list("bvp.phi_cos_kx");
    const auto ky = cfg.get_int_list("bvp.phi_cos_ky");
    if (kx.size() != amp.size() || ky.size() != amp.size())
      fail(ErrorCode::Config, "bvp.phi_cos_amp, phi_cos_kx and phi_cos_ky must have equal lengths");
    for (int i = 0; i < cs.nx(); ++i)
      for (int j = 0; j < cs.ny(); ++j) {
        double v = c;
        for (std::size_t m = 0; m < amp.size(); ++m) v += amp[m] * mode_phase(int(kx[m]), int(ky[m]), i, j, cs)[0];
        phi[i * cs.ny() + j] = v;
      }
  } else {
    const auto modes = cfg.get_double_list("bvp.phi_modes");
    if (modes.size() > phi.size()) fail(ErrorCode::Config, "bvp.phi_modes has more entries than the spectrum");
    for (std::size_t m = 0; m < modes.size(); ++m) phi[m] = modes[m];
    phi[0] += c;
  }
  return phi;
}

BvpSpec build_bvp(const RunConfig& cfg, const CrossSection& cs) {
  BvpSpec spec;
  spec.id = bvp_from_string(cfg.get_string("bvp.id"));
  spec.a = cfg.get_double("bvp.a");
  spec.phi = build_boundary(cfg, cs);
  return spec;
}

SolverOptions build_solver(const RunConfig& cfg) {
  SolverOptions o;
  o.t_order = int(cfg.get_int("solver.t_order"));
  if (o.t_order != 2 && o.t_order != 4 && o.t_order != 6) fail(ErrorCode::Config, "solver.t_order must be 2, 4 or 6");
  o.tol_newton = cfg.get_double("solver.tol_newton");
  o.max_newton = int(cfg.get_int("solver.max_newton"));
  o.continuation_steps = int(cfg.get_int("solver.continuation_steps"));
  o.schedule = cfg.get_double_list("solver.schedule");
  if (!(o.tol_newton > 0) || o.max_newton < 1 || o.continuation_steps < 1)
    fail(ErrorCode::Config, "solver tolerances and counts must be positive");
  return o;
}

int write_failure_report(const std::string& command, const fs::path& out, ErrorCode code, const std::string& message) {
  const int ec = static_cast<int>(exit_code_for(code));
  json r = base_report("error", ec);
  r["error"] = {{"code", code_name(code)}, {"message", message}};
  try {
    io::write_json(out / "report.json", {"", command}, r);
  } catch (const std::exception&) {
    // nothing more to do when the output directory is unusable
  }
  return ec;
}

int run(const std::string& command, const RunConfig& cfg, const RunOptions& opts) {
  Context ctx{cfg, opts.out, {cfg.hash(), command}, json::object(), json::array(), {}};
  int code = 0;
  json err;
  try {
    if (cfg.has("run.command") && cfg.get_string("run.command") != command)
      fail(ErrorCode::Config, "run.command = " + cfg.get_string("run.command") + " does not match '" + command + "'");
    fs::create_directories(opts.out);
    {
      std::ofstream c(opts.out / "config.ini", std::ios::binary);
      c << "# schema_version=" << io::kSchemaVersion << "\n# config_hash=" << ctx.meta.config_hash << "\n"
        << cfg.render(true);
    }
    ctx.artifacts.push_back("config.ini");
    if (command == "solve") run_solve(ctx);
    else if (command == "classify") run_classify(ctx);
    else if (command == "diagnose") run_diagnose(ctx);
    else if (command == "degenerate") run_degenerate(ctx);
    else if (command == "dehn") run_dehn(ctx);
    else if (command == "plot-data") run_plot(ctx);
    else fail(ErrorCode::Config, "unknown command '" + command + "'");
    if (opts.strict && !ctx.warnings.empty())
      fail(ErrorCode::InvariantViolation, "strict mode: " + ctx.warnings[0].get<std::string>());
  } catch (const Error& e) {
    code = static_cast<int>(exit_code_for(e.code()));
    err = {{"code", code_name(e.code())}, {"message", e.what()}};
  } catch (const std::exception& e) {
    code = static_cast<int>(ExitCode::Internal);
    err = {{"code", "internal"}, {"message", e.what()}};
  }
  json r = base_report(code == 0 ? "ok" : "error", code);
  if (!err.is_null()) r["error"] = err;
  r["strict"] = opts.strict;
  r["warnings"] = ctx.warnings;
  r["results"] = ctx.results;
  r["artifacts"] = ctx.artifacts;
  try {
    io::write_json(opts.out / "report.json", ctx.meta, r);
  } catch (const std::exception&) {
    if (code == 0) code = static_cast<int>(ExitCode::InvalidInput);
  }
  return code;
}

}  // namespace toda
