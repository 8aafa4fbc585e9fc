#include "toda/metric_frame.hpp"

#include <algorithm>
#include <cmath>

#include "toda/error.hpp"
#include "toda/numeric.hpp"

namespace toda {

namespace {

using curv::Mat4;
using curv::MetricJet;
using curv::ScalarJet;

/// Centered t-differences of accuracy order p (4 or 6). First and second
/// derivatives use p+1 nodes, the third derivative p+3.
struct TDiff {
  int order = 4;
  double h = 1.0;
  std::vector<double> c1, c2, c3;
  TDiff(int p, double step) : order(p), h(step) {
    require(p == 4 || p == 6, "t-derivative order must be 4 or 6");
    std::vector<double> nodes(p + 1), wide(p + 3);
    for (int k = 0; k <= p; ++k) nodes[k] = k - p / 2;
    for (int k = 0; k <= p + 2; ++k) wide[k] = k - p / 2 - 1;
    auto w = num::fd_weights(0.0, nodes, 2);
    c1 = w[1];
    c2 = w[2];
    c3 = num::fd_weights(0.0, wide, 3)[3];
  }
  int half() const { return order / 2; }
  int half3() const { return order / 2 + 1; }

  /// d-th derivative at every node, one-sided windows near the ends.
  std::vector<double> all(std::span<const double> f, int d = 1) const {
    const int n = static_cast<int>(f.size()) - 1;
    require(n >= order, "t-grid too short for the derivative stencil");
    const auto& c = d == 1 ? c1 : c2;
    std::vector<double> out(f.size()), nodes(order + 1);
    for (int i = 0; i <= n; ++i) {
      const int lo = std::clamp(i - half(), 0, n - order);
      double acc = 0.0;
      if (lo == i - half()) {
        for (int k = 0; k <= order; ++k) acc += c[k] * f[lo + k];
      } else {
        for (int k = 0; k <= order; ++k) nodes[k] = lo + k;
        const auto w = num::fd_weights(i, nodes, d)[d];
        for (int k = 0; k <= order; ++k) acc += w[k] * f[lo + k];
      }
      out[i] = acc / std::pow(h, d);
    }
    return out;
  }

  /// u_t, u_tt (and u_ttt when want3) at node i for every sample.
  void at_node(const ScalarField& u, int i, bool want3, std::vector<double>& d1, std::vector<double>& d2,
               std::vector<double>& d3) const {
    const int p = half();
    for (int k = 0; k < u.dof; ++k) {
      double a = 0.0, b = 0.0;
      for (int j = -p; j <= p; ++j) {
        const double x = u.at(i + j, k);
        a += c1[j + p] * x;
        b += c2[j + p] * x;
      }
      d1[k] = a / h;
      d2[k] = b / (h * h);
      if (want3) {
        const int q = half3();
        double c = 0.0;
        for (int j = -q; j <= q; ++j) c += c3[j + q] * u.at(i + j, k);
        d3[k] = c / (h * h * h);
      } else {
        d3[k] = 0.0;
      }
    }
  }
};

ScalarJet tjet(double v, double d, double dd) {
  ScalarJet j;
  j.v = v;
  j.d[0] = d;
  j.dd(0, 0) = dd;
  return j;
}

/// xi(t) and its first three derivatives.
struct XiJet {
  double x = 0, d1 = 0, d2 = 0, d3 = 0;
  XiJet(const VariableMap& m, double t) : x(m.xi(t)), d1(m.dxi(t)), d2(m.d2xi(t)), d3(m.d3xi(t)) {}
};

/// t-jets (value, d/dt, d^2/dt^2) of W and W e^v at one sample.
struct PointJets {
  ScalarJet w, y;
};

PointJets point_jets(bool type_ii, const XiJet& xj, const double* m, double u0, double u1, double u2, double u3) {
  const double q = 1.0 / xj.d1;
  const double q1 = -xj.d2 * q * q;
  const double q2 = -xj.d3 * q * q + 2.0 * xj.d2 * xj.d2 * q * q * q;
  // V = v_xi
  const ScalarJet V = tjet(u1 * q + m[1], u2 * q + u1 * q1 + m[2] * xj.d1,
                           u3 * q + 2.0 * u2 * q1 + u1 * q2 + m[3] * xj.d1 * xj.d1 + m[2] * xj.d2);
  const ScalarJet X = tjet(xj.x, xj.d1, xj.d2);
  PointJets r;
  if (type_ii) {
    const ScalarJet num = ScalarJet::constant(12.0) + (-6.0) * (X * V);
    const ScalarJet den = ScalarJet::constant(12.0) + (X * X) * X;
    r.w = num * den.inverse();
  } else {
    r.w = ScalarJet::constant(1.0) + (-0.5) * (X * V);
  }
  const double vt = u1 + m[1] * xj.d1;
  const double vtt = u2 + m[2] * xj.d1 * xj.d1 + m[1] * xj.d2;
  const double e = std::exp(u0 + m[0]);
  const ScalarJet E = tjet(e, e * vt, e * (vtt + vt * vt));
  r.y = r.w * E;
  return r;
}

/// u in point values (unchanged on the torus).
ScalarField point_field(const ScalarField& u, const CrossSection& cs) {
  if (cs.is_torus()) return u;
  ScalarField p(u.grid, cs.quadrature_points());
  for (int i = 0; i < u.grid.nodes(); ++i) {
    auto pv = cs.point_values(u.slice(i));
    std::copy(pv.begin(), pv.end(), p.slice(i).begin());
  }
  return p;
}

std::array<std::vector<double>, 4> model_derivatives(const FrameSource& src, const TGrid& g) {
  std::array<std::vector<double>, 4> vm;
  for (auto& v : vm) v.resize(g.nodes());
  for (int i = 0; i < g.nodes(); ++i) {
    const double x = src.map.xi(g.t(i));
    for (int m = 0; m < 4; ++m) vm[m][i] = src.vmod(x, m);
  }
  return vm;
}

/// W, W e^v and (W e^v)_xi at every node, from one u-stencil per node
/// (one-sided near the ends).
void values_all(const FrameSource& src, const ScalarField& up, int order, ScalarField& w, ScalarField& y,
                ScalarField* yxi = nullptr) {
  const TDiff td(order, up.grid.h);
  const auto vm = model_derivatives(src, up.grid);
  w = ScalarField(up.grid, up.dof);
  y = ScalarField(up.grid, up.dof);
  if (yxi) *yxi = ScalarField(up.grid, up.dof);
  std::vector<double> col(up.grid.nodes()), utt(up.grid.nodes(), 0.0);
  for (int k = 0; k < up.dof; ++k) {
    for (int i = 0; i < up.grid.nodes(); ++i) col[i] = up.at(i, k);
    const auto ut = td.all(col);
    if (yxi) utt = td.all(col, 2);
    for (int i = 0; i < up.grid.nodes(); ++i) {
      const XiJet xj(src.map, up.grid.t(i));
      const double m[4] = {vm[0][i], vm[1][i], vm[2][i], vm[3][i]};
      const auto pj = point_jets(src.type_ii, xj, m, col[i], ut[i], utt[i], 0.0);
      w.at(i, k) = pj.w.v;
      y.at(i, k) = pj.y.v;
      if (yxi) yxi->at(i, k) = pj.y.d[0] / xj.d1;
    }
  }
}

/// Jets of one nodal scalar over a whole t-slice: centered t-differences of
/// the nodal values, spectral in s.
struct SliceJets {
  std::vector<double> v, t, tt, s1, s2, s11, s12, s22, ts1, ts2;
  explicit SliceJets(int n) : v(n), t(n), tt(n), s1(n), s2(n), s11(n), s12(n), s22(n), ts1(n), ts2(n) {}
  void fill(const ScalarField& f, int i, const TDiff& td, const CrossSection& cs, std::vector<double>& scratch) {
    auto sl = f.slice(i);
    std::copy(sl.begin(), sl.end(), v.begin());
    const int p = td.half();
    for (int k = 0; k < f.dof; ++k) {
      double a = 0.0, b = 0.0;
      for (int j = -p; j <= p; ++j) {
        const double x = f.at(i + j, k);
        a += td.c1[j + p] * x;
        b += td.c2[j + p] * x;
      }
      t[k] = a / td.h;
      tt[k] = b / (td.h * td.h);
    }
    cs.derivatives(v, s1, s2, s11, s12, s22);
    scratch.resize(v.size() * 3);
    std::span<double> sp(scratch);
    cs.derivatives(t, ts1, ts2, sp.subspan(0, v.size()), sp.subspan(v.size(), v.size()),
                   sp.subspan(2 * v.size(), v.size()));
  }
  ScalarJet at(int k) const {
    ScalarJet j;
    j.v = v[k];
    j.d << t[k], 0.0, s1[k], s2[k];
    j.dd(0, 0) = tt[k];
    j.dd(0, 2) = j.dd(2, 0) = ts1[k];
    j.dd(0, 3) = j.dd(3, 0) = ts2[k];
    j.dd(2, 2) = s11[k];
    j.dd(2, 3) = j.dd(3, 2) = s12[k];
    j.dd(3, 3) = s22[k];
    return j;
  }
};

struct SliceWork {
  SliceJets w, y, a1, a2;
  std::vector<double> scratch;
  explicit SliceWork(int n) : w(n), y(n), a1(n), a2(n) {}
};

void fill_slice(const MetricFrame& f, int i, SliceWork& sw) {
  const TDiff td(f.t_order, f.grid.h);
  sw.w.fill(f.w, i, td, f.cs, sw.scratch);
  sw.y.fill(f.wev, i, td, f.cs, sw.scratch);
  sw.a1.fill(f.a1, i, td, f.cs, sw.scratch);
  sw.a2.fill(f.a2, i, td, f.cs, sw.scratch);
}

/// (*dF)_b = nu eps_ab G^{ac} dF_c for a 2-vector of lattice derivatives.
std::array<double, 2> hodge(const Eigen::Matrix2d& gi, double nu, double d1, double d2) {
  return {-nu * (gi(1, 0) * d1 + gi(1, 1) * d2), nu * (gi(0, 0) * d1 + gi(0, 1) * d2)};
}

MetricJet assemble_kahler(const MetricFrame& f, const SliceWork& sw, int i, int k) {
  const XiJet xj(f.map, f.grid.t(i));
  ScalarJet xp2;
  xp2.v = xj.d1 * xj.d1;
  xp2.d[0] = 2.0 * xj.d1 * xj.d2;
  xp2.dd(0, 0) = 2.0 * xj.d2 * xj.d2 + 2.0 * xj.d1 * xj.d3;

  const ScalarJet W = sw.w.at(k);
  const ScalarJet Q = W.inverse();
  const ScalarJet Y = sw.y.at(k);
  const int ny = f.cs.ny();
  const double s1 = static_cast<double>(k / ny) / f.cs.nx();
  const double s2 = static_cast<double>(k % ny) / ny;
  const double m = 0.5 * f.flux * f.cs.sqrt_det_gram();
  ScalarJet A[2] = {sw.a1.at(k), sw.a2.at(k)};
  // A_t = -xi' *dW
  {
    const auto& gi = f.cs.gram_inverse();
    const double nu = f.cs.sqrt_det_gram();
    const auto& w = sw.w;
    const auto h0 = hodge(gi, nu, w.s1[k], w.s2[k]);
    const auto ht = hodge(gi, nu, w.ts1[k], w.ts2[k]);
    const auto ha = hodge(gi, nu, w.s11[k], w.s12[k]);
    const auto hb = hodge(gi, nu, w.s12[k], w.s22[k]);
    for (int b = 0; b < 2; ++b) {
      A[b].d[0] = -xj.d1 * h0[b];
      A[b].dd(0, 0) = -xj.d2 * h0[b] - xj.d1 * ht[b];
      A[b].dd(0, 2) = A[b].dd(2, 0) = -xj.d1 * ha[b];
      A[b].dd(0, 3) = A[b].dd(3, 0) = -xj.d1 * hb[b];
    }
  }
  A[0].v += -m * s2;
  A[0].d[3] += -m;
  A[1].v += m * s1;
  A[1].d[2] += m;

  const auto& G = f.cs.gram();
  std::array<std::array<ScalarJet, 4>, 4> c{};
  c[0][0] = W * xp2;
  c[1][1] = Q;
  for (int a = 0; a < 2; ++a) {
    c[1][2 + a] = A[a] * Q;
    for (int b = a; b < 2; ++b) c[2 + a][2 + b] = (A[a] * A[b]) * Q + G(a, b) * Y;
  }
  return curv::assemble_jet(c);
}

ScalarJet conformal_factor(const VariableMap& map, double t) {
  const double xi = map.xi(t), dx = map.dxi(t), d2 = map.d2xi(t);
  ScalarJet j;
  j.v = -std::log(std::abs(xi));
  j.d[0] = -dx / xi;
  j.dd(0, 0) = -d2 / xi + (dx / xi) * (dx / xi);
  return j;
}

void curvature_slice(const MetricFrame& f, int row, int i, SliceWork& sw, CurvatureField& out) {
  fill_slice(f, i, sw);
  const double t = f.grid.t(i);
  const ScalarJet cf = conformal_factor(f.map, t);
  const int sigma = (f.map.dxi(t) > 0 ? 1 : -1) * f.orientation;
  for (int k = 0; k < f.cs.dof(); ++k) {
    const auto pc = curv::evaluate_conformal(assemble_kahler(f, sw, i, k), cf, sigma);
    const std::size_t idx = static_cast<std::size_t>(row) * out.dof + k;
    out.einstein[idx] = pc.einstein;
    out.weyl_plus[idx] = pc.weyl_plus;
    out.weyl_minus[idx] = pc.weyl_minus;
    out.scalar_g[idx] = pc.scalar_base;
  }
}

CurvatureField prepare(const MetricFrame& f) {
  CurvatureField c;
  c.dof = f.cs.dof();
  for (int i = f.first_node(); i <= f.last_node(); ++i) {
    if (f.xi[i] == 0.0) continue;
    c.t_index.push_back(i);
    c.xi.push_back(f.xi[i]);
  }
  const std::size_t n = c.t_index.size() * static_cast<std::size_t>(c.dof);
  c.einstein.assign(n, 0.0);
  c.weyl_plus.assign(n, 0.0);
  c.weyl_minus.assign(n, 0.0);
  c.scalar_g.assign(n, 0.0);
  return c;
}

void summarize(const MetricFrame& f, CurvatureField& c) {
  for (std::size_t r = 0; r < c.t_index.size(); ++r) {
    const double xi = c.xi[r];
    for (int k = 0; k < c.dof; ++k) {
      const std::size_t idx = r * c.dof + k;
      c.einstein_sup = std::max(c.einstein_sup, c.einstein[idx]);
      c.weyl_plus_sup = std::max(c.weyl_plus_sup, c.weyl_plus[idx]);
      const double target = f.type_ii ? xi : 0.0;
      c.bridge_sup = std::max(c.bridge_sup, std::abs(c.scalar_g[idx] - target));
      if (f.type_ii) {
        const double rel = std::abs(std::abs(xi) - std::cbrt(2.0 * std::sqrt(6.0) * c.weyl_plus[idx])) / std::abs(xi);
        c.weyl_relation_sup = std::max(c.weyl_relation_sup, rel);
      }
    }
  }
}

}  // namespace

FrameSource frame_source(const ScalarField& u, const CanonicalProblem& prob) {
  FrameSource s;
  s.u = u;
  s.map = prob.map;
  s.type_ii = prob.type_ii;
  s.flux = 0.5 * prob.a;
  s.vmod = [prob](double x, int m) { return prob.vmod_derivative(x, m); };
  return s;
}

int MetricFrame::first_node() const { return std::max(clip, t_order); }
int MetricFrame::last_node() const { return grid.n - first_node(); }

ScalarField compute_W(const FrameSource& src) {
  ScalarField w, y;
  values_all(src, src.u, 4, w, y);
  return w;
}

MetricFrame assemble(const FrameSource& src, const CrossSection& cs, const FrameOptions& opts) {
  require(cs.is_torus(), "metric frames need a flat torus cross-section");
  require(cs.lattice().determinant() > 0.0, "torus lattice basis must be positively oriented");
  require(src.u.dof == cs.dof(), "field size does not match the cross-section");
  require(opts.t_order == 4 || opts.t_order == 6, "t_order must be 4 or 6");
  require(opts.clip >= 2, "clip must be at least 2");
  require(src.u.grid.n >= 2 * opts.clip + 2, "t-grid too short for the clip margin");
  MetricFrame f;
  f.cs = cs;
  f.grid = src.u.grid;
  f.map = src.map;
  f.type_ii = src.type_ii;
  f.clip = opts.clip;
  f.t_order = opts.t_order;
  f.orientation = 1;
  f.u = src.u;
  f.vm = model_derivatives(src, f.grid);
  const int nt = f.grid.nodes();
  f.xi.resize(nt);
  for (int i = 0; i < nt; ++i) f.xi[i] = f.map.xi(f.grid.t(i));

  ScalarField yxi;
  values_all(src, src.u, f.t_order, f.w, f.wev, &yxi);

  f.min_w = f.w.at(0, 0);
  for (int i = 0; i < nt; ++i)
    for (int k = 0; k < cs.dof(); ++k)
      if (!(f.w.at(i, k) >= f.min_w)) {
        f.min_w = f.w.at(i, k);
        f.min_w_t = i;
        f.min_w_sample = k;
      }
  if (!(f.min_w > 0.0))
    fail(ErrorCode::InvariantViolation, "W <= 0 at t-node " + std::to_string(f.min_w_t) + ", sample " +
                                            std::to_string(f.min_w_sample) + " (xi = " +
                                            num::format_double(f.xi[f.min_w_t]) + ", W = " +
                                            num::format_double(f.min_w) + ")");

  f.flux = src.flux;
  f.degree = opts.degree;
  const double total = f.flux * cs.volume();
  if (opts.degree == 0) {
    if (std::abs(total) > 1e-12) fail(ErrorCode::InvalidInput, "degree 0 requires zero flux");
    require(opts.period > 0.0, "period must be positive");
    f.period = opts.period;
    f.degree_check = 0.0;
  } else {
    if (total == 0.0) fail(ErrorCode::InvalidInput, "nonzero degree requires nonzero flux");
    f.period = total / opts.degree;
    require(f.period > 0.0, "degree sign must match the flux sign");
    // the periodic part of A carries no flux, so the degree is the monopole's
    f.degree_check = total / f.period;
  }

  // periodic part of A from the slice flux (W e^v)_xi, all nodes
  const TDiff td(f.t_order, f.grid.h);
  const int dof = cs.dof();
  f.a1 = ScalarField(f.grid, dof);
  f.a2 = ScalarField(f.grid, dof);
  const auto& gi = cs.gram_inverse();
  const double nu = cs.sqrt_det_gram();
  std::vector<double> rhs(dof), g1(dof), g2(dof), lw(dof);
  for (int i = 0; i < nt; ++i) {
    const double mean = cs.mean(yxi.slice(i));
    if (i >= f.first_node() && i <= f.last_node())
      f.flux_deviation = std::max(f.flux_deviation, std::abs(mean - f.flux));
    double spread = 0.0;
    for (int k = 0; k < dof; ++k) {
      rhs[k] = -(yxi.at(i, k) - mean);
      spread = std::max(spread, std::abs(rhs[k]));
    }
    if (spread <= 1e-13 * std::max(1.0, std::abs(mean))) continue;  // slice-constant flux
    const double drift = cs.mean(rhs);  // roundoff when the spread is tiny next to the mean
    for (auto& r : rhs) r -= drift;
    // -Delta psi = -(f - mean)
    auto psi = cs.solve_poisson_meanzero(rhs);
    cs.gradient(psi, g1, g2);
    for (int k = 0; k < dof; ++k) {
      const auto a = hodge(gi, nu, g1[k], g2[k]);
      f.a1.at(i, k) = a[0];
      f.a2.at(i, k) = a[1];
    }
  }

  // integrability of d eta: (W e^v)_xixi + Delta W = 0
  int worst_i = 0, worst_k = 0;
  {
    std::vector<double> col(nt);
    ScalarField yxx(f.grid, dof);
    for (int k = 0; k < dof; ++k) {
      for (int i = 0; i < nt; ++i) col[i] = yxi.at(i, k);
      const auto d = td.all(col);
      for (int i = 0; i < nt; ++i) yxx.at(i, k) = d[i] / f.map.dxi(f.grid.t(i));
    }
    for (int i = f.first_node(); i <= f.last_node(); ++i) {
      cs.laplacian(f.w.slice(i), lw);
      for (int k = 0; k < dof; ++k) {
        const double r = std::abs(yxx.at(i, k) + lw[k]);
        if (r > f.closure_residual) {
          f.closure_residual = r;
          worst_i = i;
          worst_k = k;
        }
      }
    }
  }
  if (opts.check_closure && !(f.closure_residual <= opts.closure_tol))
    fail(ErrorCode::InvariantViolation, "connection curvature is not closed: residual " +
                                            num::format_double(f.closure_residual) + " exceeds " +
                                            num::format_double(opts.closure_tol) + " at t-node " +
                                            std::to_string(worst_i) + ", sample " + std::to_string(worst_k));
  return f;
}

curv::MetricJet kahler_jet(const MetricFrame& f, int i, int k) {
  require(i >= f.t_order / 2 && i <= f.grid.n - f.t_order / 2, "node too close to the t-boundary");
  SliceWork sw(f.cs.dof());
  fill_slice(f, i, sw);
  return assemble_kahler(f, sw, i, k);
}

curv::ScalarJet conformal_jet(const MetricFrame& f, int i) { return conformal_factor(f.map, f.grid.t(i)); }

curv::MetricJet einstein_jet(const MetricFrame& f, int i, int k) {
  return curv::exp(2.0 * conformal_jet(f, i)) * kahler_jet(f, i, k);
}

std::vector<curv::MetricJet> einstein_slice_jets(const MetricFrame& f, int i) {
  require(i >= f.t_order / 2 && i <= f.grid.n - f.t_order / 2, "node too close to the t-boundary");
  SliceWork sw(f.cs.dof());
  fill_slice(f, i, sw);
  const auto e2f = curv::exp(2.0 * conformal_jet(f, i));
  std::vector<curv::MetricJet> out;
  out.reserve(f.cs.dof());
  for (int k = 0; k < f.cs.dof(); ++k) out.push_back(e2f * assemble_kahler(f, sw, i, k));
  return out;
}

CurvatureField frame_curvature_serial(const MetricFrame& f) {
  CurvatureField c = prepare(f);
  SliceWork sw(c.dof);
  for (std::size_t r = 0; r < c.t_index.size(); ++r) curvature_slice(f, static_cast<int>(r), c.t_index[r], sw, c);
  summarize(f, c);
  return c;
}

CurvatureField frame_curvature_parallel(const MetricFrame& f) {
  CurvatureField c = prepare(f);
  const long rows = static_cast<long>(c.t_index.size());
#pragma omp parallel
  {
    SliceWork sw(c.dof);
#pragma omp for schedule(dynamic, 1)
    for (long r = 0; r < rows; ++r) curvature_slice(f, static_cast<int>(r), c.t_index[r], sw, c);
  }
  summarize(f, c);
  return c;
}

CurvatureField frame_curvature(const MetricFrame& f, bool parallel) {
  return parallel ? frame_curvature_parallel(f) : frame_curvature_serial(f);
}

CuspProfile cusp_comparison(const FrameSource& src, const CrossSection& cs, const FrameOptions& opts) {
  FrameSource model = src;
  model.u = ScalarField(src.u.grid, src.u.dof, 0.0);
  const TGrid& grid = src.u.grid;
  const int nt = grid.nodes();
  const int first = std::max(opts.clip, opts.t_order);
  const int stop = static_cast<int>(0.8 * grid.n);
  require(stop > first + 4, "t-grid too short for a cusp profile");

  CuspProfile p;
  std::vector<double> diff(nt, 0.0);
  if (cs.is_torus()) {
    FrameOptions o = opts;
    o.check_closure = false;
    const MetricFrame fr = assemble(src, cs, o);
    const MetricFrame fm = assemble(model, cs, o);
    const auto& G = cs.gram();
    const int ny = cs.ny();
    const double m = 0.5 * fr.flux * cs.sqrt_det_gram();
    for (int i = first; i <= stop; ++i) {
      const double dx = src.map.dxi(grid.t(i));
      double sup = 0.0;
      for (int k = 0; k < cs.dof(); ++k) {
        const double s1 = static_cast<double>(k / ny) / cs.nx(), s2 = static_cast<double>(k % ny) / ny;
        auto metric = [&](const MetricFrame& f) {
          const double w = f.w.at(i, k), y = f.wev.at(i, k);
          const double A[2] = {f.a1.at(i, k) - m * s2, f.a2.at(i, k) + m * s1};
          Mat4 g = Mat4::Zero();
          g(0, 0) = w * dx * dx;
          g(1, 1) = 1.0 / w;
          for (int a = 0; a < 2; ++a) {
            g(1, 2 + a) = g(2 + a, 1) = A[a] / w;
            for (int b = 0; b < 2; ++b) g(2 + a, 2 + b) = A[a] * A[b] / w + y * G(a, b);
          }
          return g;
        };
        const Mat4 gm = metric(fm);
        const Mat4 x = gm.inverse() * (metric(fr) - gm);
        sup = std::max(sup, std::sqrt(std::max(0.0, (x * x).trace())));
      }
      diff[i] = sup;
    }
  } else {
    const ScalarField up = point_field(src.u, cs);
    ScalarField w, y, w0, y0;
    values_all(src, up, opts.t_order, w, y);
    values_all(model, ScalarField(grid, up.dof, 0.0), opts.t_order, w0, y0);
    for (int i = first; i <= stop; ++i) {
      double sup = 0.0;
      for (int k = 0; k < up.dof; ++k) {
        const double wm = w0.at(i, k), ym = y0.at(i, k);
        const double a = (w.at(i, k) - wm) / wm;
        const double b = (1.0 / w.at(i, k) - 1.0 / wm) * wm;
        const double c = (y.at(i, k) - ym) / ym;
        sup = std::max(sup, std::sqrt(a * a + b * b + 2.0 * c * c));
      }
      diff[i] = sup;
    }
  }

  // distance along the end in the model metric
  ScalarField wm, ym;
  values_all(model, ScalarField(grid, 1, 0.0), opts.t_order, wm, ym);
  double r = 0.0;
  auto speed = [&](int i) {
    const double t = grid.t(i);
    return std::sqrt(wm.at(i, 0)) * std::abs(src.map.dxi(t) / src.map.xi(t));
  };
  for (int i = first; i <= stop; ++i) {
    if (i > first) r += 0.5 * grid.h * (speed(i - 1) + speed(i));
    if (!(diff[i] > 1e-12)) continue;
    p.t.push_back(grid.t(i));
    p.r.push_back(r);
    p.diff.push_back(diff[i]);
    p.log_diff.push_back(std::log(diff[i]));
  }
  p.points = static_cast<int>(p.r.size());
  // fit on the later half, past the boundary layer of the data
  const int j0 = p.points / 2, m = p.points - j0;
  if (m >= 5) {
    Eigen::MatrixXd X(m, 3);
    Eigen::VectorXd Y(m);
    for (int j = 0; j < m; ++j) {
      X(j, 0) = 1.0;
      X(j, 1) = p.r[j0 + j];
      X(j, 2) = p.r[j0 + j] * p.r[j0 + j];
      Y(j) = p.log_diff[j0 + j];
    }
    const Eigen::Vector3d c = X.colPivHouseholderQr().solve(Y);
    p.curvature = c(2);
    const Eigen::Vector2d l = X.leftCols(2).colPivHouseholderQr().solve(Y);
    p.slope = l(1);
    p.fit_from = j0;
    double worst = -1e300;
    for (int j = j0 + 1; j + 1 < p.points; ++j) {
      const double h0 = p.r[j] - p.r[j - 1], h1 = p.r[j + 1] - p.r[j];
      const double s0 = (p.log_diff[j] - p.log_diff[j - 1]) / h0;
      const double s1 = (p.log_diff[j + 1] - p.log_diff[j]) / h1;
      worst = std::max(worst, 2.0 * (s1 - s0) / (h0 + h1));
    }
    p.max_second_difference = worst;
    p.slope_change = 2.0 * p.curvature * (p.r.back() - p.r[j0]) / std::max(std::abs(p.slope), 1e-300);
    p.concave = p.slope_change < -0.05;
    p.linear = std::abs(p.slope_change) <= 0.05 && p.slope < 0.0;
  }
  return p;
}

}  // namespace toda
