#include "toda/dehn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "toda/error.hpp"
#include "toda/numeric.hpp"

namespace toda {

using curv::MetricJet;
using curv::ScalarJet;
constexpr double kPi = std::numbers::pi;

double BlackHole::s_plus() const { return std::cbrt(a); }
double BlackHole::beta() const { return 4.0 * kPi / (3.0 * s_plus()); }
double BlackHole::V(double s) const { return s * s - a / s; }
double BlackHole::dV(double s) const { return 2.0 * s + a / (s * s); }

curv::Mat4 BlackHole::metric(const curv::Vec4& x) const {
  const double s = x[0], v = V(s);
  curv::Vec4 d(1.0 / v, v, s * s, s * s);
  return d.asDiagonal();
}

double BlackHole::deviation(double s) const {
  // relative gaps of the ds^2 and dtheta^2 coefficients; the base agrees exactly
  const double q = a / (s * s * s);
  return std::hypot(1.0 / (1.0 - q) - 1.0, q);
}

MatchResult match_parameters(double l, double R) {
  if (!(l > 0.0) || !std::isfinite(l) || !std::isfinite(R) || !(R > 0.0))
    fail(ErrorCode::InvalidInput, "no root in (0, e^{-3R}) for l = " + num::format_double(l) +
                                      ", R = " + num::format_double(R));
  const double c = 16.0 * kPi * kPi / 9.0;
  // x = s_plus e^R solves c (1 - x^3) = l^2 x^2, decreasing on [0, 1]
  auto f = [&](double x) { return c * (1.0 - x * x * x) - l * l * x * x; };
  double x = num::find_root(f, 0.0, 1.0, 1e-15);
  for (int it = 0; it < 2; ++it) {
    const double df = -3.0 * c * x * x - 2.0 * l * l * x;
    x -= f(x) / df;
  }
  if (!(x > 0.0 && x < 1.0)) fail(ErrorCode::InvalidInput, "no root in (0, e^{-3R})");
  MatchResult m;
  m.l = l;
  m.R = R;
  m.x = x;
  m.a = x * x * x * std::exp(-3.0 * R);
  BlackHole bh{m.a};
  m.s_plus = bh.s_plus();
  m.beta = bh.beta();
  const double lhs = 16.0 * kPi * kPi * (1.0 - std::exp(3.0 * R) * m.a) /
                     (9.0 * std::pow(m.a, 2.0 / 3.0) * std::exp(2.0 * R));
  m.residual = std::abs(lhs - l * l) / (l * l);
  m.consistency = std::abs(m.beta * m.beta * bh.V(std::exp(-R)) - l * l) / (l * l);
  return m;
}

LatticeMatch match_lattice(const Eigen::Matrix3d& cusp_basis, double R) {
  require(std::abs(cusp_basis.determinant()) > 0.0, "cusp generators are degenerate");
  const Eigen::Vector3d sigma = cusp_basis.col(0);
  const double e = std::exp(-R);
  LatticeMatch out;
  out.match = match_parameters(e * sigma.norm(), R);
  const BlackHole bh{out.match.a};
  const double v = bh.V(e);
  const Eigen::Matrix3d q =
      Eigen::Quaterniond::FromTwoVectors(sigma.normalized(), Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Vector3d slice(v, e * e, e * e);  // black hole slice metric on (theta, y1, y2)
  const Eigen::Vector3d root(std::sqrt(v), e, e);
  out.bh_lattice = root.cwiseInverse().asDiagonal() * (e * q * cusp_basis);
  out.bh_gram = out.bh_lattice.transpose() * slice.asDiagonal() * out.bh_lattice;
  out.cusp_gram = e * e * cusp_basis.transpose() * cusp_basis;
  for (int i = 0; i < 3; ++i) {
    const double li = std::sqrt(out.cusp_gram(i, i)), mi = std::sqrt(out.bh_gram(i, i));
    out.length_gap = std::max(out.length_gap, std::abs(mi - li) / li);
    for (int j = i + 1; j < 3; ++j) {
      const double ac = std::acos(std::clamp(out.cusp_gram(i, j) / (li * std::sqrt(out.cusp_gram(j, j))), -1.0, 1.0));
      const double ab = std::acos(std::clamp(out.bh_gram(i, j) / (mi * std::sqrt(out.bh_gram(j, j))), -1.0, 1.0));
      out.angle_gap = std::max(out.angle_gap, std::abs(ac - ab));
    }
  }
  out.sigma_gap = (out.bh_lattice.col(0) - Eigen::Vector3d(out.match.beta, 0, 0)).norm() / out.match.beta;
  return out;
}

double cutoff(double x, int deriv) {
  const double p = (x + 10.0) / 20.0;
  if (p <= 0.0) return deriv == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return 0.0;
  const double r = 1.0 - p;
  switch (deriv) {
    case 0: return 1.0 - p * p * p * p * (35.0 - 84.0 * p + 70.0 * p * p - 20.0 * p * p * p);
    case 1: return -140.0 * std::pow(p * r, 3) / 20.0;
    case 2: return -420.0 * p * p * r * r * (1.0 - 2.0 * p) / 400.0;
  }
  fail(ErrorCode::InvalidInput, "cutoff derivative order must be 0, 1 or 2");
}

namespace {

// jets in (t, theta, s1, s2) depending on t only
ScalarJet t_jet(double v, double d, double dd) {
  ScalarJet j;
  j.v = v;
  j.d[0] = d;
  j.dd(0, 0) = dd;
  return j;
}

struct Pieces {
  ScalarJet tinv2, chi;
  MetricJet bh, model;
};

Pieces pieces(double t, double R, const BlackHole& bh, double c2, double b, const Eigen::Matrix2d& gram,
              CutoffMode mode) {
  Pieces p;
  p.tinv2 = t_jet(1.0 / (t * t), -2.0 / (t * t * t), 6.0 / (t * t * t * t));
  const ScalarJet q = t_jet(bh.a * t * t * t, 3.0 * bh.a * t * t, 6.0 * bh.a * t);
  const ScalarJet one_minus_q = ScalarJet::constant(1.0) + (-1.0) * q;

  std::array<std::array<ScalarJet, 4>, 4> c{};
  c[0][0] = p.tinv2 * one_minus_q.inverse();
  c[1][1] = (1.0 / c2) * (p.tinv2 * one_minus_q);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[2 + i][2 + j] = (b * gram(i, j)) * p.tinv2;
  p.bh = curv::assemble_jet(c);

  MetricJet m0;
  m0.g.setIdentity();
  m0.g.block<2, 2>(2, 2) = b * gram;
  p.model = p.tinv2 * m0;

  const double rho = R - std::log(t);
  switch (mode) {
    case CutoffMode::Zero: p.chi = ScalarJet::constant(0.0); break;
    case CutoffMode::One: p.chi = ScalarJet::constant(1.0); break;
    case CutoffMode::Smooth: {
      const double c1 = cutoff(rho, 1), cc = cutoff(rho, 2);
      p.chi = t_jet(cutoff(rho, 0), -c1 / t, (cc + c1) / (t * t));
    }
  }
  return p;
}

MetricJet blend(const ScalarJet& chi, const MetricJet& h, const MetricJet& hbh) {
  const ScalarJet one_minus = ScalarJet::constant(1.0) + (-1.0) * chi;
  return one_minus * h + chi * hbh;
}

}  // namespace

GluedDefect glued_defect(const MetricFrame& f, double R, double l, const GluedOptions& opts) {
  require(!f.type_ii && f.degree == 0 && f.map.id == BvpId::BVP1,
          "glued_defect needs a Type I degree-0 AH cusp frame (BVP1)");
  require(opts.margin >= 0.0 && opts.samples_per_unit > 0, "bad glued_defect options");
  GluedDefect out;
  out.match = match_parameters(l, R);
  const BlackHole bh{out.match.a};
  const double x = out.match.x;
  const double c2 = 1.0 - x * x * x;
  const double rho_lo = -10.0 - opts.margin, rho_hi = 10.0 + opts.margin;
  if (!(x < std::exp(rho_lo)))
    fail(ErrorCode::InvalidInput, "transition band reaches the black hole horizon; increase l");

  const int i0 = f.first_node(), i1 = f.last_node();
  const double t_lo = f.grid.t(i0), t_hi = f.grid.t(i1);
  // t = e^{R - rho}
  if (std::exp(R - rho_hi) < t_lo) fail(ErrorCode::InvalidInput, "band outside the cusp_frame grid");

  struct Sample {
    double rho;
    int node;  // -1 beyond the grid
  };
  std::vector<Sample> samples;
  for (int i = i0; i <= i1; ++i) {
    const double rho = R - std::log(f.grid.t(i));
    if (rho >= rho_lo && rho <= rho_hi) samples.push_back({rho, i});
  }
  out.grid_samples = static_cast<int>(samples.size());
  const double rho_ext = std::min(rho_hi, R - std::log(t_hi));
  if (rho_ext > rho_lo) {
    const int dof = f.cs.dof();
    for (int k = 0; k < dof; ++k) {
      out.tail_deviation = std::max({out.tail_deviation, std::abs(f.u.at(i1, k)), std::abs(f.w.at(i1, k) - 1.0),
                                     std::abs(f.a1.at(i1, k)), std::abs(f.a2.at(i1, k))});
    }
    if (!(out.tail_deviation <= opts.tail_tol))
      fail(ErrorCode::InvalidInput, "band outside the cusp_frame grid: tail deviation " +
                                        num::format_double(out.tail_deviation) + " above " +
                                        num::format_double(opts.tail_tol));
    const int n = std::max(2, static_cast<int>(std::ceil((rho_ext - rho_lo) * opts.samples_per_unit)) + 1);
    // the end point rho_ext belongs to the grid when the frame reaches the band
    const bool open_end = out.grid_samples > 0;
    for (int j = 0; j < n; ++j) {
      if (open_end && j == n - 1) break;
      samples.push_back({rho_lo + (rho_ext - rho_lo) * j / (n - 1), -1});
    }
  }
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) { return a.rho < b.rho; });

  const double b = std::exp(f.vm[0][i1]);
  const Eigen::Matrix2d gram = f.cs.gram();
  const long ns = static_cast<long>(samples.size());
  out.rho.resize(ns);
  out.defect.resize(ns);
  out.weighted.resize(ns);
  out.in_grid.resize(ns);
#pragma omp parallel for schedule(dynamic, 1)
  for (long j = 0; j < ns; ++j) {
    const auto& sm = samples[j];
    const double t = std::exp(R - sm.rho);
    const auto pc = pieces(sm.node >= 0 ? f.grid.t(sm.node) : t, R, bh, c2, b, gram, opts.mode);
    double worst = 0.0;
    if (sm.node >= 0) {
      for (const auto& h : einstein_slice_jets(f, sm.node))
        worst = std::max(worst, curv::evaluate(blend(pc.chi, h, pc.bh), f.orientation).einstein);
    } else {
      worst = curv::evaluate(blend(pc.chi, pc.model, pc.bh), f.orientation).einstein;
    }
    out.rho[j] = sm.rho;
    out.defect[j] = worst;
    out.weighted[j] = std::pow(std::exp(sm.rho) / x, opts.delta) * worst;
  }
  for (long j = 0; j < ns; ++j) {
    out.in_grid[j] = samples[j].node >= 0;
    if (std::abs(out.rho[j]) <= 10.0)
      out.band_sup = std::max(out.band_sup, out.defect[j]);
    else
      out.outside_sup = std::max(out.outside_sup, out.defect[j]);
  }
  // the weight reaches e^10 / x at the outer edge, where only rounding is left
  const double floor = 100.0 * std::max(out.outside_sup, 1e-15);
  for (long j = 0; j < ns; ++j)
    if (std::abs(out.rho[j]) <= 10.0 && out.defect[j] > floor) out.weighted_sup = std::max(out.weighted_sup, out.weighted[j]);
  out.supported_in_band = out.outside_sup <= opts.outside_tol;
  for (int j = 0; j <= 2000; ++j) {
    const double r = -10.0 + 20.0 * j / 2000.0;
    out.chi_d1_sup = std::max(out.chi_d1_sup, std::abs(cutoff(r, 1)));
    out.chi_d2_sup = std::max(out.chi_d2_sup, std::abs(cutoff(r, 2)));
  }
  return out;
}

}  // namespace toda
