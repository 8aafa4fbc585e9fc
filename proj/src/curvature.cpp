#include "toda/curvature.hpp"

#include <cmath>

#include "toda/error.hpp"

namespace toda::curv {

namespace {

using R4 = std::array<std::array<std::array<std::array<double, 4>, 4>, 4>, 4>;

struct Geometry {
  Mat4 ginv;
  double gam1[4][4][4];  // Gamma_{a,bc}
  double gam2[4][4][4];  // Gamma^a_{bc}
  R4 riem;               // R_abcd
  Mat4 ricci;
  double scalar = 0.0;
};

void compute_geometry(const MetricJet& j, Geometry& G) {
  G.ginv = j.g.inverse();
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) G.gam1[a][b][c] = 0.5 * (j.d[c](a, b) + j.d[b](a, c) - j.d[a](b, c));
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        double s = 0.0;
        for (int d = 0; d < 4; ++d) s += G.ginv(a, d) * G.gam1[d][b][c];
        G.gam2[a][b][c] = s;
      }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          double r = 0.5 * (j.dd[b][c](a, d) + j.dd[a][d](b, c) - j.dd[b][d](a, c) - j.dd[a][c](b, d));
          for (int e = 0; e < 4; ++e) r += G.gam2[e][b][c] * G.gam1[e][a][d] - G.gam2[e][b][d] * G.gam1[e][a][c];
          G.riem[a][b][c][d] = r;
        }
  G.ricci.setZero();
  for (int b = 0; b < 4; ++b)
    for (int d = 0; d < 4; ++d) {
      double s = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) s += G.ginv(a, c) * G.riem[a][b][c][d];
      G.ricci(b, d) = s;
    }
  G.ricci = 0.5 * (G.ricci + G.ricci.transpose()).eval();
  G.scalar = (G.ginv.cwiseProduct(G.ricci)).sum();
}

/// Frame F with F^T g F = I.
Mat4 orthonormal_frame(const Mat4& g) {
  Eigen::LLT<Mat4> llt(g);
  if (llt.info() != Eigen::Success) fail(ErrorCode::InvariantViolation, "metric is not positive definite");
  Mat4 L = llt.matrixL();
  return L.inverse().transpose();
}

struct WeylParts {
  double plus = 0.0, minus = 0.0, sq = 0.0;
};

/// Weyl tensor in an orthonormal frame from the frame Riemann tensor and Ricci.
WeylParts weyl_parts(const R4& Rf, const Mat4& ricf, double s, int orientation) {
  R4 W;
  auto delta = [](int i, int j) { return i == j ? 1.0 : 0.0; };
  double sq = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          const double w = Rf[i][j][k][l] -
                           0.5 * (ricf(i, k) * delta(j, l) - ricf(i, l) * delta(j, k) + ricf(j, l) * delta(i, k) -
                                  ricf(j, k) * delta(i, l)) +
                           s / 6.0 * (delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k));
          W[i][j][k][l] = w;
          sq += w * w;
        }
  static const int P[3][2][2] = {{{0, 1}, {2, 3}}, {{0, 2}, {3, 1}}, {{0, 3}, {1, 2}}};
  WeylParts out;
  out.sq = sq;
  for (int sign : {1, -1}) {
    const double sg = sign * orientation;
    Eigen::Matrix3d M;
    for (int A = 0; A < 3; ++A)
      for (int B = 0; B < 3; ++B) {
        const auto& p = P[A][0];
        const auto& q = P[A][1];
        const auto& r = P[B][0];
        const auto& t = P[B][1];
        M(A, B) = 0.5 * (W[p[0]][p[1]][r[0]][r[1]] + sg * W[p[0]][p[1]][t[0]][t[1]] +
                         sg * W[q[0]][q[1]][r[0]][r[1]] + W[q[0]][q[1]][t[0]][t[1]]);
      }
    (sign == 1 ? out.plus : out.minus) = M.norm();
  }
  return out;
}

R4 to_frame(const R4& R, const Mat4& F) {
  // successive index contractions keep this at 4 * 4^5 operations
  R4 a{}, b{};
  for (int i = 0; i < 4; ++i)
    for (int q = 0; q < 4; ++q)
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) {
          double v = 0.0;
          for (int p = 0; p < 4; ++p) v += F(p, i) * R[p][q][r][s];
          a[i][q][r][s] = v;
        }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 4; ++s) {
          double v = 0.0;
          for (int q = 0; q < 4; ++q) v += F(q, j) * a[i][q][r][s];
          b[i][j][r][s] = v;
        }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int s = 0; s < 4; ++s) {
          double v = 0.0;
          for (int r = 0; r < 4; ++r) v += F(r, k) * b[i][j][r][s];
          a[i][j][k][s] = v;
        }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          double v = 0.0;
          for (int s = 0; s < 4; ++s) v += F(s, l) * a[i][j][k][s];
          b[i][j][k][l] = v;
        }
  return b;
}

double traceless_sq(const Mat4& ricf, double s) {
  Mat4 r0 = ricf - (s / 4.0) * Mat4::Identity();
  return r0.squaredNorm();
}

}  // namespace

MetricJet::MetricJet() {
  for (auto& m : d) m.setZero();
  for (auto& row : dd)
    for (auto& m : row) m.setZero();
}

ScalarJet ScalarJet::constant(double c) {
  ScalarJet j;
  j.v = c;
  return j;
}

ScalarJet ScalarJet::inverse() const {
  ScalarJet r;
  r.v = 1.0 / v;
  r.d = -d / (v * v);
  r.dd = -dd / (v * v) + 2.0 * (d * d.transpose()) / (v * v * v);
  return r;
}

ScalarJet operator+(const ScalarJet& a, const ScalarJet& b) {
  ScalarJet r;
  r.v = a.v + b.v;
  r.d = a.d + b.d;
  r.dd = a.dd + b.dd;
  return r;
}

ScalarJet operator*(const ScalarJet& a, const ScalarJet& b) {
  ScalarJet r;
  r.v = a.v * b.v;
  r.d = a.d * b.v + a.v * b.d;
  r.dd = a.dd * b.v + a.d * b.d.transpose() + b.d * a.d.transpose() + a.v * b.dd;
  return r;
}

ScalarJet operator*(double c, const ScalarJet& a) {
  ScalarJet r;
  r.v = c * a.v;
  r.d = c * a.d;
  r.dd = c * a.dd;
  return r;
}

ScalarJet exp(const ScalarJet& a) {
  ScalarJet r;
  r.v = std::exp(a.v);
  r.d = r.v * a.d;
  r.dd = r.v * (a.dd + a.d * a.d.transpose());
  return r;
}

MetricJet operator*(const ScalarJet& c, const MetricJet& g) {
  MetricJet r;
  r.g = c.v * g.g;
  for (int p = 0; p < 4; ++p) {
    r.d[p] = c.v * g.d[p] + c.d[p] * g.g;
    for (int q = 0; q < 4; ++q)
      r.dd[p][q] = c.v * g.dd[p][q] + c.d[p] * g.d[q] + c.d[q] * g.d[p] + c.dd(p, q) * g.g;
  }
  return r;
}

MetricJet operator+(const MetricJet& a, const MetricJet& b) {
  MetricJet r;
  r.g = a.g + b.g;
  for (int p = 0; p < 4; ++p) {
    r.d[p] = a.d[p] + b.d[p];
    for (int q = 0; q < 4; ++q) r.dd[p][q] = a.dd[p][q] + b.dd[p][q];
  }
  return r;
}

MetricJet assemble_jet(const std::array<std::array<ScalarJet, 4>, 4>& c) {
  MetricJet j;
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) {
      const ScalarJet& s = c[a][b];
      j.g(a, b) = j.g(b, a) = s.v;
      for (int p = 0; p < 4; ++p) {
        j.d[p](a, b) = j.d[p](b, a) = s.d[p];
        for (int q = 0; q < 4; ++q) j.dd[p][q](a, b) = j.dd[p][q](b, a) = s.dd(p, q);
      }
    }
  return j;
}

PointCurvature evaluate(const MetricJet& j, int orientation, double lambda) {
  Geometry G;
  compute_geometry(j, G);
  const Mat4 F = orthonormal_frame(j.g);
  const R4 Rf = to_frame(G.riem, F);
  const Mat4 ricf = F.transpose() * G.ricci * F;
  PointCurvature pc;
  pc.ricci = G.ricci;
  pc.scalar = G.scalar;
  pc.scalar_base = G.scalar;
  pc.einstein = (ricf - lambda * Mat4::Identity()).norm();
  auto w = weyl_parts(Rf, ricf, G.scalar, orientation);
  pc.weyl_plus = w.plus;
  pc.weyl_minus = w.minus;
  pc.weyl_sq = w.sq;
  double rs = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) rs += Rf[a][b][c][d] * Rf[a][b][c][d];
  pc.riemann_sq = rs;
  pc.traceless_ricci_sq = traceless_sq(ricf, G.scalar);
  return pc;
}

PointCurvature evaluate_conformal(const MetricJet& j, const ScalarJet& f, int orientation, double lambda) {
  Geometry G;
  compute_geometry(j, G);
  const Mat4 F = orthonormal_frame(j.g);
  const R4 Rf = to_frame(G.riem, F);
  const Mat4 ricf_g = F.transpose() * G.ricci * F;
  // Hessian of f for g
  Mat4 hess = f.dd;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) hess(a, b) -= G.gam2[c][a][b] * f.d[c];
  const double lap = G.ginv.cwiseProduct(hess).sum();
  const double grad2 = f.d.dot(G.ginv * f.d);
  const Mat4 ric_h = G.ricci - 2.0 * (hess - f.d * f.d.transpose()) - (lap + 2.0 * grad2) * j.g;
  const double e2f = std::exp(2.0 * f.v);
  PointCurvature pc;
  pc.ricci = ric_h;
  pc.scalar_base = G.scalar;
  pc.scalar = (G.scalar - 6.0 * lap - 6.0 * grad2) / e2f;
  // h-orthonormal frame is e^{-f} F
  const Mat4 ricf_h = F.transpose() * ric_h * F / e2f;
  pc.einstein = (ricf_h - lambda * Mat4::Identity()).norm();
  auto w = weyl_parts(Rf, ricf_g, G.scalar, orientation);
  pc.weyl_plus = w.plus / e2f;
  pc.weyl_minus = w.minus / e2f;
  pc.weyl_sq = w.sq / (e2f * e2f);
  pc.traceless_ricci_sq = traceless_sq(ricf_h, pc.scalar);
  pc.riemann_sq = pc.weyl_sq + 2.0 * pc.traceless_ricci_sq + pc.scalar * pc.scalar / 6.0;
  return pc;
}

MetricJet fd_jet(const MetricFunction& g, const Vec4& x, const Vec4& step, std::array<bool, 4> active) {
  static const double w1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  static const double w2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  MetricJet j;
  j.g = g(x);
  for (int a = 0; a < 4; ++a) {
    if (!active[a]) continue;
    std::array<Mat4, 5> vals;
    for (int k = 0; k < 5; ++k) {
      if (k == 2) {
        vals[k] = j.g;
        continue;
      }
      Vec4 y = x;
      y[a] += (k - 2) * step[a];
      vals[k] = g(y);
    }
    Mat4 d1 = Mat4::Zero(), d2 = Mat4::Zero();
    for (int k = 0; k < 5; ++k) {
      d1 += w1[k] * vals[k];
      d2 += w2[k] * vals[k];
    }
    j.d[a] = d1 / step[a];
    j.dd[a][a] = d2 / (step[a] * step[a]);
  }
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      if (!active[a] || !active[b]) continue;
      Mat4 m = Mat4::Zero();
      for (int p = 0; p < 5; ++p)
        for (int q = 0; q < 5; ++q) {
          if (p == 2 || q == 2) continue;
          Vec4 y = x;
          y[a] += (p - 2) * step[a];
          y[b] += (q - 2) * step[b];
          m += w1[p] * w1[q] * g(y);
        }
      m /= step[a] * step[b];
      j.dd[a][b] = m;
      j.dd[b][a] = m;
    }
  return j;
}

Mat4 hyperbolic_cusp(const Vec4& x) {
  const double s2 = x[0] * x[0];
  Vec4 d(1.0 / s2, s2, s2, s2);
  return d.asDiagonal();
}

Mat4 sigma_cusp_twisted(const Vec4& x) {
  const double e = std::exp(-2.0 * x[0]), y = x[3];
  // fiber 1-form dt + dx/y
  Vec4 eta(0.0, 1.0, 1.0 / y, 0.0);
  Mat4 g = e * eta * eta.transpose();
  g(0, 0) += 1.0;
  g(2, 2) += 1.0 / (y * y);
  g(3, 3) += 1.0 / (y * y);
  return g / 3.0;
}

FdLadder einstein_fd_ladder(const MetricFunction& g, std::span<const Vec4> points, const Vec4& step0,
                            std::array<bool, 4> active, int levels) {
  FdLadder out;
  for (int l = 0; l < levels; ++l) {
    const double m = std::ldexp(1.0, -l);
    double worst = 0.0;
    for (const auto& x : points) worst = std::max(worst, evaluate(fd_jet(g, x, m * step0, active)).einstein);
    out.scale.push_back(m);
    out.residual.push_back(worst);
    if (l > 0) out.rate.push_back(std::log2(out.residual[l - 1] / worst));
  }
  return out;
}

void evaluate_serial(std::span<const MetricJet> jets, std::span<PointCurvature> out, int orientation, double lambda) {
  for (std::size_t k = 0; k < jets.size(); ++k) out[k] = evaluate(jets[k], orientation, lambda);
}

void evaluate_parallel(std::span<const MetricJet> jets, std::span<PointCurvature> out, int orientation,
                       double lambda) {
  const long n = static_cast<long>(jets.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) out[k] = evaluate(jets[k], orientation, lambda);
}

}  // namespace toda::curv
