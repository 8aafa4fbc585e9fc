#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace toda::curv {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

/// Metric components with first and second coordinate derivatives at a point.
struct MetricJet {
  Mat4 g = Mat4::Identity();
  std::array<Mat4, 4> d;
  std::array<std::array<Mat4, 4>, 4> dd;
  MetricJet();
};

/// Value, gradient and Hessian of a scalar in four coordinates.
struct ScalarJet {
  double v = 0.0;
  Vec4 d = Vec4::Zero();
  Mat4 dd = Mat4::Zero();

  static ScalarJet constant(double c);
  ScalarJet inverse() const;
};
ScalarJet operator+(const ScalarJet& a, const ScalarJet& b);
ScalarJet operator*(const ScalarJet& a, const ScalarJet& b);
ScalarJet operator*(double c, const ScalarJet& a);
ScalarJet exp(const ScalarJet& a);

/// Jet of c * g and of g1 + g2.
MetricJet operator*(const ScalarJet& c, const MetricJet& g);
MetricJet operator+(const MetricJet& a, const MetricJet& b);

/// Assembles a metric jet from component jets (symmetric, c[a][b] == c[b][a] used for a <= b).
MetricJet assemble_jet(const std::array<std::array<ScalarJet, 4>, 4>& c);

struct PointCurvature {
  Mat4 ricci = Mat4::Zero();
  double scalar = 0.0;
  /// |Ric + 3 metric| in the metric's own norm.
  double einstein = 0.0;
  double weyl_plus = 0.0;
  double weyl_minus = 0.0;
  /// Full contractions over all index values.
  double weyl_sq = 0.0;
  double riemann_sq = 0.0;
  double traceless_ricci_sq = 0.0;
  /// Scalar curvature of the metric before a conformal change.
  double scalar_base = 0.0;
};

/// Curvature of the jet's metric. orientation = +1 when dx0^dx1^dx2^dx3 is positive.
PointCurvature evaluate(const MetricJet& j, int orientation = 1, double lambda = -3.0);

/// Curvature of h = e^{2f} g from the jet of g and the jet of f.
PointCurvature evaluate_conformal(const MetricJet& g, const ScalarJet& f, int orientation = 1, double lambda = -3.0);

using MetricFunction = std::function<Mat4(const Vec4&)>;

/// 4th-order central-difference jet of an analytic metric. Only coordinates
/// flagged active are differentiated; the others are treated as Killing.
MetricJet fd_jet(const MetricFunction& g, const Vec4& x, const Vec4& step, std::array<bool, 4> active);

/// ds^2/s^2 + s^2(dtheta^2 + dy1^2 + dy2^2) in (s, theta, y1, y2).
Mat4 hyperbolic_cusp(const Vec4& x);
/// (1/3)(dr^2 + e^{-2r}(dt + dx/y)^2 + y^{-2}(dx^2 + dy^2)) in (r, t, x, y).
Mat4 sigma_cusp_twisted(const Vec4& x);

struct FdLadder {
  std::vector<double> scale;     // step multiplier per level
  std::vector<double> residual;  // max |Ric + 3h| over the points
  std::vector<double> rate;      // log2 ratios of successive levels
};

/// Einstein residual of fd_jet at the points with steps step0 * 2^{-level}.
FdLadder einstein_fd_ladder(const MetricFunction& g, std::span<const Vec4> points, const Vec4& step0,
                            std::array<bool, 4> active, int levels);

/// Batch kernels: serial reference and OpenMP version.
void evaluate_serial(std::span<const MetricJet> jets, std::span<PointCurvature> out, int orientation,
                     double lambda = -3.0);
void evaluate_parallel(std::span<const MetricJet> jets, std::span<PointCurvature> out, int orientation,
                       double lambda = -3.0);

}  // namespace toda::curv
