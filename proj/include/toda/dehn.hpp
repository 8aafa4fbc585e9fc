#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "toda/curvature.hpp"
#include "toda/metric_frame.hpp"

namespace toda {

/// Toral black hole ds^2/V + V dtheta^2 + s^2 dy^2, V = s^2 - a/s.
struct BlackHole {
  double a = 1.0;

  double s_plus() const;
  double beta() const;  // theta period closing the circle smoothly at s_plus
  double V(double s) const;
  double dV(double s) const;
  /// Metric in (s, theta, y1, y2).
  curv::Mat4 metric(const curv::Vec4& x) const;
  /// |h_BH - h_hyp|_{h_hyp} at s.
  double deviation(double s) const;
};

struct MatchResult {
  double l = 0.0, R = 0.0;
  double a = 0.0;
  double x = 0.0;  // s_plus e^R
  double s_plus = 0.0, beta = 0.0;
  /// relative residual of 16 pi^2 (1 - e^{3R} a) / (9 a^{2/3} e^{2R}) = l^2
  double residual = 0.0;
  /// relative gap of beta^2 V(e^{-R}) = l^2
  double consistency = 0.0;
};

/// a in (0, e^{-3R}) from the matching relation. l is the length of the
/// closed geodesic in the slice metric at s = e^{-R}.
MatchResult match_parameters(double l, double R);

struct LatticeMatch {
  MatchResult match;
  Eigen::Matrix3d cusp_gram;  // slice metric at s = e^{-R} on the cusp generators
  Eigen::Matrix3d bh_lattice;  // generators in (theta, y1, y2)
  Eigen::Matrix3d bh_gram;
  double length_gap = 0.0;  // max relative edge-length mismatch
  double angle_gap = 0.0;   // max angle mismatch in radians
  double sigma_gap = 0.0;   // |image of sigma - (beta, 0, 0)| / beta
};

/// Lattice of the quotient black hole matching the cusp torus. Columns of
/// cusp_basis are the generators in orthonormal coordinates of g_T3 with the
/// chosen closed geodesic first.
LatticeMatch match_lattice(const Eigen::Matrix3d& cusp_basis, double R);

/// Cutoff profile: 1 for x <= -10, 0 for x >= 10, septic smoothstep between.
double cutoff(double x, int deriv = 0);

enum class CutoffMode { Smooth, Zero, One };

struct GluedOptions {
  CutoffMode mode = CutoffMode::Smooth;
  /// samples per unit of log s outside the frame grid
  int samples_per_unit = 20;
  /// log s extent sampled beyond each side of the band
  double margin = 0.5;
  /// max tail deviation of the frame from the model before the analytic extension is used
  double tail_tol = 1e-10;
  /// weight exponent of (s/s_plus)^delta
  double delta = 1.0;
  double outside_tol = 1e-8;
};

struct GluedDefect {
  MatchResult match;
  std::vector<double> rho;      // log s + R
  std::vector<double> defect;   // sup over the slice of |Ric + 3h| of the glued metric
  std::vector<double> weighted; // (s/s_plus)^delta defect
  std::vector<bool> in_grid;
  double band_sup = 0.0;
  /// over band samples whose defect exceeds 100 times the outside floor
  double weighted_sup = 0.0;
  double outside_sup = 0.0;
  bool supported_in_band = false;
  double tail_deviation = 0.0;
  double chi_d1_sup = 0.0, chi_d2_sup = 0.0;
  int grid_samples = 0;
};

/// (1 - chi) h + chi h_BH on the band around s = e^{-R}, with s = 1/t on a
/// Type I degree-0 frame. The black hole circle is the frame fiber.
GluedDefect glued_defect(const MetricFrame& cusp, double R, double l, const GluedOptions& opts = {});

}  // namespace toda
