#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace toda {

enum class SurfaceKind { FlatTorus, SyntheticSurface };

/// Closed surface: either a flat torus sampled on an n_x by n_y grid in
/// lattice coordinates s in [0,1)^2 with a spectral Laplacian, or a
/// genus >= 2 surrogate that stores abstract mode coefficients and a
/// prescribed spectrum. Immutable; copies share the FFT plans.
class CrossSection {
 public:
  static CrossSection flat_torus(const Eigen::Matrix2d& basis, int nx = 64, int ny = 64, bool normalize = true);
  static CrossSection synthetic_surface(int genus, std::vector<double> eigenvalues, int quadrature_factor = 4);

  SurfaceKind kind() const;
  bool is_torus() const { return kind() == SurfaceKind::FlatTorus; }
  double curvature() const;
  double volume() const;
  /// Number of stored values per slice: grid points or modes.
  int dof() const;
  double lambda1() const;

  // torus data
  int nx() const;
  int ny() const;
  const Eigen::Matrix2d& lattice() const;
  /// Metric of the torus in lattice coordinates, G = L^T L.
  const Eigen::Matrix2d& gram() const;
  const Eigen::Matrix2d& gram_inverse() const;
  double sqrt_det_gram() const;

  // surrogate data
  int genus() const;
  const std::vector<double>& eigenvalues() const;
  int quadrature_points() const;

  /// Delta f with -Delta >= 0.
  void laplacian(std::span<const double> f, std::span<double> out) const;
  std::vector<double> laplacian(std::span<const double> f) const;
  /// phi with -Delta phi = w and zero mean; w must have zero mean.
  std::vector<double> solve_poisson_meanzero(std::span<const double> w) const;
  bool has_zero_mean(std::span<const double> w) const;

  double mean(std::span<const double> f) const;
  double integrate(std::span<const double> f) const;
  double inner(std::span<const double> f, std::span<const double> g) const;
  std::vector<double> constant(double c) const;
  double sup_norm(std::span<const double> f) const;
  /// Values at sample points: the torus grid, or the surrogate quadrature nodes.
  std::vector<double> point_values(std::span<const double> f) const;

  /// e^u as a field: pointwise on the torus, projected on the surrogate.
  void exp_field(std::span<const double> u, std::span<double> out) const;
  /// exp_field(u) - 1, accurate when u is small.
  void expm1_field(std::span<const double> u, std::span<double> out) const;
  /// Directional derivative of exp_field at u along du.
  void exp_field_derivative(std::span<const double> u, std::span<const double> du, std::span<double> out) const;
  Eigen::MatrixXd exp_jacobian(std::span<const double> u) const;
  Eigen::MatrixXd laplacian_matrix() const;

  // spectral access (torus only)
  int spectral_size() const;
  void forward(std::span<const double> f, std::complex<double>* out) const;
  /// Inverse transform including the 1/N normalization.
  void backward(const std::complex<double>* in, std::span<double> out) const;
  /// -|k|^2 per spectral slot, as used by the Laplacian.
  const std::vector<double>& laplacian_symbol() const;
  /// Derivatives with respect to the lattice coordinates s1, s2.
  void gradient(std::span<const double> f, std::span<double> d1, std::span<double> d2) const;
  /// First and second lattice derivatives: s1, s2, s1s1, s1s2, s2s2. Nyquist modes dropped.
  void derivatives(std::span<const double> f, std::span<double> d1, std::span<double> d2, std::span<double> d11,
                   std::span<double> d12, std::span<double> d22) const;

  // surrogate transforms
  std::vector<double> synthesize(std::span<const double> coeffs) const;
  std::vector<double> project(std::span<const double> values) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

}  // namespace toda
