#include "toda/cross_section.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "toda/error.hpp"

namespace toda {

using cplx = std::complex<double>;

struct CrossSection::Impl {
  SurfaceKind kind = SurfaceKind::FlatTorus;
  double curvature = 0.0;
  double volume = 1.0;
  double lambda1 = 0.0;

  int nx = 0, ny = 0;
  Eigen::Matrix2d lattice = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d gram = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d gram_inv = Eigen::Matrix2d::Identity();
  double sqrt_det = 1.0;
  std::vector<double> symbol;  // -|k|^2
  std::vector<double> k1, k2;  // 2 pi m_i, zero at Nyquist
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  int genus = 0;
  std::vector<double> eigen;
  int q = 0;
  Eigen::MatrixXd basis;  // q x modes

  ~Impl() {
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

namespace {

void check_size(std::span<const double> f, int n) {
  if (static_cast<int>(f.size()) != n) fail(ErrorCode::InvalidInput, "field slice size does not match the cross-section grid");
}

}  // namespace

CrossSection CrossSection::flat_torus(const Eigen::Matrix2d& basis, int nx, int ny, bool normalize) {
  require(nx >= 4 && ny >= 4 && nx % 2 == 0 && ny % 2 == 0, "torus grid sizes must be even and at least 4");
  require(basis.allFinite(), "torus basis must be finite");
  Eigen::Matrix2d L = basis;
  double det = L.determinant();
  const double scale = L.col(0).norm() * L.col(1).norm();
  if (!(std::abs(det) > 1e-12 * scale) || scale == 0.0)
    fail(ErrorCode::InvalidInput, "degenerate torus basis: columns are (nearly) linearly dependent");
  if (det < 0) {
    L.col(1) = -L.col(1);
    det = -det;
  }
  if (normalize) L /= std::sqrt(det);

  auto impl = std::make_shared<Impl>();
  impl->kind = SurfaceKind::FlatTorus;
  impl->curvature = 0.0;
  impl->lattice = L;
  impl->volume = normalize ? 1.0 : L.determinant();
  impl->gram = L.transpose() * L;
  impl->gram_inv = impl->gram.inverse();
  impl->sqrt_det = std::sqrt(impl->gram.determinant());
  impl->nx = nx;
  impl->ny = ny;

  const double tp = 2.0 * std::numbers::pi;
  const auto& gi = impl->gram_inv;
  const int nyc = ny / 2 + 1;
  impl->symbol.resize(static_cast<std::size_t>(nx) * nyc);
  impl->k1.resize(impl->symbol.size());
  impl->k2.resize(impl->symbol.size());
  for (int i = 0; i < nx; ++i) {
    const int m1 = i <= nx / 2 ? i : i - nx;
    const bool nyq1 = (2 * i == nx);
    for (int j = 0; j < nyc; ++j) {
      const int m2 = j;
      const bool nyq2 = (2 * j == ny);
      double q = gi(0, 0) * m1 * m1 + gi(1, 1) * m2 * m2;
      if (!nyq1 && !nyq2) q += 2.0 * gi(0, 1) * m1 * m2;
      const std::size_t s = static_cast<std::size_t>(i) * nyc + j;
      impl->symbol[s] = -tp * tp * q;
      impl->k1[s] = nyq1 ? 0.0 : tp * m1;
      impl->k2[s] = nyq2 ? 0.0 : tp * m2;
    }
  }

  // continuum lambda_1 over the dual lattice
  const double lam_min = gi.selfadjointView<Eigen::Upper>().eigenvalues().minCoeff();
  const double c0 = std::min(gi(0, 0), gi(1, 1));
  const int bound = static_cast<int>(std::ceil(std::sqrt(c0 / lam_min))) + 1;
  double best = c0;
  for (int a = -bound; a <= bound; ++a)
    for (int b = -bound; b <= bound; ++b) {
      if (a == 0 && b == 0) continue;
      best = std::min(best, gi(0, 0) * a * a + 2 * gi(0, 1) * a * b + gi(1, 1) * b * b);
    }
  impl->lambda1 = tp * tp * best;

  std::vector<double> rbuf(static_cast<std::size_t>(nx) * ny);
  std::vector<cplx> cbuf(static_cast<std::size_t>(nx) * nyc);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  impl->r2c = fftw_plan_dft_r2c_2d(nx, ny, rbuf.data(), reinterpret_cast<fftw_complex*>(cbuf.data()), flags);
  impl->c2r = fftw_plan_dft_c2r_2d(nx, ny, reinterpret_cast<fftw_complex*>(cbuf.data()), rbuf.data(), flags);
  if (!impl->r2c || !impl->c2r) fail(ErrorCode::Internal, "FFT plan creation failed");

  CrossSection cs;
  cs.impl_ = std::move(impl);
  return cs;
}

CrossSection CrossSection::synthetic_surface(int genus, std::vector<double> eigenvalues, int quadrature_factor) {
  require(genus >= 2, "synthetic surface requires genus >= 2");
  require(!eigenvalues.empty() && eigenvalues[0] == 0.0, "synthetic spectrum must start with the eigenvalue 0");
  for (std::size_t i = 1; i < eigenvalues.size(); ++i) {
    require(std::isfinite(eigenvalues[i]) && eigenvalues[i] > 0.0, "synthetic eigenvalues after the first must be positive");
    require(eigenvalues[i] >= eigenvalues[i - 1], "synthetic eigenvalues must be ascending");
  }
  require(quadrature_factor >= 2, "quadrature factor must be at least 2");
  auto impl = std::make_shared<Impl>();
  impl->kind = SurfaceKind::SyntheticSurface;
  impl->curvature = -1.0;
  impl->genus = genus;
  impl->volume = 4.0 * std::numbers::pi * (genus - 1);
  impl->eigen = std::move(eigenvalues);
  impl->lambda1 = impl->eigen.size() > 1 ? impl->eigen[1] : 0.0;
  const int m = static_cast<int>(impl->eigen.size());
  impl->q = std::max(8, quadrature_factor * m);
  impl->basis.resize(impl->q, m);
  for (int k = 0; k < impl->q; ++k) {
    const double th = 2.0 * std::numbers::pi * (k + 0.5) / impl->q;
    impl->basis(k, 0) = 1.0;
    for (int j = 1; j < m; ++j) impl->basis(k, j) = std::numbers::sqrt2 * std::cos(j * th);
  }
  CrossSection cs;
  cs.impl_ = std::move(impl);
  return cs;
}

SurfaceKind CrossSection::kind() const { return impl_->kind; }
double CrossSection::curvature() const { return impl_->curvature; }
double CrossSection::volume() const { return impl_->volume; }
double CrossSection::lambda1() const { return impl_->lambda1; }
int CrossSection::dof() const {
  return is_torus() ? impl_->nx * impl_->ny : static_cast<int>(impl_->eigen.size());
}
int CrossSection::nx() const { return impl_->nx; }
int CrossSection::ny() const { return impl_->ny; }
const Eigen::Matrix2d& CrossSection::lattice() const { return impl_->lattice; }
const Eigen::Matrix2d& CrossSection::gram() const { return impl_->gram; }
const Eigen::Matrix2d& CrossSection::gram_inverse() const { return impl_->gram_inv; }
double CrossSection::sqrt_det_gram() const { return impl_->sqrt_det; }
int CrossSection::genus() const { return impl_->genus; }
const std::vector<double>& CrossSection::eigenvalues() const { return impl_->eigen; }
int CrossSection::quadrature_points() const { return impl_->q; }

int CrossSection::spectral_size() const { return impl_->nx * (impl_->ny / 2 + 1); }

void CrossSection::forward(std::span<const double> f, cplx* out) const {
  if (!is_torus()) fail(ErrorCode::InvalidInput, "spectral transform requires a flat torus");
  check_size(f, dof());
  fftw_execute_dft_r2c(impl_->r2c, const_cast<double*>(f.data()), reinterpret_cast<fftw_complex*>(out));
}

void CrossSection::backward(const cplx* in, std::span<double> out) const {
  if (!is_torus()) fail(ErrorCode::InvalidInput, "spectral transform requires a flat torus");
  std::vector<cplx> tmp(in, in + spectral_size());
  fftw_execute_dft_c2r(impl_->c2r, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
  const double inv = 1.0 / dof();
  for (double& x : out) x *= inv;
}

const std::vector<double>& CrossSection::laplacian_symbol() const { return impl_->symbol; }

void CrossSection::laplacian(std::span<const double> f, std::span<double> out) const {
  check_size(f, dof());
  if (is_torus()) {
    std::vector<cplx> spec(spectral_size());
    forward(f, spec.data());
    for (std::size_t s = 0; s < spec.size(); ++s) spec[s] *= impl_->symbol[s];
    backward(spec.data(), out);
  } else {
    for (int j = 0; j < dof(); ++j) out[j] = -impl_->eigen[j] * f[j];
  }
}

std::vector<double> CrossSection::laplacian(std::span<const double> f) const {
  std::vector<double> out(f.size());
  laplacian(f, out);
  return out;
}

bool CrossSection::has_zero_mean(std::span<const double> w) const {
  return std::abs(integrate(w)) <= 1e-10 * sup_norm(w) * volume();
}

std::vector<double> CrossSection::solve_poisson_meanzero(std::span<const double> w) const {
  check_size(w, dof());
  if (!has_zero_mean(w)) fail(ErrorCode::InvalidInput, "Poisson solve requires a zero-mean right-hand side");
  std::vector<double> phi(w.size());
  if (is_torus()) {
    std::vector<cplx> spec(spectral_size());
    forward(w, spec.data());
    spec[0] = 0.0;
    for (std::size_t s = 1; s < spec.size(); ++s) spec[s] /= -impl_->symbol[s];
    backward(spec.data(), phi);
  } else {
    phi[0] = 0.0;
    for (int j = 1; j < dof(); ++j) phi[j] = w[j] / impl_->eigen[j];
  }
  return phi;
}

double CrossSection::mean(std::span<const double> f) const {
  check_size(f, dof());
  if (!is_torus()) return f[0];
  double s = 0.0;
  for (double x : f) s += x;
  return s / f.size();
}

double CrossSection::integrate(std::span<const double> f) const { return volume() * mean(f); }

double CrossSection::inner(std::span<const double> f, std::span<const double> g) const {
  check_size(f, dof());
  check_size(g, dof());
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return is_torus() ? volume() * s / f.size() : volume() * s;
}

std::vector<double> CrossSection::constant(double c) const {
  if (is_torus()) return std::vector<double>(dof(), c);
  std::vector<double> v(dof(), 0.0);
  v[0] = c;
  return v;
}

std::vector<double> CrossSection::synthesize(std::span<const double> coeffs) const {
  check_size(coeffs, dof());
  Eigen::Map<const Eigen::VectorXd> c(coeffs.data(), coeffs.size());
  Eigen::VectorXd v = impl_->basis * c;
  return {v.data(), v.data() + v.size()};
}

std::vector<double> CrossSection::project(std::span<const double> values) const {
  Eigen::Map<const Eigen::VectorXd> v(values.data(), values.size());
  Eigen::VectorXd c = impl_->basis.transpose() * v / static_cast<double>(impl_->q);
  return {c.data(), c.data() + c.size()};
}

std::vector<double> CrossSection::point_values(std::span<const double> f) const {
  if (is_torus()) return {f.begin(), f.end()};
  return synthesize(f);
}

double CrossSection::sup_norm(std::span<const double> f) const {
  if (is_torus()) {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
  }
  auto v = synthesize(f);
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void CrossSection::exp_field(std::span<const double> u, std::span<double> out) const {
  check_size(u, dof());
  if (is_torus()) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::exp(u[i]);
    return;
  }
  auto v = synthesize(u);
  for (double& x : v) x = std::exp(x);
  auto c = project(v);
  std::copy(c.begin(), c.end(), out.begin());
}

void CrossSection::expm1_field(std::span<const double> u, std::span<double> out) const {
  check_size(u, dof());
  if (is_torus()) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::expm1(u[i]);
    return;
  }
  auto v = synthesize(u);
  for (double& x : v) x = std::expm1(x);
  auto c = project(v);
  std::copy(c.begin(), c.end(), out.begin());
}

void CrossSection::exp_field_derivative(std::span<const double> u, std::span<const double> du,
                                        std::span<double> out) const {
  if (is_torus()) {
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::exp(u[i]) * du[i];
    return;
  }
  auto v = synthesize(u);
  auto dv = synthesize(du);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::exp(v[k]) * dv[k];
  auto c = project(v);
  std::copy(c.begin(), c.end(), out.begin());
}

Eigen::MatrixXd CrossSection::exp_jacobian(std::span<const double> u) const {
  const int n = dof();
  if (is_torus()) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) J(i, i) = std::exp(u[i]);
    return J;
  }
  auto v = synthesize(u);
  Eigen::VectorXd e(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) e[k] = std::exp(v[k]);
  const auto& S = impl_->basis;
  return S.transpose() * e.asDiagonal() * S / static_cast<double>(impl_->q);
}

Eigen::MatrixXd CrossSection::laplacian_matrix() const {
  const int n = dof();
  Eigen::MatrixXd L(n, n);
  std::vector<double> e(n, 0.0), col(n);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    laplacian(e, col);
    for (int i = 0; i < n; ++i) L(i, j) = col[i];
    e[j] = 0.0;
  }
  return L;
}

void CrossSection::gradient(std::span<const double> f, std::span<double> d1, std::span<double> d2) const {
  if (!is_torus()) fail(ErrorCode::InvalidInput, "pointwise gradient requires a flat torus");
  std::vector<cplx> spec(spectral_size()), tmp(spectral_size());
  forward(f, spec.data());
  const cplx I(0.0, 1.0);
  for (std::size_t s = 0; s < spec.size(); ++s) tmp[s] = I * impl_->k1[s] * spec[s];
  backward(tmp.data(), d1);
  for (std::size_t s = 0; s < spec.size(); ++s) tmp[s] = I * impl_->k2[s] * spec[s];
  backward(tmp.data(), d2);
}

void CrossSection::derivatives(std::span<const double> f, std::span<double> d1, std::span<double> d2,
                               std::span<double> d11, std::span<double> d12, std::span<double> d22) const {
  if (!is_torus()) fail(ErrorCode::InvalidInput, "pointwise derivatives require a flat torus");
  std::vector<cplx> spec(spectral_size()), tmp(spectral_size());
  forward(f, spec.data());
  const cplx I(0.0, 1.0);
  const auto& k1 = impl_->k1;
  const auto& k2 = impl_->k2;
  auto apply = [&](auto sym, std::span<double> out) {
    for (std::size_t s = 0; s < spec.size(); ++s) tmp[s] = sym(s) * spec[s];
    backward(tmp.data(), out);
  };
  apply([&](std::size_t s) { return I * k1[s]; }, d1);
  apply([&](std::size_t s) { return I * k2[s]; }, d2);
  apply([&](std::size_t s) { return cplx(-k1[s] * k1[s]); }, d11);
  apply([&](std::size_t s) { return cplx(-k1[s] * k2[s]); }, d12);
  apply([&](std::size_t s) { return cplx(-k2[s] * k2[s]); }, d22);
}

}  // namespace toda
