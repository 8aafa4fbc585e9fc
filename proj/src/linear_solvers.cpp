#include "toda/linear_solvers.hpp"

#include <cmath>

#include "toda/error.hpp"

namespace toda::linalg {

BlockBanded::BlockBanded(int blocks, int block_size, int lower, int upper)
    : m_(blocks), b_(block_size), lower_(lower), upper_(upper) {
  band_.assign(static_cast<std::size_t>(m_) * (lower_ + upper_ + 1), Eigen::MatrixXd::Zero(b_, b_));
}

Eigen::MatrixXd& BlockBanded::block(int row, int col) {
  if (!in_band(row, col)) fail(ErrorCode::Internal, "block outside band");
  return band_[static_cast<std::size_t>(row) * (lower_ + upper_ + 1) + (col - row + lower_)];
}

const Eigen::MatrixXd& BlockBanded::block(int row, int col) const {
  if (!in_band(row, col)) fail(ErrorCode::Internal, "block outside band");
  return band_[static_cast<std::size_t>(row) * (lower_ + upper_ + 1) + (col - row + lower_)];
}

void BlockBanded::factor() {
  pivots_.clear();
  pivots_.reserve(m_);
  for (int k = 0; k < m_; ++k) {
    pivots_.emplace_back(block(k, k));
    const Eigen::MatrixXd inv = pivots_.back().inverse();
    for (int i = k + 1; i <= std::min(k + lower_, m_ - 1); ++i) {
      Eigen::MatrixXd& lik = block(i, k);
      if (lik.isZero(0.0)) continue;
      // L_ik = A_ik A_kk^{-1}, stored in place of A_ik
      lik = (lik * inv).eval();
      for (int j = k + 1; j <= std::min(k + upper_, m_ - 1); ++j) {
        if (!in_band(i, j)) continue;
        block(i, j).noalias() -= lik * block(k, j);
      }
    }
  }
  factored_ = true;
}

void BlockBanded::solve(Eigen::VectorXd& rhs) const {
  if (!factored_) fail(ErrorCode::Internal, "block matrix not factored");
  auto seg = [&](int k) { return rhs.segment(static_cast<Eigen::Index>(k) * b_, b_); };
  for (int i = 0; i < m_; ++i)
    for (int k = std::max(0, i - lower_); k < i; ++k) seg(i) -= block(i, k) * seg(k);
  for (int i = m_ - 1; i >= 0; --i) {
    Eigen::VectorXd r = seg(i);
    for (int j = i + 1; j <= std::min(i + upper_, m_ - 1); ++j) r -= block(i, j) * seg(j);
    seg(i) = pivots_[i].solve(r);
  }
}

GmresResult gmres(const LinearOp& A, const LinearOp& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                  double rtol, int restart, int max_iter) {
  GmresResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    res.converged = true;
    return res;
  }
  const Eigen::Index n = b.size();
  std::vector<Eigen::VectorXd> V(restart + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
  Eigen::VectorXd cs(restart), sn(restart), g(restart + 1);
  Eigen::VectorXd w(n), z(n), r(n);

  while (res.iterations < max_iter) {
    A(x, r);
    r = b - r;
    double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    V[0] = r / beta;
    g.setZero();
    g[0] = beta;
    int j = 0;
    for (; j < restart && res.iterations < max_iter; ++j) {
      ++res.iterations;
      precond(V[j], z);
      A(z, w);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = w.dot(V[i]);
        w.noalias() -= H(i, j) * V[i];
      }
      H(j + 1, j) = w.norm();
      V[j + 1] = H(j + 1, j) > 0 ? Eigen::VectorXd(w / H(j + 1, j)) : Eigen::VectorXd::Zero(n);
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double den = std::hypot(H(j, j), H(j + 1, j));
      cs[j] = den > 0 ? H(j, j) / den : 1.0;
      sn[j] = den > 0 ? H(j + 1, j) / den : 0.0;
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      res.relative_residual = std::abs(g[j + 1]) / bnorm;
      if (res.relative_residual <= rtol) {
        ++j;
        break;
      }
    }
    Eigen::VectorXd y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    Eigen::VectorXd dx = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < j; ++i) dx.noalias() += y[i] * V[i];
    precond(dx, z);
    x += z;
    if (res.relative_residual <= rtol) {
      A(x, r);
      res.relative_residual = (b - r).norm() / bnorm;
      res.converged = res.relative_residual <= 10.0 * rtol;
      if (res.converged) return res;
    }
  }
  return res;
}

}  // namespace toda::linalg
