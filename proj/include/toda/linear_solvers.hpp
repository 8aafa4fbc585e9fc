#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace toda::linalg {

/// Square block matrix with m x m blocks of size b, nonzero only for
/// -lower <= col - row <= upper. Factored in place by block elimination
/// without inter-block pivoting (pivoting happens inside diagonal blocks).
class BlockBanded {
 public:
  BlockBanded(int blocks, int block_size, int lower, int upper);

  Eigen::MatrixXd& block(int row, int col);
  const Eigen::MatrixXd& block(int row, int col) const;
  bool in_band(int row, int col) const { return col - row >= -lower_ && col - row <= upper_; }
  int blocks() const { return m_; }
  int block_size() const { return b_; }

  void factor();
  /// Solves in place; rhs is block-major of length blocks * block_size.
  void solve(Eigen::VectorXd& rhs) const;

 private:
  int m_, b_, lower_, upper_;
  std::vector<Eigen::MatrixXd> band_;
  std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> pivots_;
  bool factored_ = false;
};

struct GmresResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

using LinearOp = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Restarted GMRES with right preconditioning; x holds the initial guess.
GmresResult gmres(const LinearOp& A, const LinearOp& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                  double rtol, int restart, int max_iter);

}  // namespace toda::linalg
