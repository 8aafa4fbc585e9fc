#include "toda/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include "toda/error.hpp"
#include "toda/linear_solvers.hpp"
#include "toda/numeric.hpp"

namespace toda {

using cplx = std::complex<double>;

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NewtonFailure: return "newton_failure";
    case SolveStatus::ContinuationExhausted: return "continuation_exhausted";
  }
  return "?";
}

TStencil TStencil::build(const TGrid& grid, int order) {
  require(order == 2 || order == 4 || order == 6, "t-order must be 2, 4 or 6");
  const int n = grid.n;
  require(n >= std::max(2, order + 2), "t-grid too short for the requested stencil order");
  TStencil st;
  st.order = order;
  st.rows.resize(n + 1);
  const double h = grid.h;
  auto make = [&](int i, int first, int count2, int first1, int count1) {
    Row r;
    r.first = first;
    r.d1.assign(count2, 0.0);
    r.d2.assign(count2, 0.0);
    std::vector<double> nodes2(count2), nodes1(count1);
    for (int k = 0; k < count2; ++k) nodes2[k] = first + k;
    for (int k = 0; k < count1; ++k) nodes1[k] = first1 + k;
    auto w2 = num::fd_weights(i, nodes2, 2);
    auto w1 = num::fd_weights(i, nodes1, 1);
    for (int k = 0; k < count2; ++k) r.d2[k] = w2[2][k] / (h * h);
    for (int k = 0; k < count1; ++k) r.d1[first1 - first + k] = w1[1][k] / h;
    return r;
  };
  for (int i = 1; i < n; ++i) {
    if (order == 2) {
      st.rows[i] = make(i, i - 1, 3, i - 1, 3);
    } else if (order == 6) {
      // one-sided (order + 2)-point rows within 3 of the ends
      if (i < 3) st.rows[i] = make(i, 0, 8, 0, 7);
      else if (i > n - 3) st.rows[i] = make(i, n - 7, 8, n - 6, 7);
      else st.rows[i] = make(i, i - 3, 7, i - 3, 7);
    } else if (i == 1) {
      st.rows[i] = make(i, 0, 6, 0, 5);
    } else if (i == n - 1) {
      st.rows[i] = make(i, n - 5, 6, n - 4, 5);
    } else {
      st.rows[i] = make(i, i - 2, 5, i - 2, 5);
    }
  }
  return st;
}

int TStencil::lower_bandwidth() const {
  int m = 0;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) m = std::max(m, static_cast<int>(i) - rows[i].first);
  return m;
}

int TStencil::upper_bandwidth() const {
  int m = 0;
  for (std::size_t i = 1; i + 1 < rows.size(); ++i)
    m = std::max(m, rows[i].first + static_cast<int>(rows[i].d2.size()) - 1 - static_cast<int>(i));
  return m;
}

std::vector<double> derivative_nodes(std::span<const double> f, double h) {
  const int n = static_cast<int>(f.size()) - 1;
  require(n >= 4, "derivative needs at least 5 nodes");
  std::vector<double> d(f.size());
  static const std::vector<double> nodes{0, 1, 2, 3, 4};
  static const auto w0 = num::fd_weights(0, nodes, 1)[1];
  static const auto w1 = num::fd_weights(1, nodes, 1)[1];
  static const auto wc = num::fd_weights(2, nodes, 1)[1];
  for (int i = 0; i <= n; ++i) {
    double s = 0.0;
    if (i == 0) {
      for (int k = 0; k < 5; ++k) s += w0[k] * f[k];
    } else if (i == 1) {
      for (int k = 0; k < 5; ++k) s += w1[k] * f[k];
    } else if (i == n) {
      for (int k = 0; k < 5; ++k) s -= w0[k] * f[n - k];
    } else if (i == n - 1) {
      for (int k = 0; k < 5; ++k) s -= w1[k] * f[n - k];
    } else {
      for (int k = 0; k < 5; ++k) s += wc[k] * f[i - 2 + k];
    }
    d[i] = s / h;
  }
  return d;
}

CanonicalOperator::CanonicalOperator(const CoefficientProfile::Samples& coeffs, const CrossSection& cs,
                                     const TGrid& grid, int order)
    : co_(coeffs), cs_(cs), grid_(grid), st_(TStencil::build(grid, order)) {
  require(static_cast<int>(co_.psi.size()) == grid.nodes(), "coefficient samples do not match the t-grid");
}

void CanonicalOperator::exp_all(const ScalarField& u, ScalarField& e, bool parallel) const {
  if (e.data.size() != u.data.size()) e = ScalarField(u.grid, u.dof);
  const int nodes = grid_.nodes();
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < nodes; ++i) cs_.expm1_field(u.slice(i), e.slice(i));
}

void CanonicalOperator::residual_node(int i, const ScalarField& u, const ScalarField& e, double* out) const {
  const int dof = cs_.dof();
  std::span<double> o(out, dof);
  cs_.laplacian(u.slice(i), o);
  const double twok = 2.0 * co_.k[i];
  auto ei = e.slice(i);
  for (int k = 0; k < dof; ++k) o[k] += twok * ei[k];
  const auto& row = st_.rows[i];
  for (std::size_t j = 0; j < row.d2.size(); ++j) {
    const double c = co_.psi[i] * row.d2[j] + co_.b[i] * row.d1[j];
    if (c == 0.0) continue;
    auto ej = e.slice(row.first + static_cast<int>(j));
    for (int k = 0; k < dof; ++k) o[k] += c * ej[k];
  }
}

void CanonicalOperator::residual_serial(const ScalarField& u, const ScalarField& e, std::vector<double>& r) const {
  r.resize(interior_size());
  const int dof = cs_.dof();
  for (int i = 1; i < grid_.n; ++i) residual_node(i, u, e, r.data() + static_cast<std::size_t>(i - 1) * dof);
}

void CanonicalOperator::residual_parallel(const ScalarField& u, const ScalarField& e, std::vector<double>& r) const {
  r.resize(interior_size());
  const int dof = cs_.dof();
  const int n = grid_.n;
#pragma omp parallel for schedule(static)
  for (int i = 1; i < n; ++i) residual_node(i, u, e, r.data() + static_cast<std::size_t>(i - 1) * dof);
}

void CanonicalOperator::residual(const ScalarField& u, const ScalarField& e, std::vector<double>& r,
                                 bool parallel) const {
  if (parallel) residual_parallel(u, e, r);
  else residual_serial(u, e, r);
}

void CanonicalOperator::jacobian_apply(const ScalarField& u, const ScalarField& e, std::span<const double> du,
                                       std::span<double> out, bool parallel) const {
  const int dof = cs_.dof();
  const int n = grid_.n;
  std::vector<double> de(static_cast<std::size_t>(n + 1) * dof, 0.0);
  const bool torus = cs_.is_torus();
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 1; i < n; ++i) {
    const double* d = du.data() + static_cast<std::size_t>(i - 1) * dof;
    double* o = de.data() + static_cast<std::size_t>(i) * dof;
    if (torus) {
      auto ei = e.slice(i);
      for (int k = 0; k < dof; ++k) o[k] = (ei[k] + 1.0) * d[k];
    } else {
      cs_.exp_field_derivative(u.slice(i), {d, static_cast<std::size_t>(dof)}, {o, static_cast<std::size_t>(dof)});
    }
  }
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 1; i < n; ++i) {
    std::span<double> o(out.data() + static_cast<std::size_t>(i - 1) * dof, dof);
    cs_.laplacian(du.subspan(static_cast<std::size_t>(i - 1) * dof, dof), o);
    const double twok = 2.0 * co_.k[i];
    const double* dei = de.data() + static_cast<std::size_t>(i) * dof;
    for (int k = 0; k < dof; ++k) o[k] += twok * dei[k];
    const auto& row = st_.rows[i];
    for (std::size_t j = 0; j < row.d2.size(); ++j) {
      const int node = row.first + static_cast<int>(j);
      if (node == 0 || node == n) continue;
      const double c = co_.psi[i] * row.d2[j] + co_.b[i] * row.d1[j];
      const double* dej = de.data() + static_cast<std::size_t>(node) * dof;
      for (int k = 0; k < dof; ++k) o[k] += c * dej[k];
    }
  }
}

namespace {

/// Mode-wise tridiagonal approximation of the torus Jacobian: the slice
/// Laplacian acting on z / E is replaced by gamma_i Delta z with gamma_i the
/// slice mean of 1/E, and second-order t-differences are used.
class TorusPreconditioner {
 public:
  TorusPreconditioner(const CanonicalOperator& op, const ScalarField& e, bool parallel)
      : op_(op), parallel_(parallel) {
    const auto& cs = op.cross_section();
    const auto& co = op.coefficients();
    const int n = op.grid().n;
    const double h = op.grid().h;
    dof_ = cs.dof();
    ns_ = cs.spectral_size();
    lo_.resize(n + 1);
    up_.resize(n + 1);
    di_.resize(n + 1);
    gamma_.resize(n + 1);
    inv_e_.resize(static_cast<std::size_t>(n + 1) * dof_);
    for (int i = 1; i < n; ++i) {
      lo_[i] = co.psi[i] / (h * h) - co.b[i] / (2 * h);
      up_[i] = co.psi[i] / (h * h) + co.b[i] / (2 * h);
      auto ei = e.slice(i);
      double g = 0.0;
      for (int k = 0; k < dof_; ++k) {
        const double inv = 1.0 / (ei[k] + 1.0);
        inv_e_[static_cast<std::size_t>(i) * dof_ + k] = inv;
        g += inv;
      }
      gamma_[i] = g / dof_;
      di_[i] = -2.0 * co.psi[i] / (h * h) + 2.0 * co.k[i];
    }
  }

  void apply(const Eigen::VectorXd& r, Eigen::VectorXd& z) const {
    const auto& cs = op_.cross_section();
    const int n = op_.grid().n;
    const int m = n - 1;
    std::vector<cplx> spec(static_cast<std::size_t>(m) * ns_);
#pragma omp parallel for schedule(static) if (parallel_)
    for (int i = 0; i < m; ++i)
      cs.forward({r.data() + static_cast<std::size_t>(i) * dof_, static_cast<std::size_t>(dof_)},
                 spec.data() + static_cast<std::size_t>(i) * ns_);
    const auto& sym = cs.laplacian_symbol();
#pragma omp parallel if (parallel_)
    {
      std::vector<double> cp(m);
      std::vector<cplx> dp(m);
#pragma omp for schedule(static)
      for (int s = 0; s < ns_; ++s) {
        // Thomas algorithm over interior nodes 1..n-1 for mode s
        for (int j = 0; j < m; ++j) {
          const int i = j + 1;
          const double d = di_[i] + gamma_[i] * sym[s];
          const cplx rhs = spec[static_cast<std::size_t>(j) * ns_ + s];
          if (j == 0) {
            cp[j] = up_[i] / d;
            dp[j] = rhs / d;
          } else {
            const double den = d - lo_[i] * cp[j - 1];
            cp[j] = up_[i] / den;
            dp[j] = (rhs - lo_[i] * dp[j - 1]) / den;
          }
        }
        spec[static_cast<std::size_t>(m - 1) * ns_ + s] = dp[m - 1];
        for (int j = m - 2; j >= 0; --j)
          spec[static_cast<std::size_t>(j) * ns_ + s] = dp[j] - cp[j] * spec[static_cast<std::size_t>(j + 1) * ns_ + s];
      }
    }
    z.resize(r.size());
#pragma omp parallel for schedule(static) if (parallel_)
    for (int j = 0; j < m; ++j) {
      std::span<double> zj(z.data() + static_cast<std::size_t>(j) * dof_, dof_);
      cs.backward(spec.data() + static_cast<std::size_t>(j) * ns_, zj);
      const double* inv = inv_e_.data() + static_cast<std::size_t>(j + 1) * dof_;
      for (int k = 0; k < dof_; ++k) zj[k] *= inv[k];
    }
  }

 private:
  const CanonicalOperator& op_;
  bool parallel_;
  int dof_ = 0, ns_ = 0;
  std::vector<double> lo_, up_, di_, gamma_, inv_e_;
};

struct NewtonOutcome {
  bool converged = false;
  int iterations = 0;
  int linear_iterations = 0;
  double residual = 0.0;
};

class NewtonDriver {
 public:
  NewtonDriver(const CanonicalOperator& op, const SolverOptions& opts) : op_(op), opts_(opts) {
    const auto& cs = op.cross_section();
    direct_ = opts.linear == LinearSolver::Direct ||
              (opts.linear == LinearSolver::Auto && (!cs.is_torus() || cs.dof() <= 64));
    if (!cs.is_torus() && opts.linear == LinearSolver::Krylov)
      fail(ErrorCode::InvalidInput, "the Krylov route needs a flat torus cross-section");
    if (direct_) lap_ = cs.laplacian_matrix();
  }

  double residual_norm(const ScalarField& u, ScalarField& e, std::vector<double>& r) const {
    op_.exp_all(u, e, opts_.parallel);
    op_.residual(u, e, r, opts_.parallel);
    return num::sup_abs(r);
  }

  NewtonOutcome run(ScalarField& u) const {
    NewtonOutcome out;
    ScalarField e, e_try;
    std::vector<double> r, r_try;
    double rn = residual_norm(u, e, r);
    const int dof = op_.cross_section().dof();
    const int n = op_.grid().n;
    ScalarField u_try = u;
    while (true) {
      out.residual = rn;
      if (rn <= opts_.tol_newton) {
        out.converged = true;
        return out;
      }
      if (out.iterations >= opts_.max_newton) return out;
      ++out.iterations;
      Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
      Eigen::VectorXd du = Eigen::VectorXd::Zero(rhs.size());
      if (direct_) {
        auto J = assemble(u, e);
        J.factor();
        du = rhs;
        J.solve(du);
      } else {
        TorusPreconditioner pc(op_, e, opts_.parallel);
        auto A = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
          y.resize(x.size());
          op_.jacobian_apply(u, e, {x.data(), static_cast<std::size_t>(x.size())},
                             {y.data(), static_cast<std::size_t>(y.size())}, opts_.parallel);
        };
        auto M = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { pc.apply(x, y); };
        const double eta = std::max(1e-13, std::min(1e-2, 0.1 * rn));
        auto g = linalg::gmres(A, M, rhs, du, eta, opts_.gmres_restart, opts_.gmres_max_iter);
        out.linear_iterations += g.iterations;
      }
      double lambda = 1.0;
      bool accepted = false;
      while (lambda >= std::ldexp(1.0, -20)) {
        for (int i = 1; i < n; ++i) {
          auto ut = u_try.slice(i);
          auto u0 = u.slice(i);
          const double* d = du.data() + static_cast<std::size_t>(i - 1) * dof;
          for (int k = 0; k < dof; ++k) ut[k] = u0[k] + lambda * d[k];
        }
        double rt = std::numeric_limits<double>::infinity();
        bool finite = true;
        for (double x : u_try.data) finite = finite && std::isfinite(x);
        if (finite) rt = residual_norm(u_try, e_try, r_try);
        if (rt < rn) {
          std::swap(u.data, u_try.data);
          std::swap(e.data, e_try.data);
          std::swap(r, r_try);
          rn = rt;
          accepted = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!accepted) {
        out.residual = rn;
        return out;
      }
    }
  }

 private:
  linalg::BlockBanded assemble(const ScalarField& u, const ScalarField& e) const {
    const auto& cs = op_.cross_section();
    const auto& st = op_.stencil();
    const auto& co = op_.coefficients();
    const int n = op_.grid().n;
    const int dof = cs.dof();
    linalg::BlockBanded J(n - 1, dof, st.lower_bandwidth(), st.upper_bandwidth());
    std::vector<Eigen::MatrixXd> jexp(n + 1);
    for (int i = 1; i < n; ++i) {
      if (cs.is_torus()) {
        auto ei = e.slice(i);
        jexp[i] = Eigen::MatrixXd::Zero(dof, dof);
        for (int k = 0; k < dof; ++k) jexp[i](k, k) = ei[k] + 1.0;
      } else {
        jexp[i] = cs.exp_jacobian(u.slice(i));
      }
    }
    for (int i = 1; i < n; ++i) {
      const auto& row = st.rows[i];
      J.block(i - 1, i - 1) += lap_ + 2.0 * co.k[i] * jexp[i];
      for (std::size_t j = 0; j < row.d2.size(); ++j) {
        const int node = row.first + static_cast<int>(j);
        if (node == 0 || node == n) continue;
        const double c = co.psi[i] * row.d2[j] + co.b[i] * row.d1[j];
        J.block(i - 1, node - 1) += c * jexp[node];
      }
    }
    return J;
  }

  const CanonicalOperator& op_;
  const SolverOptions& opts_;
  bool direct_ = false;
  Eigen::MatrixXd lap_;
};

}  // namespace

double mass_drift(const CrossSection& cs, const ScalarField& u) {
  double m = 0.0;
  std::vector<double> e(cs.dof());
  for (int i = 0; i < u.grid.nodes(); ++i) {
    cs.exp_field(u.slice(i), e);
    m = std::max(m, std::abs(cs.mean(e) - 1.0));
  }
  return m;
}

double residual_sup(const CoefficientProfile& profile, const CrossSection& cs, const ScalarField& u, int order) {
  CanonicalOperator op(profile.sample(u.grid), cs, u.grid, order);
  ScalarField e;
  std::vector<double> r;
  op.exp_all(u, e, true);
  op.residual(u, e, r, true);
  return num::sup_abs(r);
}

SolveResult solve(const CoefficientProfile& profile, const CrossSection& cs, std::span<const double> phi_n,
                  const TGrid& grid, const SolverOptions& opts) {
  require(static_cast<int>(phi_n.size()) == cs.dof(), "boundary data size does not match the cross-section");
  SolveResult res{ScalarField(grid, cs.dof()), {}};
  auto& rep = res.report;
  rep.phi_sup = cs.sup_norm(phi_n);
  CanonicalOperator op(profile.sample(grid), cs, grid, opts.t_order);
  NewtonDriver newton(op, opts);

  std::vector<double> targets;
  if (!opts.schedule.empty()) {
    targets = opts.schedule;
  } else {
    const int k = std::max(1, opts.continuation_steps);
    for (int j = 1; j <= k; ++j) targets.push_back(static_cast<double>(j) / k);
  }
  const bool trivial = std::all_of(phi_n.begin(), phi_n.end(), [](double x) { return x == 0.0; });

  ScalarField accepted(grid, cs.dof());
  double s_prev = 0.0;
  bool halved = false;
  std::size_t idx = 0;
  if (trivial) targets = {std::min(1.0, opts.stop_at_s)};
  while (idx < targets.size() && s_prev < opts.stop_at_s) {
    const double s = std::min(targets[idx], opts.stop_at_s);
    if (s <= s_prev) {
      ++idx;
      continue;
    }
    ScalarField u = accepted;
    auto bslice = continuation_slice(cs, phi_n, s);
    std::copy(bslice.begin(), bslice.end(), u.slice(0).begin());
    std::fill(u.slice(grid.n).begin(), u.slice(grid.n).end(), 0.0);
    auto out = newton.run(u);
    ContinuationStep step{s, out.iterations, out.linear_iterations, out.residual, out.converged};
    rep.steps.push_back(step);
    rep.newton_total += out.iterations;
    rep.linear_total += out.linear_iterations;
    if (out.converged) {
      accepted = std::move(u);
      s_prev = s;
      if (s >= targets[idx]) ++idx;
      continue;
    }
    const double ds = 0.5 * (s - s_prev);
    if (ds < opts.min_step) {
      rep.status = halved ? SolveStatus::ContinuationExhausted : SolveStatus::NewtonFailure;
      rep.failing_stage = "continuation step s=" + num::format_double(s);
      rep.message = (halved ? "continuation step halving exhausted" : "Newton did not converge") +
                    std::string(" at s=") + num::format_double(s) + ", last residual " +
                    num::format_double(out.residual);
      res.u = std::move(u);
      break;
    }
    halved = true;
    targets.insert(targets.begin() + static_cast<std::ptrdiff_t>(idx), s_prev + ds);
  }
  if (rep.status == SolveStatus::Converged) res.u = std::move(accepted);
  rep.s_reached = s_prev;

  ScalarField e;
  std::vector<double> r;
  op.exp_all(res.u, e, opts.parallel);
  op.residual(res.u, e, r, opts.parallel);
  rep.pde_residual_sup = num::sup_abs(r);
  rep.mass_drift_sup = mass_drift(cs, res.u);
  rep.phi_sup = cs.sup_norm(res.u.slice(0));
  for (int i = 0; i < grid.nodes(); ++i) rep.u_sup = std::max(rep.u_sup, cs.sup_norm(res.u.slice(i)));
  rep.max_principle_ok = rep.u_sup <= rep.phi_sup + 1e-8;
  return res;
}

}  // namespace toda
