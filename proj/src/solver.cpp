#include "cpcp/solver.hpp"

#include <cmath>
#include <stdexcept>

namespace cpcp {

namespace {

constexpr int kDivergenceWindow = 50;
constexpr double kDivergenceFactor = 10.0;

}  // namespace

void SolverOptions::validate() const {
  if (lambda && !(*lambda > 0.0)) throw std::invalid_argument("solver: lambda must be positive");
  if (penalty_mu0 && !(*penalty_mu0 > 0.0)) {
    throw std::invalid_argument("solver: penalty_mu0 must be positive");
  }
  if (!(penalty_growth >= 1.0)) throw std::invalid_argument("solver: penalty_growth must be >= 1");
  if (!(penalty_cap_factor >= 1.0)) {
    throw std::invalid_argument("solver: penalty_cap_factor must be >= 1");
  }
  if (!(tol_primal > 0.0)) throw std::invalid_argument("solver: tol_primal must be positive");
  if (!(tol_change > 0.0)) throw std::invalid_argument("solver: tol_change must be positive");
  if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be positive");
}

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iters: return "max_iters";
    case SolverStatus::diverged: return "diverged";
  }
  return "unknown";
}

double default_lambda(Index m) { return 1.0 / std::sqrt(static_cast<double>(m)); }

SolverResult solve_cpcp(const Matrix& d, const SpanBasis& qperp, const SolverOptions& opts) {
  opts.validate();
  require_finite(d, "solver input D");
  if (d.rows() != qperp.rows() || d.cols() != qperp.cols()) {
    throw std::invalid_argument("solver: D and Q^perp have different shapes");
  }
  const Index m = d.rows(), n = d.cols();
  SolverResult res;
  res.lambda = opts.lambda.value_or(default_lambda(m));
  res.pcp = qperp.size() == 0;
  res.L_hat = Matrix::Zero(m, n);
  res.S_hat = Matrix::Zero(m, n);

  const Matrix pd = project_Q(d, qperp);
  const double pd_fro = pd.norm();
  const double scale = std::max(1.0, pd_fro);
  if (pd_fro == 0.0) {
    res.status = SolverStatus::converged;
    return res;
  }
  const double pd_spec = spectral_norm(pd);
  const double lambda = res.lambda;

  double mu = opts.penalty_mu0.value_or(1.25 / pd_spec);
  const double mu_max = mu * opts.penalty_cap_factor;
  Matrix y = pd / std::max(pd_spec, linf_norm(pd) / lambda);
  Matrix l = Matrix::Zero(m, n);
  Matrix s = Matrix::Zero(m, n);
  Matrix e = -qperp.apply(d);

  const double initial_residual = pd_fro / scale;
  double best_residual = initial_residual;
  Matrix best_l = l, best_s = s;
  int above = 0;

  for (int it = 1; it <= opts.max_iters; ++it) {
    const Matrix l_prev = l;
    const Matrix s_prev = s;
    double nuclear = 0.0;
    l = svt(d + e - s + y / mu, 1.0 / mu, &nuclear);
    s = soft_threshold(d + e - l + y / mu, lambda / mu);
    e = -qperp.apply(d - l - s + y / mu);
    const Matrix r = project_Q(d - l - s, qperp);
    y += mu * r;

    const double residual = r.norm() / scale;
    const double change = std::max((l - l_prev).norm(), (s - s_prev).norm()) / scale;
    const double objective = nuclear + lambda * s.cwiseAbs().sum();
    if (opts.record_trace) res.trace.push_back({it, residual, objective});
    res.iters = it;
    res.primal_residual = residual;
    res.objective = objective;

    if (residual < best_residual) {
      best_residual = residual;
      best_l = l;
      best_s = s;
    }
    above = residual > kDivergenceFactor * initial_residual ? above + 1 : 0;
    if (above >= kDivergenceWindow || !l.allFinite() || !s.allFinite()) {
      res.status = SolverStatus::diverged;
      res.L_hat = std::move(best_l);
      res.S_hat = std::move(best_s);
      res.primal_residual = best_residual;
      res.objective = nuclear_norm(res.L_hat) + lambda * l1_norm(res.S_hat);
      return res;
    }
    if (residual <= opts.tol_primal && change <= opts.tol_change) {
      res.status = SolverStatus::converged;
      break;
    }
    mu = std::min(mu * opts.penalty_growth, mu_max);
  }
  if (res.status != SolverStatus::converged) res.status = SolverStatus::max_iters;
  res.L_hat = std::move(l);
  res.S_hat = std::move(s);
  return res;
}

SolverResult solve_pcp(const Matrix& d, const SolverOptions& opts) {
  return solve_cpcp(d, SpanBasis(d.rows(), d.cols()), opts);
}

OracleResult oracle_solve(const Matrix& d, const SpanBasis& qperp, double lambda, double tol) {
  if (d.size() > kOracleMaxEntries) {
    throw std::invalid_argument("oracle_solve: limited to mn <= " +
                                std::to_string(kOracleMaxEntries) + " entries");
  }
  if (!(lambda > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("oracle_solve: lambda and tol must be positive");
  }
  require_finite(d, "oracle input D");
  const Index m = d.rows(), n = d.cols();
  OracleResult out{Matrix::Zero(m, n), Matrix::Zero(m, n), 0.0, 0.0, 0};
  const Matrix pd = project_Q(d, qperp);
  const double pd_fro = pd.norm();
  if (pd_fro == 0.0) return out;

  const double scale = spectral_norm(pd);
  const double beta_max = 1e10 / scale;
  const double inner_tol = 1e-8 * std::max(1.0, pd_fro);
  constexpr int kInnerCap = 200000;
  Matrix& l = out.L;
  Matrix& s = out.S;
  for (double beta = 1.0 / scale;; beta *= 10.0) {
    // The smooth term has gradient Lipschitz constant 2 beta in (L, S).
    const double step = 1.0 / (2.0 * beta);
    Matrix yl = l, ys = s;
    double t = 1.0;
    for (int k = 0; k < kInnerCap; ++k) {
      const Matrix g = -beta * project_Q(d - yl - ys, qperp);
      Matrix ln = svt(yl - step * g, step);
      Matrix sn = soft_threshold(ys - step * g, lambda * step);
      const double moved = (ln - l).norm() + (sn - s).norm();
      double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      // Adaptive restart (O'Donoghue and Candes): drop momentum when the
      // extrapolated step points uphill.
      const double uphill = (yl - ln).cwiseProduct(ln - l).sum() + (ys - sn).cwiseProduct(sn - s).sum();
      if (uphill > 0.0) {
        tn = 1.0;
        yl = ln;
        ys = sn;
      } else {
        yl = ln + ((t - 1.0) / tn) * (ln - l);
        ys = sn + ((t - 1.0) / tn) * (sn - s);
      }
      l = std::move(ln);
      s = std::move(sn);
      t = tn;
      ++out.iterations;
      // moved / step is the norm of the gradient mapping.
      if (moved <= inner_tol * step) break;
    }
    out.residual = project_Q(d - l - s, qperp).norm();
    if (beta >= beta_max || out.residual <= tol * std::max(1.0, pd_fro)) break;
  }
  out.objective = nuclear_norm(l) + lambda * l1_norm(s);
  return out;
}

}  // namespace cpcp
