#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cpcp/linalg.hpp"
#include "cpcp/subspace.hpp"

namespace cpcp {

struct SolverOptions {
  std::optional<double> lambda;       // default 1/sqrt(m)
  std::optional<double> penalty_mu0;  // default 1.25 / ||P_Q D||
  double penalty_growth = 1.5;
  double penalty_cap_factor = 100.0;  // mu never exceeds cap_factor * mu0
  double tol_primal = 1e-7;
  double tol_change = 1e-7;
  int max_iters = 1000;
  bool record_trace = false;

  // Throws std::invalid_argument on nonpositive lambda/tolerances etc.
  void validate() const;
};

enum class SolverStatus { converged, max_iters, diverged };
std::string to_string(SolverStatus s);

struct TracePoint {
  int iter = 0;
  double primal_residual = 0.0;
  double objective = 0.0;
};

struct SolverResult {
  Matrix L_hat;
  Matrix S_hat;
  SolverStatus status = SolverStatus::max_iters;
  int iters = 0;
  std::vector<TracePoint> trace;
  double objective = 0.0;       // ||L||_* + lambda ||S||_1
  double primal_residual = 0.0; // ||P_Q(D - L - S)||_F / max(1, ||P_Q D||_F)
  double lambda = 0.0;
  bool pcp = false;             // solved with Q = full space
};

double default_lambda(Index m);

// min ||L||_* + lambda ||S||_1  s.t.  P_Q D = P_Q(L + S), by inexact
// augmented Lagrangian. A slack E in Q^perp absorbs the unconstrained part of
// the residual, so the multiplier stays in Q and components of D in Q^perp
// are ignored.
SolverResult solve_cpcp(const Matrix& d, const SpanBasis& qperp, const SolverOptions& opts = {});

// The same solver with Q^perp = {0}.
SolverResult solve_pcp(const Matrix& d, const SolverOptions& opts = {});

struct OracleResult {
  Matrix L;
  Matrix S;
  double objective = 0.0;
  double residual = 0.0;  // ||P_Q(D - L - S)||_F
  int iterations = 0;
};

inline constexpr Index kOracleMaxEntries = 400;

// Independent small-scale solver: accelerated proximal gradient on
// ||L||_* + lambda ||S||_1 + beta/2 ||P_Q(D - L - S)||_F^2 with beta raised
// tenfold until the residual reaches tol * max(1, ||P_Q D||_F). Throws
// std::invalid_argument when mn > 400.
OracleResult oracle_solve(const Matrix& d, const SpanBasis& qperp, double lambda, double tol);

}  // namespace cpcp
