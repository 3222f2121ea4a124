#include <doctest.h>

#include "cpcp/instance.hpp"
#include "cpcp/solver.hpp"
#include "helpers.hpp"

using namespace cpcp;

namespace {

double rel(const Matrix& x, const Matrix& x0) { return (x - x0).norm() / x0.norm(); }

}  // namespace

TEST_CASE("PCP recovers rank one plus three spikes") {
  const Index n = 20;
  Vector u = Vector::LinSpaced(n, 1.0, 2.0);
  Vector v = Vector::LinSpaced(n, -1.0, 1.0).array().cos();
  const Matrix l0 = u * v.transpose();
  Matrix s0 = Matrix::Zero(n, n);
  s0(2, 3) = 10.0;
  s0(11, 7) = -10.0;
  s0(17, 15) = 10.0;
  SolverOptions opts;
  opts.max_iters = 5000;
  const SolverResult res = solve_pcp(l0 + s0, opts);
  CHECK(res.status == SolverStatus::converged);
  CHECK(res.pcp);
  CHECK(rel(res.L_hat, l0) < 1e-3);
  CHECK(rel(res.S_hat, s0) < 1e-3);
  CHECK(res.lambda == doctest::Approx(1.0 / std::sqrt(20.0)));
}

TEST_CASE("an empty Q-perp reproduces PCP iterate for iterate") {
  const ProblemInstance inst = assemble({30, 30, 2, 0.05, 0}, 8);
  SolverOptions opts;
  opts.record_trace = true;
  const SolverResult a = solve_pcp(inst.D, opts);
  const SolverResult b = solve_cpcp(inst.D, SpanBasis(30, 30), opts);
  CHECK(a.iters == b.iters);
  CHECK(a.L_hat == b.L_hat);
  CHECK(a.S_hat == b.S_hat);
  REQUIRE(a.trace.size() == static_cast<std::size_t>(a.iters));
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].primal_residual == b.trace[k].primal_residual);
  }
}

TEST_CASE("components of D in Q-perp are ignored") {
  GenParams p{24, 24, 1, 0.05, 3};
  const ProblemInstance inst = assemble(p, 12);
  Vector c(3);
  c << 5.0, -2.0, 7.0;
  const Matrix shifted = inst.D + inst.qperp.combine(c);
  const SolverResult a = solve_cpcp(inst.D, inst.qperp);
  const SolverResult b = solve_cpcp(shifted, inst.qperp);
  CHECK(a.status == SolverStatus::converged);
  CHECK(b.status == SolverStatus::converged);
  CHECK(rel(b.L_hat, a.L_hat) < 1e-4);
  CHECK(rel(b.S_hat, a.S_hat) < 1e-4);
}

TEST_CASE("the ALM solution matches the proximal-gradient oracle") {
  GenParams p{12, 10, 1, 0.05, 2};
  const ProblemInstance inst = assemble(p, 3);
  const double lambda = default_lambda(12);
  SolverOptions opts;
  opts.tol_primal = opts.tol_change = 1e-10;
  opts.max_iters = 20000;
  const SolverResult alm = solve_cpcp(inst.D, inst.qperp, opts);
  const OracleResult ref = oracle_solve(inst.D, inst.qperp, lambda, 1e-8);
  CHECK(alm.objective == doctest::Approx(ref.objective).epsilon(1e-4));
  CHECK((alm.L_hat - ref.L).norm() <= 1e-3 * std::max(1.0, ref.L.norm()));
}

TEST_CASE("degenerate inputs") {
  const SolverResult zero = solve_pcp(Matrix::Zero(5, 5));
  CHECK(zero.status == SolverStatus::converged);
  CHECK(zero.L_hat.isZero());
  CHECK(zero.S_hat.isZero());
  CHECK_THROWS_AS(oracle_solve(Matrix::Zero(21, 20), SpanBasis(21, 20), 0.1, 1e-6),
                  std::invalid_argument);
  Matrix bad = Matrix::Ones(3, 3);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_pcp(bad), std::invalid_argument);
  CHECK_THROWS_AS(solve_cpcp(Matrix::Ones(3, 3), SpanBasis(3, 4)), std::invalid_argument);

  SolverOptions opts;
  opts.lambda = -1.0;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
  opts = {};
  opts.penalty_growth = 0.5;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
  opts = {};
  opts.max_iters = 0;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
}

TEST_CASE("iteration cap is reported") {
  const ProblemInstance inst = assemble({20, 20, 2, 0.1, 2}, 4);
  SolverOptions opts;
  opts.max_iters = 3;
  const SolverResult res = solve_cpcp(inst.D, inst.qperp, opts);
  CHECK(res.status == SolverStatus::max_iters);
  CHECK(res.iters == 3);
  CHECK(to_string(res.status) == "max_iters");
}

TEST_CASE("scaling D scales the solution") {
  const ProblemInstance inst = assemble({25, 25, 1, 0.05, 2}, 21);
  SolverOptions opts;
  opts.tol_primal = opts.tol_change = 1e-9;
  opts.max_iters = 5000;
  const SolverResult a = solve_cpcp(inst.D, inst.qperp, opts);
  const SolverResult b = solve_cpcp(3.0 * inst.D, inst.qperp, opts);
  CHECK(rel(b.L_hat, 3.0 * a.L_hat) < 1e-6);
  CHECK(rel(b.S_hat, 3.0 * a.S_hat) < 1e-6);
}

TEST_CASE("extreme lambda pushes all mass into one component") {
  const ProblemInstance inst = assemble({20, 20, 1, 0.1, 0}, 22);
  SolverOptions big;
  big.lambda = 100.0;
  CHECK(solve_pcp(inst.D, big).S_hat.norm() < 1e-6 * inst.D.norm());
  SolverOptions tiny;
  tiny.lambda = 1e-3;
  CHECK(solve_pcp(inst.D, tiny).L_hat.norm() < 1e-6 * inst.D.norm());
}

TEST_CASE("the solver never beats the ground truth when recovery succeeds") {
  const ProblemInstance inst = assemble({40, 40, 2, 0.05, 3}, 23);
  const SolverResult res = solve_cpcp(inst.D, inst.qperp);
  REQUIRE(rel(res.L_hat, inst.L0) < 1e-4);
  const double truth = nuclear_norm(inst.L0) + res.lambda * l1_norm(inst.S0);
  CHECK(res.objective <= truth * (1.0 + 1e-6));
  CHECK(res.objective >= truth * (1.0 - 1e-5));
}
