#include <doctest.h>

#include "cpcp/errors.hpp"
#include "cpcp/instance.hpp"
#include "cpcp/subspace.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cpcp;
using testing_util::gaussian;
using testing_util::max_abs_diff;

namespace {

TangentSpace random_tangent(Index m, Index n, Index r, std::uint64_t seed) {
  return gen_low_rank(m, n, r, seed).T;
}

SupportSet random_support(Index m, Index n, double rho, std::uint64_t seed) {
  return gen_sparse(m, n, rho, 1.0, seed).omega;
}

}  // namespace

TEST_CASE("support set construction and ordering") {
  CHECK_THROWS_AS(SupportSet::from_entries(2, 2, {{0, 0}, {0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(SupportSet::from_entries(2, 2, {{2, 0}}), std::invalid_argument);
  const SupportSet s = SupportSet::from_entries(2, 3, {{1, 0}, {0, 2}});
  CHECK(s.entries() == std::vector<Entry>{{0, 2}, {1, 0}});
  CHECK(s.complement().count() == 4);
  CHECK(s.is_subset_of(SupportSet::full(2, 3)));
  CHECK_FALSE(SupportSet::full(2, 3).is_subset_of(s));
}

TEST_CASE("tangent space rejects non-orthonormal factors") {
  CHECK_THROWS_AS(TangentSpace(Matrix::Ones(4, 1), Matrix::Ones(3, 1)), std::invalid_argument);
  CHECK_THROWS_AS(TangentSpace(Matrix::Identity(4, 2), Matrix::Identity(3, 1)),
                  std::invalid_argument);
  CHECK(TangentSpace::empty(4, 3).apply(Matrix::Ones(4, 3)).isZero());
}

TEST_CASE("P_T matches the explicit projector") {
  const TangentSpace t = random_tangent(6, 5, 2, 11);
  const Matrix proj = oracle::projector_from_basis(oracle::tangent_basis(t.U(), t.V()));
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Matrix x = gaussian(6, 5, 100 + s);
    CHECK(max_abs_diff(project_T(x, t), oracle::apply(proj, x)) < 1e-12);
  }
}

TEST_CASE("projectors are idempotent and self-adjoint") {
  const Index m = 7, n = 6;
  const TangentSpace t = random_tangent(m, n, 2, 3);
  const SupportSet omega = random_support(m, n, 0.2, 4);
  const SpanBasis q = gen_random_qperp(m, n, 3, 5);
  const std::vector<Subspace> spaces = {
      Subspace::tangent(t),
      Subspace::support(omega),
      Subspace::span(q),
      Subspace::tangent(t).complement(),
      Subspace::direct_sum(Subspace::tangent(t), Subspace::span(q)),
  };
  const Matrix x = gaussian(m, n, 6), y = gaussian(m, n, 7);
  for (const Subspace& s : spaces) {
    const Matrix px = s.apply(x);
    CHECK(max_abs_diff(s.apply(px), px) < 1e-10);
    CHECK(inner(px, y) == doctest::Approx(inner(x, s.apply(y))).epsilon(1e-10));
  }
}

TEST_CASE("direct sum projector matches the projector onto the concatenated basis") {
  const Index m = 6, n = 6;
  const TangentSpace t = random_tangent(m, n, 1, 21);
  const SupportSet omega = random_support(m, n, 0.15, 22);
  const SpanBasis q = gen_random_qperp(m, n, 2, 23);
  const Matrix bt = oracle::tangent_basis(t.U(), t.V());

  const Subspace tq = Subspace::direct_sum(Subspace::tangent(t), Subspace::span(q));
  const Matrix p_tq = oracle::projector_from_basis(oracle::concat(bt, oracle::span_basis(q)));
  const Subspace to = Subspace::direct_sum(Subspace::tangent(t), Subspace::support(omega));
  const Matrix p_to =
      oracle::projector_from_basis(oracle::concat(bt, oracle::support_basis(omega)));

  const Matrix x = gaussian(m, n, 24);
  CHECK(max_abs_diff(tq.apply(x), oracle::apply(p_tq, x)) < 1e-9);
  CHECK(max_abs_diff(to.apply(x), oracle::apply(p_to, x)) < 1e-9);
  CHECK(max_abs_diff(tq.complement().apply(x), x - oracle::apply(p_tq, x)) < 1e-9);
}

TEST_CASE("a sum with itself is degenerate") {
  const TangentSpace t = random_tangent(5, 5, 1, 31);
  try {
    (void)Subspace::direct_sum(Subspace::tangent(t), Subspace::tangent(t));
    FAIL("expected DegenerateSum");
  } catch (const DegenerateSum& e) {
    CHECK(e.measured_norm() == doctest::Approx(1.0));
  }
}

TEST_CASE("operator norm of a product agrees across methods and with the oracle") {
  const Index m = 8, n = 7;
  const TangentSpace t = random_tangent(m, n, 2, 41);
  const SupportSet omega = random_support(m, n, 0.2, 42);
  const SpanBasis q = gen_random_qperp(m, n, 3, 43);
  const Matrix bt = oracle::tangent_basis(t.U(), t.V());
  const Matrix bo = oracle::support_basis(omega);
  const Matrix bq = oracle::span_basis(q);

  struct Pair {
    Subspace a, b;
    Matrix ba, bb;
  };
  const std::vector<Pair> pairs = {
      {Subspace::support(omega), Subspace::tangent(t), bo, bt},
      {Subspace::span(q), Subspace::tangent(t), bq, bt},
      {Subspace::span(q), Subspace::support(omega), bq, bo},
  };
  for (const Pair& p : pairs) {
    const double want = oracle::product_norm(p.ba, p.bb);
    OpNormOptions dense;
    dense.method = OpNormMethod::dense;
    OpNormOptions power;
    power.method = OpNormMethod::power;
    power.rel_tol = 1e-12;
    power.max_iters = 20000;
    CHECK(op_norm_product(p.a, p.b).value == doctest::Approx(want).epsilon(1e-8));
    CHECK(op_norm_product(p.a, p.b, dense).value == doctest::Approx(want).epsilon(1e-8));
    CHECK(op_norm_product(p.a, p.b, power).value == doctest::Approx(want).epsilon(1e-4));
    CHECK(op_norm_product(p.b, p.a).value == doctest::Approx(want).epsilon(1e-8));
  }
  CHECK(op_norm_product(Subspace::support(omega), Subspace::support(omega.complement()))
            .value == 0.0);
}

TEST_CASE("coherence of flat and spiky factors") {
  const Index m = 4, n = 4;
  const TangentSpace flat(Matrix::Constant(m, 1, 0.5), Matrix::Constant(n, 1, 0.5));
  CHECK(coherence_mu(flat) == doctest::Approx(1.0));
  const TangentSpace spike(Matrix::Identity(m, 1), Matrix::Identity(n, 1));
  CHECK(coherence_mu(spike) == doctest::Approx(16.0));
  CHECK_THROWS_AS(coherence_mu(TangentSpace::empty(m, n)), std::invalid_argument);
}

TEST_CASE("nu coherence") {
  // A single element equal to one entry: ||G|| = 1, so nu = n.
  Matrix g = Matrix::Zero(3, 5);
  g(1, 2) = 1.0;
  CHECK(nu_coherence(SpanBasis::from_elements({g})) == doctest::Approx(5.0));
  CHECK(nu_coherence(gen_nu_coherent_qperp(20, 16, 8)) <= 2.0 + 1e-12);
  CHECK_THROWS_AS(nu_coherence(SpanBasis(3, 3)), std::invalid_argument);
}

TEST_CASE("projector diagonal and constrained gamma") {
  const Index m = 6, n = 5;
  const TangentSpace t = random_tangent(m, n, 1, 51);
  const SpanBasis q = gen_random_qperp(m, n, 2, 52);
  const Subspace s = Subspace::direct_sum(Subspace::tangent(t), Subspace::span(q));
  const Matrix proj = oracle::projector_from_basis(
      oracle::concat(oracle::tangent_basis(t.U(), t.V()), oracle::span_basis(q)));
  const Matrix diag = projector_diagonal(s);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) CHECK(diag(i, j) == doctest::Approx(proj(i + j * m, i + j * m)));

  const GammaEstimate exact = gamma_constrained(s, GammaMode::exact());
  CHECK(exact.value == doctest::Approx(diag.maxCoeff()));
  CHECK_FALSE(exact.lower_bound);
  const GammaEstimate sampled = gamma_constrained(s, GammaMode::sampled(7));
  CHECK(sampled.lower_bound);
  CHECK(sampled.value <= exact.value + 1e-15);
  CHECK(sampled.evaluated == 7);
}

TEST_CASE("check_direct_sum flags overlap") {
  const SupportSet a = SupportSet::from_entries(3, 3, {{0, 0}, {1, 1}});
  const SupportSet b = SupportSet::from_entries(3, 3, {{1, 1}});
  CHECK_FALSE(check_direct_sum(Subspace::support(a), Subspace::support(b)).independent);
  CHECK(check_direct_sum(Subspace::support(a), Subspace::support(a.complement())).independent);
}
