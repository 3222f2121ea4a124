#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "cpcp/certificate.hpp"
#include "cpcp/errors.hpp"
#include "cpcp/instance.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace cpcp;
using testing_util::max_abs_diff;

namespace {

Matrix gamma_perp_projector(const TangentSpace& t, const SpanBasis& q) {
  return oracle::projector_from_basis(
      oracle::concat(oracle::tangent_basis(t.U(), t.V()), oracle::span_basis(q)));
}

Matrix random_signs(const SupportSet& omega, std::uint64_t seed) {
  return gen_sparse_on(omega, 1.0, seed).S0;
}

}  // namespace

TEST_CASE("golfing depth and rate") {
  CHECK(golfing_depth(std::exp(2.0)) == 4);
  CHECK(golfing_depth(1.0) == 1);
  CHECK(golfing_depth(100.0) == 10);
  const double q = golfing_rate(0.1, 10);
  CHECK(q == doctest::Approx(0.2056718).epsilon(1e-6));
  CHECK(std::pow(1.0 - q, 10) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(golfing_rate(0.0, 3) == 1.0);
  CHECK_THROWS_AS(golfing_rate(1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(golfing_rate(0.5, 0), std::invalid_argument);
}

TEST_CASE("co-generated support has the target density") {
  const Index m = 200, n = 200;
  const double rho = 0.1;
  const auto [sched, omega] = co_generate_schedule(m, n, rho, 17);
  CHECK(sched.co_generated);
  CHECK(sched.j0 == golfing_depth(200.0));
  const double mn = static_cast<double>(m * n);
  const double sd = std::sqrt(mn * rho * (1 - rho));
  CHECK(std::abs(static_cast<double>(omega.count()) - rho * mn) < 4 * sd);
  for (const SupportSet& b : sched.batches) {
    CHECK_FALSE((b.mask() && omega.mask()).any());
    const double sdb = std::sqrt(mn * sched.q * (1 - sched.q));
    CHECK(std::abs(static_cast<double>(b.count()) - sched.q * mn) < 4 * sdb);
  }
}

TEST_CASE("retro-fitted batches avoid omega and are reproducible") {
  const SupportSet omega = gen_sparse(30, 30, 0.1, 1.0, 2).omega;
  const GolfingSchedule a = build_schedule(omega, 0.1, 30, 5);
  const GolfingSchedule b = build_schedule(omega, 0.1, 30, 5);
  const GolfingSchedule c = build_schedule(omega, 0.1, 30, 6);
  CHECK_FALSE(a.co_generated);
  REQUIRE(a.batches.size() == static_cast<std::size_t>(a.j0));
  bool differs = false;
  for (std::size_t j = 0; j < a.batches.size(); ++j) {
    CHECK_FALSE((a.batches[j].mask() && omega.mask()).any());
    CHECK((a.batches[j].mask() == b.batches[j].mask()).all());
    differs = differs || !(a.batches[j].mask() == c.batches[j].mask()).all();
  }
  CHECK(differs);
}

TEST_CASE("golfing recursion matches a hand-stepped 4x4 run") {
  const Index m = 4, n = 4;
  Matrix u(4, 1), v(4, 1);
  u << 0.5, 0.5, 0.5, 0.5;
  v << 0.5, -0.5, 0.5, -0.5;
  const TangentSpace t(u, v);
  const SupportSet omega = SupportSet::from_entries(m, n, {{0, 0}, {3, 2}});
  Vector g = Vector::Zero(16);
  g(5) = 0.6;
  g(10) = 0.8;
  const SpanBasis q(m, n, g.transpose());

  GolfingSchedule sched;
  sched.j0 = 2;
  sched.q = 0.5;
  sched.batches = {SupportSet::from_entries(m, n, {{0, 1}, {1, 1}, {2, 3}, {1, 0}}),
                   SupportSet::from_entries(m, n, {{2, 2}, {3, 3}, {0, 3}, {1, 2}})};

  const Matrix proj = gamma_perp_projector(t, q);
  const Matrix uv = u * v.transpose();
  Matrix y1 = sched.batches[0].apply(uv) / 0.5;
  Matrix z1 = uv - oracle::apply(proj, y1);
  Matrix y2 = y1 + sched.batches[1].apply(z1) / 0.5;
  Matrix z2 = uv - oracle::apply(proj, y2);
  Matrix wl = y2 - oracle::apply(proj, y2);

  const GolfingResult got = construct_WL(t, omega, sched, q);
  CHECK(max_abs_diff(got.WL, wl) < 1e-12);
  REQUIRE(got.z_trace.size() == 3);
  CHECK(got.z_trace[0].fro == doctest::Approx(1.0));
  CHECK(got.z_trace[1].fro == doctest::Approx(z1.norm()));
  CHECK(got.z_trace[2].fro == doctest::Approx(z2.norm()));
  CHECK(got.z_trace[2].inf == doctest::Approx(z2.cwiseAbs().maxCoeff()));

  GolfingSchedule bad = sched;
  bad.batches[0].insert(0, 0);
  CHECK_THROWS_AS(construct_WL(t, omega, bad, q), std::invalid_argument);
  bad = sched;
  bad.batches.pop_back();
  CHECK_THROWS_AS(construct_WL(t, omega, bad, q), std::invalid_argument);
}

TEST_CASE("W^S and W^Q are the least-norm solutions") {
  const Index m = 8, n = 8;
  const TangentSpace t = gen_low_rank(m, n, 1, 61).T;
  const SpanBasis q = gen_random_qperp(m, n, 2, 62);
  const SupportSet omega =
      SupportSet::from_entries(m, n, {{0, 3}, {2, 5}, {4, 1}, {5, 5}, {7, 0}, {6, 6}});
  const Matrix sgn = random_signs(omega, 63);
  const double lambda = 1.0 / std::sqrt(8.0);
  const Matrix bt = oracle::tangent_basis(t.U(), t.V());
  const Matrix bq = oracle::span_basis(q);

  SeriesInfo info;
  const Matrix ws = construct_WS(sgn, omega, t, q, lambda, 1e-14, &info);
  const Matrix ws_ref = oracle::least_norm_ws(sgn, omega, oracle::concat(bt, bq), lambda);
  CHECK(max_abs_diff(ws, ws_ref) < 1e-9);
  CHECK(info.terms > 1);
  CHECK(info.premise < 1.0);
  CHECK(info.premise ==
        doctest::Approx(oracle::product_norm(oracle::support_basis(omega),
                                             oracle::orthonormal_span(oracle::concat(bt, bq)))));

  const Matrix wq = construct_WQ(t, omega, q, 1e-14, &info);
  const Matrix wq_ref =
      oracle::least_norm_wq(t.uv(), bq, oracle::concat(oracle::support_basis(omega), bt));
  CHECK(max_abs_diff(wq, wq_ref) < 1e-9);

  // Trivial cases.
  CHECK(construct_WS(sgn, SupportSet(m, n), t, q, lambda, 1e-12).isZero());
  CHECK(construct_WQ(t, omega, SpanBasis(m, n), 1e-12).isZero());
  CHECK(construct_WQ(TangentSpace::empty(m, n), omega, q, 1e-12).isZero());
  const Matrix bare =
      construct_WS(sgn, omega, TangentSpace::empty(m, n), SpanBasis(m, n), lambda, 1e-12);
  CHECK(max_abs_diff(bare, lambda * sgn) < 1e-15);
}

TEST_CASE("an omega containing tangent directions violates the premise") {
  const Index m = 5, n = 5;
  const TangentSpace t(Matrix::Identity(m, 1), Matrix::Identity(n, 1));
  const SupportSet omega = SupportSet::from_entries(m, n, {{0, 0}, {3, 3}});
  const Matrix sgn = random_signs(omega, 1);
  CHECK_THROWS_AS(construct_WS(sgn, omega, t, SpanBasis(m, n), 0.4, 1e-10), PremiseViolation);
  const PremiseReport pr = check_premises(t, omega, SpanBasis(m, n));
  CHECK_FALSE(pr.omega_gamma_below_half);
  CHECK_FALSE(pr.omega_T_independent);
}

TEST_CASE("verify on hand-made certificates") {
  const Index m = 6, n = 6;
  const double lambda = 0.4;
  const TangentSpace none = TangentSpace::empty(m, n);
  const SupportSet empty(m, n);
  const Matrix zero = Matrix::Zero(m, n);
  const CertificateReport ok = verify(zero, zero, zero, none, empty, zero, SpanBasis(m, n), lambda);
  CHECK(ok.verdict);
  CHECK(ok.cond_spectral.value == 0.0);

  const TangentSpace t = gen_low_rank(m, n, 1, 2).T;
  const Matrix big = 3.0 * t.uv();
  const CertificateReport bad = verify(big, zero, zero, t, empty, zero, SpanBasis(m, n), lambda);
  CHECK_FALSE(bad.verdict);
  CHECK_FALSE(bad.cond_spectral.pass());
  CHECK_FALSE(bad.cond_T.pass());

  const CertificateReport high =
      verify(zero, zero, zero, none, empty, zero, SpanBasis(m, n), 1.0);
  CHECK_FALSE(high.lambda_below_one.pass());
  CHECK_FALSE(high.verdict);
}

TEST_CASE("certify builds exact equality conditions and serializes") {
  GenParams p{40, 40, 1, 0.02, 2};
  const ProblemInstance inst = assemble(p, 77);
  const CertificateReport rep = certify(inst);
  CHECK(rep.cond_T.pass());
  CHECK(rep.cond_Qperp.pass());
  CHECK(rep.j0 == golfing_depth(40.0));
  CHECK(rep.z_trace.size() == static_cast<std::size_t>(rep.j0 + 1));
  CHECK(rep.W.isApprox(rep.WL + rep.WS + rep.WQ));
  const auto j = nlohmann::json::parse(rep.to_json());
  CHECK(j.at("verdict").get<bool>() == rep.verdict);
  CHECK(j.at("golfing").at("approximate_coupling").get<bool>());
  CHECK(j.at("conditions").size() == 7);
}
