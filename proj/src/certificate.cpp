#include "cpcp/certificate.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "cpcp/errors.hpp"
#include "cpcp/json_out.hpp"
#include "cpcp/rng.hpp"
#include "cpcp/solver.hpp"

namespace cpcp {

namespace {

constexpr std::uint64_t kBatchStream = 0x901f;
constexpr int kSeriesMaxTerms = kNeumannMaxTerms;

using LinearOp = std::function<Matrix(const Matrix&)>;

void require_rho(double rho) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("golfing: rho must lie in [0, 1)");
}

SupportSet bernoulli_batch(Index m, Index n, double q, std::uint64_t seed, int j,
                           const SupportSet* exclude) {
  Rng rng(mix_seed(seed, kBatchStream, static_cast<std::uint64_t>(j)));
  SupportSet batch(m, n);
  for (Index c = 0; c < n; ++c) {
    for (Index r = 0; r < m; ++r) {
      // Draw for every entry so the stream position does not depend on Omega.
      const bool take = rng.bernoulli(q);
      if (take && (exclude == nullptr || !exclude->contains(r, c))) batch.insert(r, c);
    }
  }
  return batch;
}

// Conjugate gradients for A x = b with A symmetric positive definite on the
// subspace containing b and x0.
Matrix conjugate_gradient(const LinearOp& a, const Matrix& b, Matrix x, double abs_tol,
                          int max_iters, int* iterations) {
  Matrix r = b - a(x);
  Matrix p = r;
  double rr = r.squaredNorm();
  int it = 0;
  while (it < max_iters && std::sqrt(rr) > abs_tol) {
    const Matrix ap = a(p);
    const double pap = inner(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_next = r.squaredNorm();
    p = r + (rr_next / rr) * p;
    rr = rr_next;
    ++it;
  }
  if (iterations != nullptr) *iterations = it;
  if (std::sqrt(rr) > abs_tol) {
    throw NumericalError("conjugate gradients stalled at residual " + std::to_string(std::sqrt(rr)));
  }
  return x;
}

// x = sum_k K^k b for self-adjoint K with ||K|| < 1, truncated once a term
// drops below term_tol. Falls back to CG on (I - K) x = b when the series
// runs out of terms.
Matrix neumann_solve(const LinearOp& k_op, const Matrix& b, double term_tol, SeriesInfo& info) {
  Matrix sum = b;
  Matrix term = b;
  info.terms = 1;
  if (term.norm() < term_tol) return sum;
  for (int k = 1; k < kSeriesMaxTerms; ++k) {
    term = k_op(term);
    sum += term;
    info.terms = k + 1;
    if (term.norm() < term_tol) return sum;
  }
  info.cg_fallback = true;
  const LinearOp a = [&](const Matrix& x) -> Matrix { return x - k_op(x); };
  return conjugate_gradient(a, b, std::move(sum), term_tol, 10 * kSeriesMaxTerms,
                            &info.cg_iterations);
}

Subspace sum_or_single(const Subspace& a, const Subspace& b) {
  if (a.trivially_zero()) return b;
  if (b.trivially_zero()) return a;
  return Subspace::direct_sum(a, b);
}

Check below(double value, double bound) { return {value, bound, true}; }
Check at_most(double value, double bound) { return {value, bound, false}; }

nlohmann::json check_json(const Check& c) {
  return {{"value", c.value}, {"bound", c.bound}, {"strict", c.strict}, {"pass", c.pass()}};
}

nlohmann::json estimate_json(const OpNormEstimate& e) {
  return {{"value", e.value}, {"converged", e.converged}, {"exact", e.exact},
          {"iterations", e.iterations}};
}

nlohmann::json series_json(const SeriesInfo& s) {
  return {{"terms", s.terms}, {"cg_fallback", s.cg_fallback},
          {"cg_iterations", s.cg_iterations}, {"premise_norm", s.premise}};
}

}  // namespace

int golfing_depth(double m) {
  if (!(m >= 1.0)) throw std::invalid_argument("golfing_depth: m must be >= 1");
  // The slack keeps m = e^k from rounding up past 2k.
  const double raw = std::ceil(2.0 * std::log(m) - 1e-12);
  return std::max(1, static_cast<int>(raw));
}

double golfing_rate(double rho, int j0) {
  require_rho(rho);
  if (j0 < 1) throw std::invalid_argument("golfing_rate: j0 must be >= 1");
  return 1.0 - std::pow(rho, 1.0 / j0);
}

GolfingSchedule build_schedule(const SupportSet& omega, double rho, Index m, std::uint64_t seed) {
  require_rho(rho);
  GolfingSchedule s;
  s.j0 = golfing_depth(static_cast<double>(m));
  s.q = golfing_rate(rho, s.j0);
  s.rho = rho;
  for (int j = 0; j < s.j0; ++j) {
    s.batches.push_back(bernoulli_batch(omega.rows(), omega.cols(), s.q, seed, j, &omega));
  }
  return s;
}

std::pair<GolfingSchedule, SupportSet> co_generate_schedule(Index m, Index n, double rho,
                                                            std::uint64_t seed) {
  require_rho(rho);
  GolfingSchedule s;
  s.j0 = golfing_depth(static_cast<double>(m));
  s.q = golfing_rate(rho, s.j0);
  s.rho = rho;
  s.co_generated = true;
  Mask covered = Mask::Constant(m, n, false);
  for (int j = 0; j < s.j0; ++j) {
    s.batches.push_back(bernoulli_batch(m, n, s.q, seed, j, nullptr));
    covered = covered || s.batches.back().mask();
  }
  return {std::move(s), SupportSet(Mask(!covered))};
}

Subspace gamma_perp(const TangentSpace& t, const SpanBasis& qperp) {
  return sum_or_single(Subspace::span(qperp), Subspace::tangent(t));
}

Subspace pi_space(const TangentSpace& t, const SupportSet& omega) {
  return sum_or_single(Subspace::support(omega), Subspace::tangent(t));
}

GolfingResult construct_WL(const TangentSpace& t, const SupportSet& omega,
                           const GolfingSchedule& schedule, const SpanBasis& qperp) {
  if (static_cast<int>(schedule.batches.size()) != schedule.j0) {
    throw std::invalid_argument("construct_WL: schedule has " +
                                std::to_string(schedule.batches.size()) + " batches, j0 = " +
                                std::to_string(schedule.j0));
  }
  for (const auto& b : schedule.batches) {
    if (b.rows() != omega.rows() || b.cols() != omega.cols()) {
      throw std::invalid_argument("construct_WL: batch shape differs from omega");
    }
    if ((b.mask() && omega.mask()).any()) {
      throw std::invalid_argument("construct_WL: a batch intersects omega");
    }
  }
  const Index m = omega.rows(), n = omega.cols();
  GolfingResult out;
  const Matrix uv = t.rank() == 0 ? Matrix::Zero(m, n) : t.uv();
  Matrix z = uv;
  out.z_trace.push_back({z.norm(), linf_norm(z)});
  if (t.rank() == 0) {
    out.WL = Matrix::Zero(m, n);
    for (int j = 0; j < schedule.j0; ++j) out.z_trace.push_back({0.0, 0.0});
    return out;
  }
  const Subspace gp = gamma_perp(t, qperp);
  Matrix y = Matrix::Zero(m, n);
  for (const auto& batch : schedule.batches) {
    // P_{Gamma^perp}(UV^T - Y_{j-1}) = Z_{j-1} because UV^T lies in T.
    y += batch.apply(z) / schedule.q;
    z = uv - gp.apply(y);
    out.z_trace.push_back({z.norm(), linf_norm(z)});
  }
  out.WL = y - gp.apply(y);
  return out;
}

Matrix construct_WS(const Matrix& s0_sign, const SupportSet& omega, const TangentSpace& t,
                    const SpanBasis& qperp, double lambda, double tol, SeriesInfo* info) {
  if (s0_sign.rows() != omega.rows() || s0_sign.cols() != omega.cols()) {
    throw std::invalid_argument("construct_WS: sgn(S0) and omega have different shapes");
  }
  if (!(lambda > 0.0) || !(tol > 0.0)) {
    throw std::invalid_argument("construct_WS: lambda and tol must be positive");
  }
  SeriesInfo local;
  SeriesInfo& si = info != nullptr ? *info : local;
  si = {};
  const Index m = omega.rows(), n = omega.cols();
  if (omega.empty()) return Matrix::Zero(m, n);
  const Subspace gp = gamma_perp(t, qperp);
  si.premise = op_norm_product(Subspace::support(omega), gp).value;
  if (!(si.premise < kDegenerateThreshold)) {
    throw PremiseViolation("||P_Omega P_Gamma^perp|| < 1", si.premise, kDegenerateThreshold);
  }
  const LinearOp k_op = [&](const Matrix& x) -> Matrix { return omega.apply(gp.apply(x)); };
  const Matrix x = neumann_solve(k_op, omega.apply(s0_sign), tol, si);
  return lambda * (x - gp.apply(x));
}

Matrix construct_WQ(const TangentSpace& t, const SupportSet& omega, const SpanBasis& qperp,
                    double tol, SeriesInfo* info) {
  if (!(tol > 0.0)) throw std::invalid_argument("construct_WQ: tol must be positive");
  SeriesInfo local;
  SeriesInfo& si = info != nullptr ? *info : local;
  si = {};
  const Index m = omega.rows(), n = omega.cols();
  if (qperp.size() == 0 || t.rank() == 0) return Matrix::Zero(m, n);
  const Matrix uv = t.uv();
  const Subspace pi = pi_space(t, omega);
  si.premise = op_norm_product(Subspace::span(qperp), pi).value;
  if (!(si.premise < kDegenerateThreshold)) {
    throw PremiseViolation("||P_Q^perp P_Pi|| < 1", si.premise, kDegenerateThreshold);
  }
  const LinearOp k_op = [&](const Matrix& x) -> Matrix { return qperp.apply(pi.apply(x)); };
  const Matrix x = neumann_solve(k_op, -qperp.apply(uv), tol * uv.norm(), si);
  return x - pi.apply(x);
}

CertificateReport verify(const Matrix& wl, const Matrix& ws, const Matrix& wq,
                         const TangentSpace& t, const SupportSet& omega, const Matrix& s0_sign,
                         const SpanBasis& qperp, double lambda) {
  const Index m = omega.rows(), n = omega.cols();
  auto same = [&](const Matrix& x, const char* what) {
    if (x.rows() != m || x.cols() != n) {
      throw std::invalid_argument(std::string("verify: ") + what + " has the wrong shape");
    }
  };
  same(wl, "W^L");
  same(ws, "W^S");
  same(wq, "W^Q");
  same(s0_sign, "sgn(S0)");

  CertificateReport rep;
  rep.WL = wl;
  rep.WS = ws;
  rep.WQ = wq;
  rep.W = wl + ws + wq;
  rep.lambda = lambda;
  const Matrix uv = t.rank() == 0 ? Matrix::Zero(m, n) : t.uv();
  const Matrix& w = rep.W;
  const SupportSet off = omega.complement();

  rep.cond_T = at_most(t.apply(w).norm(), kEqualityTol);
  rep.cond_Qperp = at_most(qperp.apply(w + uv).norm(), kEqualityTol);
  rep.cond_spectral = below(spectral_norm(w), 0.5);
  rep.cond_omega = at_most(omega.apply(uv - lambda * s0_sign + w).norm(), lambda / 4.0);
  rep.cond_inf = below(linf_norm(off.apply(uv + w)), lambda / 2.0);
  rep.premise_PO_Gperp =
      below(op_norm_product(Subspace::support(omega), gamma_perp(t, qperp)).value, 0.5);
  rep.lambda_below_one = below(lambda, 1.0);
  rep.verdict = rep.cond_T.pass() && rep.cond_Qperp.pass() && rep.cond_spectral.pass() &&
                rep.cond_omega.pass() && rep.cond_inf.pass() && rep.premise_PO_Gperp.pass() &&
                rep.lambda_below_one.pass();

  rep.WL_spectral = below(spectral_norm(wl), 0.25);
  rep.WS_spectral = below(spectral_norm(ws), 0.125);
  rep.WS_inf = below(linf_norm(off.apply(ws)), lambda / 8.0);
  rep.WQ_spectral = below(spectral_norm(wq), 0.125);
  rep.WQ_inf = below(linf_norm(off.apply(wq)), lambda / 8.0);
  return rep;
}

std::string CertificateReport::to_json() const {
  nlohmann::json j;
  j["verdict"] = verdict;
  j["lambda"] = lambda;
  j["conditions"] = {{"P_T_W", check_json(cond_T)},
                     {"P_Qperp_W_plus_UV", check_json(cond_Qperp)},
                     {"W_spectral", check_json(cond_spectral)},
                     {"P_Omega_residual", check_json(cond_omega)},
                     {"P_Omega_perp_inf", check_json(cond_inf)},
                     {"P_Omega_P_Gamma_perp", check_json(premise_PO_Gperp)},
                     {"lambda_below_one", check_json(lambda_below_one)}};
  j["component_targets"] = {{"WL_spectral", check_json(WL_spectral)},
                            {"WS_spectral", check_json(WS_spectral)},
                            {"WS_inf_off_support", check_json(WS_inf)},
                            {"WQ_spectral", check_json(WQ_spectral)},
                            {"WQ_inf_off_support", check_json(WQ_inf)}};
  nlohmann::json golf;
  golf["j0"] = j0;
  golf["q"] = q;
  golf["co_generated"] = co_generated;
  golf["approximate_coupling"] = !co_generated;
  golf["z_fro"] = nlohmann::json::array();
  golf["z_inf"] = nlohmann::json::array();
  for (const auto& z : z_trace) {
    golf["z_fro"].push_back(z.fro);
    golf["z_inf"].push_back(z.inf);
  }
  j["golfing"] = golf;
  j["WS_series"] = series_json(ws_info);
  j["WQ_series"] = series_json(wq_info);
  j["build_seconds"] = build_seconds;
  return dump_json(j) + "\n";
}

PremiseReport check_premises(const TangentSpace& t, const SupportSet& omega,
                             const SpanBasis& qperp) {
  if (t.rows() != omega.rows() || t.cols() != omega.cols() || qperp.rows() != omega.rows() ||
      qperp.cols() != omega.cols()) {
    throw std::invalid_argument("check_premises: shapes differ");
  }
  const Subspace st = Subspace::tangent(t);
  const Subspace so = Subspace::support(omega);
  const Subspace sq = Subspace::span(qperp);
  PremiseReport rep;
  const DirectSumCheck qt = check_direct_sum(sq, st);
  const DirectSumCheck qo = check_direct_sum(sq, so);
  const DirectSumCheck ot = check_direct_sum(so, st);
  rep.qperp_T = qt.overlap;
  rep.qperp_omega = qo.overlap;
  rep.omega_T = ot.overlap;
  rep.qperp_T_independent = qt.independent;
  rep.qperp_omega_independent = qo.independent;
  rep.omega_T_independent = ot.independent;
  if (qt.independent) {
    rep.omega_gamma_perp = op_norm_product(so, gamma_perp(t, qperp));
  } else {
    // Q^perp (+) T is not a direct sum, so its projector is unavailable.
    rep.omega_gamma_perp = {1.0, true, 0, false};
  }
  rep.omega_gamma_below_half = rep.omega_gamma_perp.value < 0.5;
  return rep;
}

std::string PremiseReport::to_json() const {
  nlohmann::json j;
  j["P_Omega_P_Gamma_perp"] = estimate_json(omega_gamma_perp);
  j["P_Qperp_P_T"] = estimate_json(qperp_T);
  j["P_Qperp_P_Omega"] = estimate_json(qperp_omega);
  j["P_Omega_P_T"] = estimate_json(omega_T);
  j["independent"] = {{"qperp_T", qperp_T_independent},
                      {"qperp_omega", qperp_omega_independent},
                      {"omega_T", omega_T_independent}};
  j["P_Omega_P_Gamma_perp_below_half"] = omega_gamma_below_half;
  return dump_json(j) + "\n";
}

CertificateReport certify(const ProblemInstance& inst, const CertifyOptions& opts) {
  const GolfingSchedule schedule =
      build_schedule(inst.omega, inst.params.rho, inst.params.m, opts.schedule_seed);
  return certify(inst, schedule, opts);
}

CertificateReport certify(const ProblemInstance& inst, const GolfingSchedule& schedule,
                          const CertifyOptions& opts) {
  const double lambda = opts.lambda.value_or(default_lambda(inst.params.m));
  const auto start = std::chrono::steady_clock::now();
  const GolfingResult golf = construct_WL(inst.T, inst.omega, schedule, inst.qperp);
  SeriesInfo ws_info, wq_info;
  const Matrix ws =
      construct_WS(inst.sign_S0(), inst.omega, inst.T, inst.qperp, lambda, opts.tol, &ws_info);
  const Matrix wq = construct_WQ(inst.T, inst.omega, inst.qperp, opts.tol, &wq_info);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CertificateReport rep =
      verify(golf.WL, ws, wq, inst.T, inst.omega, inst.sign_S0(), inst.qperp, lambda);
  rep.z_trace = golf.z_trace;
  rep.ws_info = ws_info;
  rep.wq_info = wq_info;
  rep.j0 = schedule.j0;
  rep.q = schedule.q;
  rep.co_generated = schedule.co_generated;
  rep.build_seconds = seconds;
  return rep;
}

}  // namespace cpcp
