#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpcp/instance.hpp"
#include "cpcp/linalg.hpp"
#include "cpcp/subspace.hpp"

namespace cpcp {

// Independent Ber(q) batches Omega_1..Omega_j0 inside Omega^c for the golfing
// iteration, with rho = (1 - q)^j0.
struct GolfingSchedule {
  int j0 = 1;
  double q = 1.0;
  double rho = 0.0;
  std::vector<SupportSet> batches;
  // True when Omega was defined as the complement of the batch union, which
  // reproduces the intended coupling exactly. Retro-fitted batches on a given
  // Omega only approximate it.
  bool co_generated = false;
};

// ceil(2 ln m), at least 1.
int golfing_depth(double m);
// q with (1 - q)^j0 = rho.
double golfing_rate(double rho, int j0);

// Retro-fit: each batch takes every entry of Omega^c independently with
// probability q. Requires 0 <= rho < 1.
GolfingSchedule build_schedule(const SupportSet& omega, double rho, Index m, std::uint64_t seed);

// Co-generation: batches are drawn first on the full index set and Omega is
// the complement of their union.
std::pair<GolfingSchedule, SupportSet> co_generate_schedule(Index m, Index n, double rho,
                                                            std::uint64_t seed);

// Gamma^perp = Q^perp (+) T and Pi = Omega (+) T.
Subspace gamma_perp(const TangentSpace& t, const SpanBasis& qperp);
Subspace pi_space(const TangentSpace& t, const SupportSet& omega);

struct ZNorms {
  double fro = 0.0;
  double inf = 0.0;
};

struct GolfingResult {
  Matrix WL;
  std::vector<ZNorms> z_trace;  // j = 0..j0
};

// Y_j = Y_{j-1} + q^{-1} P_{Omega_j} Z_{j-1},  Z_j = UV^T - P_{Gamma^perp} Y_j,
// W^L = P_Gamma Y_j0.
GolfingResult construct_WL(const TangentSpace& t, const SupportSet& omega,
                           const GolfingSchedule& schedule, const SpanBasis& qperp);

struct SeriesInfo {
  int terms = 0;
  bool cg_fallback = false;
  int cg_iterations = 0;
  double premise = 0.0;  // the operator norm that must stay below 1
};

// Least-norm X with P_Omega X = lambda sgn(S0) and P_{Gamma^perp} X = 0.
// Throws PremiseViolation unless ||P_Omega P_{Gamma^perp}|| < 1 - 1e-6; closer to 1
// the series cannot be summed reliably.
Matrix construct_WS(const Matrix& s0_sign, const SupportSet& omega, const TangentSpace& t,
                    const SpanBasis& qperp, double lambda, double tol,
                    SeriesInfo* info = nullptr);

// Least-norm X with P_{Q^perp} X = -P_{Q^perp} UV^T and P_Pi X = 0.
// Throws PremiseViolation unless ||P_{Q^perp} P_Pi|| < 1 - 1e-6.
Matrix construct_WQ(const TangentSpace& t, const SupportSet& omega, const SpanBasis& qperp,
                    double tol, SeriesInfo* info = nullptr);

// Measured value and the bound it is compared against.
struct Check {
  double value = 0.0;
  double bound = 0.0;
  bool strict = true;  // value < bound, else value <= bound
  bool pass() const { return strict ? value < bound : value <= bound; }
};

// Equality conditions are accepted up to this absolute Frobenius error.
inline constexpr double kEqualityTol = 1e-6;

struct CertificateReport {
  Matrix WL, WS, WQ, W;
  Check cond_T;             // ||P_T W||_F ~ 0
  Check cond_Qperp;         // ||P_{Q^perp}(W + UV^T)||_F ~ 0
  Check cond_spectral;      // ||W|| < 1/2
  Check cond_omega;         // ||P_Omega(UV^T - lambda sgn(S0) + W)||_F <= lambda/4
  Check cond_inf;           // ||P_{Omega^perp}(UV^T + W)||_inf < lambda/2
  Check premise_PO_Gperp;   // ||P_Omega P_{Gamma^perp}|| < 1/2
  Check lambda_below_one;   // lambda < 1
  bool verdict = false;

  // Per-component targets; reported, not part of the verdict.
  Check WL_spectral;        // ||W^L|| < 1/4
  Check WS_spectral;        // ||W^S|| < 1/8
  Check WS_inf;             // ||P_{Omega^perp} W^S||_inf < lambda/8
  Check WQ_spectral;        // ||W^Q|| < 1/8
  Check WQ_inf;             // ||P_{Omega^perp} W^Q||_inf < lambda/8

  double lambda = 0.0;
  // Filled by certify().
  std::vector<ZNorms> z_trace;
  SeriesInfo ws_info, wq_info;
  int j0 = 0;
  double q = 0.0;
  bool co_generated = false;
  double build_seconds = 0.0;

  std::string to_json() const;
};

CertificateReport verify(const Matrix& wl, const Matrix& ws, const Matrix& wq,
                         const TangentSpace& t, const SupportSet& omega, const Matrix& s0_sign,
                         const SpanBasis& qperp, double lambda);

struct PremiseReport {
  OpNormEstimate omega_gamma_perp;  // ||P_Omega P_{Gamma^perp}||
  OpNormEstimate qperp_T;
  OpNormEstimate qperp_omega;
  OpNormEstimate omega_T;
  bool qperp_T_independent = true;
  bool qperp_omega_independent = true;
  bool omega_T_independent = true;
  bool omega_gamma_below_half = false;  // ||P_Omega P_{Gamma^perp}|| < 1/2

  std::string to_json() const;
};

PremiseReport check_premises(const TangentSpace& t, const SupportSet& omega,
                             const SpanBasis& qperp);

struct CertifyOptions {
  std::optional<double> lambda;  // default 1/sqrt(m)
  double tol = 1e-10;
  std::uint64_t schedule_seed = 0;
};

// Builds W^L, W^S, W^Q for an instance (retro-fitted schedule unless one is
// supplied) and verifies them.
CertificateReport certify(const ProblemInstance& inst, const CertifyOptions& opts = {});
CertificateReport certify(const ProblemInstance& inst, const GolfingSchedule& schedule,
                          const CertifyOptions& opts = {});

}  // namespace cpcp
