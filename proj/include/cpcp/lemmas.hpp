#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpcp/linalg.hpp"

namespace cpcp {

struct LemmaSetup {
  Index m = 100;
  Index n = 100;
  Index r = 3;
  Index p = 5;
  double rho = 0.05;         // support probability for the overlap checks
  double sample_rho = 0.3;   // sampling rate for the contraction checks
  int seeds = 20;            // per probabilistic check
  int trials = 200;          // per deterministic inequality
  double majority = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LemmaTrial {
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct LemmaCheck {
  std::string name;
  std::string inequality;
  // Deterministic inequalities must hold on every trial; the others need a
  // majority of seeds.
  bool deterministic = false;
  std::vector<LemmaTrial> trials;

  double pass_fraction() const;
  bool verdict(double majority) const;
};

// Names accepted by run_check, in report order:
//   qperp_entry_energy      max ||P_Qperp e_i e_j^T||_F <= 4 sqrt(p log(mnp)/(mn))
//   qperp_tangent_overlap   ||P_Qperp P_T|| <= 8 (sqrt p + sqrt((m+n) r)) / sqrt(mn)
//   support_tangent_overlap ||P_Omega P_T||^2 <= rho + eps with eps = rho
//   two_subspace_sum        ||P_{S1+S2} X||^2 <= (||P_S1 X||^2 + ||P_S2 X||^2) / (1 - a)
//   three_subspace_sum      ||P_{S1+S2} P_S3|| <= sqrt((a23^2 + a31^2) / (1 - a12))
//   gamma_perp_constrained  max ||P_Gperp e_i e_j^T||_F^2 <= 4 (8p log(mnp)/(mn) + mu r/n)
//   gamma_contraction       ||P_Gperp - s^-1 P_Gperp P_Omega P_Gperp|| < 1
//   inf_contraction         ||Z - s^-1 P_Gperp P_Omega Z||_inf < ||Z||_inf, Z = UV^T
//   spectral_deviation      ||Z - s^-1 P_Omega Z|| <= C sqrt(m log m / s) ||Z||_inf with
//                           C <= s n / log m
//   nu_entry_energy         ||P_Qperp e_i e_j^T||_F^2 <= nu p / n  (nu-coherent Q^perp)
//   nu_tangent_overlap      ||P_Qperp P_T||^2 <= 2 nu p r / n
//   nu_uv_energy            ||P_Qperp UV^T||_F^2 <= 2 nu p r^2 / n
//   qperp_support_overlap   ||P_Qperp P_Omega|| < 1/2  (nu-coherent Q^perp)
// Gperp is Q^perp (+) T and s is sample_rho.
const std::vector<std::string>& lemma_check_names();

// Throws std::invalid_argument on an unknown name.
LemmaCheck run_check(const std::string& name, const LemmaSetup& setup, int threads = 0);

std::string lemma_report_json(const std::vector<LemmaCheck>& checks, const LemmaSetup& setup);

}  // namespace cpcp
