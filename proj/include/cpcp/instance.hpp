#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpcp/linalg.hpp"
#include "cpcp/subspace.hpp"

namespace cpcp {

enum class QModel { random, nu_coherent_smooth, from_jacobians };

std::string to_string(QModel q);
// Throws std::invalid_argument on an unknown name.
QModel parse_qmodel(const std::string& name);

struct GenParams {
  Index m = 0;
  Index n = 0;
  Index r = 0;
  double rho = 0.0;
  Index p = 0;
  // Nonzero magnitude of S0; 10 x mean |L0_ij| when unset.
  std::optional<double> magnitude;
  QModel qmodel = QModel::random;

  // Throws std::invalid_argument when the parameters are out of range.
  void validate() const;
};

inline constexpr Index kMaxJacobians = 6;

struct LowRankPart {
  Matrix L0;
  TangentSpace T;
  Vector sigma;
};

// L0 = U diag(sigma) V^T with U, V orthonormalized Gaussian draws and sigma
// uniform in [1, 2]. r = 0 gives the zero matrix.
LowRankPart gen_low_rank(Index m, Index n, Index r, std::uint64_t seed);

struct SparsePart {
  Matrix S0;
  SupportSet omega;
};

// Each entry lands in the support with probability rho; nonzeros are
// +-magnitude with equal probability.
SparsePart gen_sparse(Index m, Index n, double rho, double magnitude, std::uint64_t seed);
// Random signs on a prescribed support.
SparsePart gen_sparse_on(const SupportSet& omega, double magnitude, std::uint64_t seed);

// p Gaussian matrices (variance 1/(mn)) orthonormalized by modified
// Gram-Schmidt. Resamples up to 3 times on numerical breakdown.
SpanBasis gen_random_qperp(Index m, Index n, Index p, std::uint64_t seed);

// Deterministic basis G_k = W diag(c_k): W holds the first n columns of the
// m-point orthonormal DCT-II and c_k is the k-th n-point DCT-II vector. The
// elements are orthonormal and ||G_k|| = max_j |c_k(j)| <= sqrt(2/n), so
// nu <= 2. Requires p <= n; the seed is accepted for interface symmetry.
SpanBasis gen_nu_coherent_qperp(Index m, Index n, Index p, std::uint64_t seed = 0);

// Orthonormal basis of span{J_i} (two-pass modified Gram-Schmidt). Throws
// RankDeficient naming the first input that depends on earlier ones.
SpanBasis basis_from_jacobians(const std::vector<Matrix>& jacobians);

// Image-plane Jacobians of a smooth synthetic image (three Gaussian blobs)
// under the six independent affine motions x-translation, y-translation,
// rotation, isotropic scaling, aspect change and symmetric shear, in that
// order. count <= 6.
std::vector<Matrix> synthetic_image_jacobians(Index m, Index n, Index count);

// Q^perp for params.qmodel; p = 0 yields the zero subspace.
SpanBasis gen_qperp(const GenParams& params, std::uint64_t seed);

struct DirectSumVerdicts {
  DirectSumCheck qperp_T;
  DirectSumCheck qperp_omega;
  DirectSumCheck T_omega;

  bool all_independent() const {
    return qperp_T.independent && qperp_omega.independent && T_omega.independent;
  }
};

struct ProblemInstance {
  GenParams params;
  std::uint64_t seed = 0;
  double magnitude = 0.0;  // resolved sparse magnitude
  int attempts = 1;        // generation attempts used (1 = first try)

  Matrix L0;
  Matrix S0;
  Matrix D;
  SupportSet omega;
  SpanBasis qperp;
  TangentSpace T;
  DirectSumVerdicts verdicts;

  Matrix sign_S0() const { return S0.cwiseSign(); }
};

// Draws L0, S0 and Q^perp, forms D = L0 + S0 and checks the pairwise direct
// sums (Q^perp, T), (Q^perp, Omega), (T, Omega). A degenerate pair triggers a
// fresh draw with the next sub-seed; DegenerateSum is thrown after 3 retries.
ProblemInstance assemble(const GenParams& params, std::uint64_t seed);

// Same, with the sparse support fixed in advance (used when the support is
// generated jointly with a golfing schedule).
ProblemInstance assemble_on_support(const GenParams& params, const SupportSet& omega,
                                    std::uint64_t seed);

inline constexpr int kMaxGenerationRetries = 3;

// Bundle directory: params.json, L0.dmat, S0.dmat, D.dmat, omega.supp,
// qperp.basis.
void write_bundle(const std::filesystem::path& dir, const ProblemInstance& inst);
ProblemInstance read_bundle(const std::filesystem::path& dir);

// The params.json document written into a bundle.
std::string bundle_params_json(const ProblemInstance& inst);

}  // namespace cpcp
