#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "cpcp/linalg.hpp"

namespace cpcp {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Entry = std::pair<Index, Index>;

// A set of matrix positions (a support pattern). Stored as a dense mask with
// the same layout as Matrix.
class SupportSet {
 public:
  SupportSet() = default;
  SupportSet(Index rows, Index cols);
  explicit SupportSet(Mask mask);

  static SupportSet full(Index rows, Index cols);
  // Throws std::invalid_argument on out-of-range or repeated entries.
  static SupportSet from_entries(Index rows, Index cols, const std::vector<Entry>& entries);

  Index rows() const { return mask_.rows(); }
  Index cols() const { return mask_.cols(); }
  Index count() const { return mask_.count(); }
  bool empty() const { return count() == 0; }
  bool contains(Index i, Index j) const { return mask_(i, j); }
  void insert(Index i, Index j) { mask_(i, j) = true; }

  const Mask& mask() const { return mask_; }
  SupportSet complement() const;
  bool is_subset_of(const SupportSet& other) const;

  // Entries in row-major order.
  std::vector<Entry> entries() const;

  Matrix apply(const Matrix& x) const;

 private:
  Mask mask_;
};

// T = {U X^T + Y V^T}: matrices sharing a column space or row space with a
// rank-r matrix whose singular vectors are U (m x r) and V (n x r).
class TangentSpace {
 public:
  TangentSpace() = default;
  // Throws std::invalid_argument unless U and V have r orthonormal columns
  // (to 1e-10) and matching rank.
  TangentSpace(Matrix u, Matrix v);

  static TangentSpace empty(Index rows, Index cols);

  const Matrix& U() const { return u_; }
  const Matrix& V() const { return v_; }
  Index rows() const { return u_.rows(); }
  Index cols() const { return v_.rows(); }
  Index rank() const { return u_.cols(); }

  Matrix uv() const { return u_ * v_.transpose(); }

  // U U^T X + X V V^T - U U^T X V V^T
  Matrix apply(const Matrix& x) const;

 private:
  Matrix u_;
  Matrix v_;
};

// Span of an orthonormal family G_1..G_p of m x n matrices. Row k of
// `stacked()` is the column-major vectorization of G_k, so projections cost
// two matrix-vector products.
class SpanBasis {
 public:
  SpanBasis() = default;
  // The zero subspace (p = 0).
  SpanBasis(Index rows, Index cols);
  // Throws std::invalid_argument unless the rows of `stacked` are orthonormal
  // to 1e-10 in the trace inner product.
  SpanBasis(Index rows, Index cols, Matrix stacked);

  static SpanBasis from_elements(const std::vector<Matrix>& elements);

  Index size() const { return stacked_.rows(); }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const Matrix& stacked() const { return stacked_; }

  Matrix element(Index k) const;
  std::vector<Matrix> elements() const;

  // <G_k, X> for every k.
  Vector coefficients(const Matrix& x) const;
  // sum_k c_k G_k
  Matrix combine(const Vector& c) const;
  Matrix apply(const Matrix& x) const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Matrix stacked_;
};

// Immutable, cheaply copyable handle to a structured subspace of m x n
// matrices and its orthogonal projector.
class Subspace {
 public:
  enum class Kind { tangent, support, span, complement, direct_sum };

  static Subspace tangent(TangentSpace t);
  static Subspace support(SupportSet omega);
  static Subspace span(SpanBasis basis);
  static Subspace zero(Index rows, Index cols);

  // Throws DegenerateSum if ||P_A P_B|| >= 1 - 1e-6.
  static Subspace direct_sum(const Subspace& a, const Subspace& b);

  Subspace complement() const;

  Kind kind() const;
  Index rows() const;
  Index cols() const;

  Matrix apply(const Matrix& x) const;

  // Null unless the handle is of the matching kind.
  const TangentSpace* as_tangent() const;
  const SupportSet* as_support() const;
  const SpanBasis* as_span() const;

  // Child of a complement, or summands of a direct sum.
  const Subspace& child() const;
  const Subspace& first() const;
  const Subspace& second() const;
  // ||P_A P_B|| of the summands, measured when the sum was formed.
  double summand_overlap() const;

  // True if the subspace is {0} by construction (empty support, rank-0
  // tangent space, empty basis).
  bool trivially_zero() const;

  struct Node;

 private:
  explicit Subspace(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Matrix project_T(const Matrix& x, const TangentSpace& t);
Matrix project_support(const Matrix& x, const SupportSet& omega);
Matrix project_span(const Matrix& x, const SpanBasis& basis);
// P_Q X = X - P_{Q^perp} X; Q itself is never stored.
inline Matrix project_Q(const Matrix& x, const SpanBasis& qperp) { return x - qperp.apply(x); }
// Projection onto A (+) B through the resolvent expansion
//   (I - P_A P_B)^{-1} P_A P_{B^perp} + (I - P_B P_A)^{-1} P_B P_{A^perp},
// each series summed until the relative change drops below 1e-12.
Matrix project_direct_sum(const Matrix& x, const Subspace& sum);

inline constexpr double kDegenerateThreshold = 1.0 - 1e-6;
inline constexpr double kNeumannRelTol = 1e-12;
inline constexpr int kNeumannMaxTerms = 10000;

enum class OpNormMethod {
  automatic,  // exact shortcuts where available, else dense or power
  power,      // always power iteration
  dense,      // materialize P_A P_B on the standard basis and take its SVD
};

struct OpNormOptions {
  int max_iters = 2000;
  double rel_tol = 1e-8;
  OpNormMethod method = OpNormMethod::automatic;
  std::uint64_t seed = 0x5eed;
  // automatic switches from dense to power iteration above this mn.
  Index dense_limit = 400;
};

struct OpNormEstimate {
  double value = 0.0;
  bool converged = true;
  int iterations = 0;
  bool exact = false;  // computed by a closed form or a full SVD
};

// ||P_A P_B||. Power iteration runs on P_B P_A P_B from a fixed-seed start and
// reports unconverged estimates rather than throwing. Values are clamped to
// [0, 1].
OpNormEstimate op_norm_product(const Subspace& a, const Subspace& b,
                               const OpNormOptions& opts = {});

// Largest |eigenvalue| of a self-adjoint operator restricted to the range of
// `domain` (pass the full space to use all of R^{m x n}).
OpNormEstimate symmetric_op_norm(const std::function<Matrix(const Matrix&)>& op,
                                 const Subspace& domain, const OpNormOptions& opts = {});

// Smallest mu with max_i ||U^T e_i||^2 <= mu r/m, max_j ||V^T e_j||^2 <= mu r/n
// and ||U V^T||_inf <= sqrt(mu r/(mn)). Throws std::invalid_argument if r = 0.
double coherence_mu(const TangentSpace& t);

// n * max_k ||G_k||^2 (spectral). Throws std::invalid_argument on an empty basis.
double nu_coherence(const SpanBasis& basis);

struct GammaMode {
  enum class Kind { exact, sampled } kind = Kind::exact;
  Index samples = 10000;
  std::uint64_t seed = 0x9a77a;

  static GammaMode exact() { return {}; }
  static GammaMode sampled(Index k, std::uint64_t seed = 0x9a77a) {
    return {Kind::sampled, k, seed};
  }
  // Exact up to mn = 250000, sampled(10000) above.
  static GammaMode default_for(Index rows, Index cols);
};

struct GammaEstimate {
  double value = 0.0;
  bool lower_bound = false;  // true when sampled
  Index evaluated = 0;
  Entry argmax{0, 0};
};

// max_{ij} ||P_S e_i e_j^T||_F^2
GammaEstimate gamma_constrained(const Subspace& s, const GammaMode& mode);
GammaEstimate gamma_constrained(const Subspace& s);

// ||P_S e_i e_j^T||_F^2 for every (i, j).
Matrix projector_diagonal(const Subspace& s);

struct DirectSumCheck {
  bool independent = true;
  OpNormEstimate overlap;
};

DirectSumCheck check_direct_sum(const Subspace& a, const Subspace& b,
                                const OpNormOptions& opts = {});

}  // namespace cpcp
