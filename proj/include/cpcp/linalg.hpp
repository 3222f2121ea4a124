#pragma once

#include <Eigen/Core>

namespace cpcp {

// Dense real matrix carrying every quantity in the library (data, low-rank
// and sparse parts, certificates, basis elements). Storage is Eigen's
// column-major layout; the on-disk format is row-major (see io.hpp).
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Reduced SVD A = U diag(sigma) V^T restricted to the retained rank.
struct SvdFactors {
  Matrix U;      // m x r, orthonormal columns
  Vector sigma;  // r values, nonincreasing, nonnegative
  Matrix V;      // n x r, orthonormal columns

  Index rank() const { return sigma.size(); }
  Matrix reconstruct() const;
};

// Singular values below this fraction of the largest are treated as zero by
// svd(A) when no explicit cutoff is given.
inline constexpr double kRelativeRankCutoff = 1e-10;

// Keeps singular values strictly greater than `rank_cutoff`. Throws
// NumericalError if the decomposition fails and std::invalid_argument on
// non-finite input or a negative cutoff.
SvdFactors svd(const Matrix& a, double rank_cutoff);

// Same, with the scale-invariant cutoff kRelativeRankCutoff * sigma_max.
SvdFactors svd(const Matrix& a);

// All min(m, n) singular values, nonincreasing.
Vector singular_values(const Matrix& a);

enum class NormKind { frobenius, nuclear, l1, linf, spectral };

double norm(const Matrix& a, NormKind kind);

inline double frobenius_norm(const Matrix& a) { return norm(a, NormKind::frobenius); }
inline double nuclear_norm(const Matrix& a) { return norm(a, NormKind::nuclear); }
inline double l1_norm(const Matrix& a) { return norm(a, NormKind::l1); }
inline double linf_norm(const Matrix& a) { return norm(a, NormKind::linf); }
inline double spectral_norm(const Matrix& a) { return norm(a, NormKind::spectral); }

// Proximal operator of tau * nuclear norm: shrinks every singular value by
// tau. Values exactly at the threshold map to zero.
Matrix svt(const Matrix& a, double tau);

// Singular value thresholding that also reports the nuclear norm of the
// result, which is free once the shrunken spectrum is known.
Matrix svt(const Matrix& a, double tau, double* nuclear_norm_out);

// Proximal operator of tau * l1 norm, applied entrywise.
Matrix soft_threshold(const Matrix& a, double tau);

// Trace inner product <X, Y> = sum_ij X_ij Y_ij.
double inner(const Matrix& x, const Matrix& y);

bool all_finite(const Matrix& a);

// Throws std::invalid_argument naming `what` if `a` has NaN or Inf entries.
void require_finite(const Matrix& a, const char* what);

// Throws std::invalid_argument unless `a` and `b` have the same shape.
void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace cpcp
