#include "cpcp/linalg.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cpcp/errors.hpp"

namespace cpcp {
namespace {

struct Decomposition {
  Matrix U;
  Vector s;
  Matrix V;
};

template <typename Solver>
bool run(const Matrix& a, unsigned int options, Decomposition& out) {
  Solver dec(a, options);
  if (dec.info() != Eigen::Success || !dec.singularValues().allFinite()) return false;
  out.s = dec.singularValues();
  if (options != 0) {
    out.U = dec.matrixU();
    out.V = dec.matrixV();
  }
  return true;
}

// Divide and conquer first; Eigen 3.4's BDCSVD occasionally returns NaN on
// rank-deficient structured input, in which case one-sided Jacobi takes over.
Decomposition decompose(const Matrix& a, unsigned int options) {
  Decomposition out;
  if (run<Eigen::BDCSVD<Matrix>>(a, options, out)) return out;
  if (run<Eigen::JacobiSVD<Matrix>>(a, options, out)) return out;
  throw NumericalError("SVD failed on a " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " matrix");
}

SvdFactors truncated(const Matrix& a, double cutoff, bool relative) {
  SvdFactors out;
  if (a.size() == 0) {
    out.U.resize(a.rows(), 0);
    out.V.resize(a.cols(), 0);
    return out;
  }
  const Decomposition dec = decompose(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = dec.s;
  if (relative) cutoff *= s.size() > 0 ? s[0] : 0.0;
  Index rank = 0;
  while (rank < s.size() && s[rank] > cutoff) ++rank;
  out.U = dec.U.leftCols(rank);
  out.sigma = s.head(rank);
  out.V = dec.V.leftCols(rank);
  return out;
}

}  // namespace

Matrix SvdFactors::reconstruct() const {
  return U * sigma.asDiagonal() * V.transpose();
}

SvdFactors svd(const Matrix& a, double rank_cutoff) {
  require_finite(a, "svd input");
  if (!(rank_cutoff >= 0.0)) {
    throw std::invalid_argument("svd: rank_cutoff must be nonnegative");
  }
  return truncated(a, rank_cutoff, false);
}

SvdFactors svd(const Matrix& a) {
  require_finite(a, "svd input");
  return truncated(a, kRelativeRankCutoff, true);
}

Vector singular_values(const Matrix& a) {
  require_finite(a, "singular_values input");
  if (a.size() == 0) return Vector();
  return decompose(a, 0).s;
}

double norm(const Matrix& a, NormKind kind) {
  require_finite(a, "norm input");
  switch (kind) {
    case NormKind::frobenius:
      return a.norm();
    case NormKind::nuclear:
      return singular_values(a).sum();
    case NormKind::l1:
      return a.cwiseAbs().sum();
    case NormKind::linf:
      return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
    case NormKind::spectral: {
      const Vector s = singular_values(a);
      return s.size() == 0 ? 0.0 : s[0];
    }
  }
  throw std::invalid_argument("norm: unknown kind");
}

Matrix svt(const Matrix& a, double tau, double* nuclear_norm_out) {
  if (!(tau >= 0.0)) throw std::invalid_argument("svt: tau must be nonnegative");
  require_finite(a, "svt input");
  if (a.size() == 0) {
    if (nuclear_norm_out != nullptr) *nuclear_norm_out = 0.0;
    return a;
  }
  const Decomposition dec = decompose(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = dec.s;
  Index keep = 0;
  while (keep < s.size() && s[keep] > tau) ++keep;
  const Vector shrunk = (s.head(keep).array() - tau).matrix();
  if (nuclear_norm_out != nullptr) *nuclear_norm_out = shrunk.sum();
  if (keep == 0) return Matrix::Zero(a.rows(), a.cols());
  return dec.U.leftCols(keep) * shrunk.asDiagonal() *
         dec.V.leftCols(keep).transpose();
}

Matrix svt(const Matrix& a, double tau) { return svt(a, tau, nullptr); }

Matrix soft_threshold(const Matrix& a, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be nonnegative");
  require_finite(a, "soft_threshold input");
  return a.unaryExpr([tau](double v) {
    const double mag = std::abs(v) - tau;
    if (mag <= 0.0) return 0.0;
    return v > 0.0 ? mag : -mag;
  });
}

double inner(const Matrix& x, const Matrix& y) {
  require_same_shape(x, y, "inner");
  return x.cwiseProduct(y).sum();
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) {
    throw std::invalid_argument(std::string(what) + " contains non-finite entries");
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

}  // namespace cpcp
