#include "cpcp/subspace.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "cpcp/errors.hpp"
#include "cpcp/rng.hpp"

namespace cpcp {

namespace {

constexpr double kOrthoTol = 1e-10;

Eigen::Map<const Vector> vec(const Matrix& x) { return {x.data(), x.size()}; }

void require_shape(const Matrix& x, Index rows, Index cols, const char* what) {
  if (x.rows() != rows || x.cols() != cols) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                                std::to_string(cols) + ", got " + std::to_string(x.rows()) +
                                "x" + std::to_string(x.cols()));
  }
}

void require_orthonormal_columns(const Matrix& q, const char* what) {
  if (q.cols() == 0) return;
  const Matrix gram = q.transpose() * q;
  const double dev = (gram - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
  if (!(dev <= kOrthoTol)) {
    throw std::invalid_argument(std::string(what) + " columns are not orthonormal (deviation " +
                                std::to_string(dev) + ")");
  }
}

}  // namespace

// ---------------------------------------------------------------- SupportSet

SupportSet::SupportSet(Index rows, Index cols) : mask_(Mask::Constant(rows, cols, false)) {}

SupportSet::SupportSet(Mask mask) : mask_(std::move(mask)) {}

SupportSet SupportSet::full(Index rows, Index cols) {
  return SupportSet(Mask::Constant(rows, cols, true));
}

SupportSet SupportSet::from_entries(Index rows, Index cols, const std::vector<Entry>& entries) {
  SupportSet out(rows, cols);
  for (const auto& [i, j] : entries) {
    if (i < 0 || i >= rows || j < 0 || j >= cols) {
      throw std::invalid_argument("support entry (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") out of range");
    }
    if (out.contains(i, j)) {
      throw std::invalid_argument("support entry (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ") repeated");
    }
    out.insert(i, j);
  }
  return out;
}

SupportSet SupportSet::complement() const { return SupportSet(Mask(!mask_)); }

bool SupportSet::is_subset_of(const SupportSet& other) const {
  if (rows() != other.rows() || cols() != other.cols()) return false;
  return !(mask_ && !other.mask_).any();
}

std::vector<Entry> SupportSet::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(count()));
  for (Index i = 0; i < rows(); ++i) {
    for (Index j = 0; j < cols(); ++j) {
      if (mask_(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

Matrix SupportSet::apply(const Matrix& x) const {
  require_shape(x, rows(), cols(), "support projection");
  return mask_.select(x, 0.0);
}

// -------------------------------------------------------------- TangentSpace

TangentSpace::TangentSpace(Matrix u, Matrix v) : u_(std::move(u)), v_(std::move(v)) {
  if (u_.cols() != v_.cols()) {
    throw std::invalid_argument("tangent space: U and V have different ranks");
  }
  if (u_.cols() > u_.rows() || v_.cols() > v_.rows()) {
    throw std::invalid_argument("tangent space: rank exceeds a dimension");
  }
  require_finite(u_, "tangent space U");
  require_finite(v_, "tangent space V");
  require_orthonormal_columns(u_, "tangent space U");
  require_orthonormal_columns(v_, "tangent space V");
}

TangentSpace TangentSpace::empty(Index rows, Index cols) {
  return TangentSpace(Matrix(rows, 0), Matrix(cols, 0));
}

Matrix TangentSpace::apply(const Matrix& x) const {
  require_shape(x, rows(), cols(), "tangent projection");
  if (rank() == 0) return Matrix::Zero(rows(), cols());
  const Matrix utx = u_.transpose() * x;        // r x n
  const Matrix xv = x * v_;                      // m x r
  const Matrix utxv = utx * v_;                  // r x r
  return u_ * utx + (xv - u_ * utxv) * v_.transpose();
}

// ----------------------------------------------------------------- SpanBasis

SpanBasis::SpanBasis(Index rows, Index cols) : rows_(rows), cols_(cols), stacked_(0, rows * cols) {}

SpanBasis::SpanBasis(Index rows, Index cols, Matrix stacked)
    : rows_(rows), cols_(cols), stacked_(std::move(stacked)) {
  if (stacked_.cols() != rows * cols) {
    throw std::invalid_argument("span basis: stacked width does not match the matrix shape");
  }
  require_finite(stacked_, "span basis");
  if (stacked_.rows() > 0) {
    const Matrix gram = stacked_ * stacked_.transpose();
    const double dev =
        (gram - Matrix::Identity(stacked_.rows(), stacked_.rows())).cwiseAbs().maxCoeff();
    if (!(dev <= kOrthoTol)) {
      throw std::invalid_argument("span basis is not orthonormal (deviation " +
                                  std::to_string(dev) + ")");
    }
  }
}

SpanBasis SpanBasis::from_elements(const std::vector<Matrix>& elements) {
  if (elements.empty()) throw std::invalid_argument("span basis: no elements given");
  const Index m = elements.front().rows();
  const Index n = elements.front().cols();
  Matrix stacked(static_cast<Index>(elements.size()), m * n);
  for (std::size_t k = 0; k < elements.size(); ++k) {
    require_shape(elements[k], m, n, "span basis element");
    stacked.row(static_cast<Index>(k)) = vec(elements[k]).transpose();
  }
  return SpanBasis(m, n, std::move(stacked));
}

Matrix SpanBasis::element(Index k) const {
  if (k < 0 || k >= size()) throw std::out_of_range("span basis element index");
  return Eigen::Map<const Matrix>(Vector(stacked_.row(k).transpose()).data(), rows_, cols_);
}

std::vector<Matrix> SpanBasis::elements() const {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(size()));
  for (Index k = 0; k < size(); ++k) out.push_back(element(k));
  return out;
}

Vector SpanBasis::coefficients(const Matrix& x) const {
  require_shape(x, rows_, cols_, "span coefficients");
  return stacked_ * vec(x);
}

Matrix SpanBasis::combine(const Vector& c) const {
  if (c.size() != size()) throw std::invalid_argument("span combine: coefficient count");
  Matrix out(rows_, cols_);
  Eigen::Map<Vector>(out.data(), out.size()) = stacked_.transpose() * c;
  return out;
}

Matrix SpanBasis::apply(const Matrix& x) const {
  if (size() == 0) {
    require_shape(x, rows_, cols_, "span projection");
    return Matrix::Zero(rows_, cols_);
  }
  return combine(coefficients(x));
}

// ------------------------------------------------------------------ Subspace

struct Subspace::Node {
  struct Complement {
    Subspace child;
  };
  struct Sum {
    Subspace a;
    Subspace b;
    double overlap;
  };
  Index rows;
  Index cols;
  std::variant<TangentSpace, SupportSet, SpanBasis, Complement, Sum> body;
};

Subspace Subspace::tangent(TangentSpace t) {
  const Index m = t.rows(), n = t.cols();
  return Subspace(std::make_shared<const Node>(Node{m, n, std::move(t)}));
}

Subspace Subspace::support(SupportSet omega) {
  const Index m = omega.rows(), n = omega.cols();
  return Subspace(std::make_shared<const Node>(Node{m, n, std::move(omega)}));
}

Subspace Subspace::span(SpanBasis basis) {
  const Index m = basis.rows(), n = basis.cols();
  return Subspace(std::make_shared<const Node>(Node{m, n, std::move(basis)}));
}

Subspace Subspace::zero(Index rows, Index cols) { return span(SpanBasis(rows, cols)); }

Subspace Subspace::complement() const {
  return Subspace(std::make_shared<const Node>(Node{rows(), cols(), Node::Complement{*this}}));
}

Subspace Subspace::direct_sum(const Subspace& a, const Subspace& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("direct sum of subspaces with different shapes");
  }
  const DirectSumCheck check = check_direct_sum(a, b);
  if (!check.independent) {
    throw DegenerateSum(check.overlap.value,
                        "subspaces nearly intersect: ||P_A P_B|| = " +
                            std::to_string(check.overlap.value));
  }
  return Subspace(std::make_shared<const Node>(
      Node{a.rows(), a.cols(), Node::Sum{a, b, check.overlap.value}}));
}

Subspace::Kind Subspace::kind() const {
  switch (node_->body.index()) {
    case 0: return Kind::tangent;
    case 1: return Kind::support;
    case 2: return Kind::span;
    case 3: return Kind::complement;
    default: return Kind::direct_sum;
  }
}

Index Subspace::rows() const { return node_->rows; }
Index Subspace::cols() const { return node_->cols; }

const TangentSpace* Subspace::as_tangent() const { return std::get_if<TangentSpace>(&node_->body); }
const SupportSet* Subspace::as_support() const { return std::get_if<SupportSet>(&node_->body); }
const SpanBasis* Subspace::as_span() const { return std::get_if<SpanBasis>(&node_->body); }

const Subspace& Subspace::child() const {
  const auto* c = std::get_if<Node::Complement>(&node_->body);
  if (c == nullptr) throw std::logic_error("child() on a non-complement subspace");
  return c->child;
}

const Subspace& Subspace::first() const {
  const auto* s = std::get_if<Node::Sum>(&node_->body);
  if (s == nullptr) throw std::logic_error("first() on a non-sum subspace");
  return s->a;
}

const Subspace& Subspace::second() const {
  const auto* s = std::get_if<Node::Sum>(&node_->body);
  if (s == nullptr) throw std::logic_error("second() on a non-sum subspace");
  return s->b;
}

double Subspace::summand_overlap() const {
  const auto* s = std::get_if<Node::Sum>(&node_->body);
  if (s == nullptr) throw std::logic_error("summand_overlap() on a non-sum subspace");
  return s->overlap;
}

bool Subspace::trivially_zero() const {
  if (const auto* t = as_tangent()) return t->rank() == 0;
  if (const auto* o = as_support()) return o->empty();
  if (const auto* g = as_span()) return g->size() == 0;
  if (kind() == Kind::direct_sum) return first().trivially_zero() && second().trivially_zero();
  return false;
}

namespace {

// sum_k (P_A P_B)^k x0 for x0 in A.
Matrix resolvent_series(const Subspace& a, const Subspace& b, Matrix x0, double overlap) {
  Matrix sum = x0;
  Matrix term = std::move(x0);
  if (b.trivially_zero()) return sum;
  for (int k = 1; k <= kNeumannMaxTerms; ++k) {
    const double sum_norm = sum.norm();
    if (sum_norm == 0.0) return sum;
    term = a.apply(b.apply(term));
    sum += term;
    if (term.norm() <= kNeumannRelTol * sum_norm) return sum;
  }
  throw DegenerateSum(overlap, "direct-sum resolvent series did not converge in " +
                                   std::to_string(kNeumannMaxTerms) + " terms");
}

}  // namespace

Matrix Subspace::apply(const Matrix& x) const {
  return std::visit(
      [&](const auto& body) -> Matrix {
        using B = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<B, Node::Complement>) {
          return x - body.child.apply(x);
        } else if constexpr (std::is_same_v<B, Node::Sum>) {
          const Matrix pa = body.a.apply(x);
          const Matrix pb = body.b.apply(x);
          Matrix first = resolvent_series(body.a, body.b, body.a.apply(x - pb), body.overlap);
          first += resolvent_series(body.b, body.a, body.b.apply(x - pa), body.overlap);
          return first;
        } else {
          return body.apply(x);
        }
      },
      node_->body);
}

Matrix project_T(const Matrix& x, const TangentSpace& t) { return t.apply(x); }
Matrix project_support(const Matrix& x, const SupportSet& omega) { return omega.apply(x); }
Matrix project_span(const Matrix& x, const SpanBasis& basis) { return basis.apply(x); }

Matrix project_direct_sum(const Matrix& x, const Subspace& sum) {
  if (sum.kind() != Subspace::Kind::direct_sum) {
    throw std::invalid_argument("project_direct_sum needs a direct-sum handle");
  }
  return sum.apply(x);
}

// ------------------------------------------------------------ operator norms

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed, 0x0b);
  Matrix x(rows, cols);
  for (Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
  return x;
}

// Square root of the top eigenvalue of C_kl = <G_k, P_A G_l>.
OpNormEstimate span_gram_norm(const SpanBasis& g, const Subspace& a) {
  const Index p = g.size();
  Matrix pag(p, g.rows() * g.cols());
  for (Index k = 0; k < p; ++k) {
    const Matrix proj = a.apply(g.element(k));
    pag.row(k) = vec(proj).transpose();
  }
  Matrix c = g.stacked() * pag.transpose();
  c = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed on span Gram matrix");
  const double top = std::max(0.0, eig.eigenvalues().maxCoeff());
  return {std::min(1.0, std::sqrt(top)), true, 0, true};
}

OpNormEstimate dense_norm(const Subspace& a, const Subspace& b) {
  const Index m = a.rows(), n = a.cols();
  Matrix op(m * n, m * n);
  Matrix e = Matrix::Zero(m, n);
  for (Index k = 0; k < m * n; ++k) {
    e.data()[k] = 1.0;
    const Matrix col = a.apply(b.apply(e));
    op.col(k) = vec(col);
    e.data()[k] = 0.0;
  }
  const Vector s = singular_values(op);
  const double top = s.size() == 0 ? 0.0 : s[0];
  return {std::min(1.0, top), true, 0, true};
}

OpNormEstimate power_norm(const Subspace& a, const Subspace& b, const OpNormOptions& opts) {
  OpNormEstimate est;
  est.converged = false;
  Matrix x = b.apply(random_matrix(b.rows(), b.cols(), opts.seed));
  double nx = x.norm();
  if (nx == 0.0) return {0.0, true, 0, false};
  x /= nx;
  double prev = -1.0;
  int stable = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Matrix y = a.apply(x);
    const double value = y.norm();  // ||P_A x|| with x unit in B
    est.value = std::max(est.value, value);
    est.iterations = it;
    if (value == 0.0) {
      est.converged = true;
      break;
    }
    if (prev >= 0.0 && std::abs(value - prev) <= opts.rel_tol * value) {
      if (++stable >= 2) {
        est.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    prev = value;
    x = b.apply(y);
    nx = x.norm();
    if (nx == 0.0) {
      est.converged = true;
      break;
    }
    x /= nx;
  }
  est.value = std::min(1.0, est.value);
  return est;
}

}  // namespace

OpNormEstimate op_norm_product(const Subspace& a, const Subspace& b, const OpNormOptions& opts) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("op_norm_product: subspaces have different shapes");
  }
  if (opts.method == OpNormMethod::power) return power_norm(a, b, opts);
  if (opts.method == OpNormMethod::dense) return dense_norm(a, b);

  if (a.trivially_zero() || b.trivially_zero()) return {0.0, true, 0, true};
  if (const auto* oa = a.as_support()) {
    if (const auto* ob = b.as_support()) {
      return {(oa->mask() && ob->mask()).any() ? 1.0 : 0.0, true, 0, true};
    }
  }
  // ||P_A P_B|| = ||P_B P_A||, so a small span on either side gives an exact
  // p x p eigenproblem.
  constexpr Index kGramLimit = 256;
  const SpanBasis* gb = b.as_span();
  const SpanBasis* ga = a.as_span();
  if (gb != nullptr && gb->size() <= kGramLimit && (ga == nullptr || gb->size() <= ga->size())) {
    return span_gram_norm(*gb, a);
  }
  if (ga != nullptr && ga->size() <= kGramLimit) return span_gram_norm(*ga, b);
  if (a.rows() * a.cols() <= opts.dense_limit) return dense_norm(a, b);
  return power_norm(a, b, opts);
}

OpNormEstimate symmetric_op_norm(const std::function<Matrix(const Matrix&)>& op,
                                 const Subspace& domain, const OpNormOptions& opts) {
  OpNormEstimate est;
  est.converged = false;
  Matrix x = domain.apply(random_matrix(domain.rows(), domain.cols(), opts.seed));
  double nx = x.norm();
  if (nx == 0.0) return {0.0, true, 0, false};
  x /= nx;
  // For self-adjoint op, ||op x|| over unit x tends to the largest
  // |eigenvalue| even when +lambda and -lambda are both present.
  double prev = -1.0;
  int stable = 0;
  for (int it = 1; it <= opts.max_iters; ++it) {
    const Matrix y = domain.apply(op(x));
    const double value = y.norm();
    est.value = std::max(est.value, value);
    est.iterations = it;
    if (value == 0.0) {
      est.converged = true;
      break;
    }
    if (prev >= 0.0 && std::abs(value - prev) <= opts.rel_tol * value) {
      if (++stable >= 2) {
        est.converged = true;
        break;
      }
    } else {
      stable = 0;
    }
    prev = value;
    x = y / value;
  }
  return est;
}

// ------------------------------------------------------------------ coherence

double coherence_mu(const TangentSpace& t) {
  const Index r = t.rank();
  if (r == 0) throw std::invalid_argument("coherence_mu: undefined for rank 0");
  const double m = static_cast<double>(t.rows());
  const double n = static_cast<double>(t.cols());
  const double rr = static_cast<double>(r);
  const double row_u = t.U().rowwise().squaredNorm().maxCoeff();
  const double row_v = t.V().rowwise().squaredNorm().maxCoeff();
  const double uv_inf = t.uv().cwiseAbs().maxCoeff();
  return std::max({m / rr * row_u, n / rr * row_v, m * n / rr * uv_inf * uv_inf});
}

double nu_coherence(const SpanBasis& basis) {
  if (basis.size() == 0) throw std::invalid_argument("nu_coherence: empty basis");
  double worst = 0.0;
  for (Index k = 0; k < basis.size(); ++k) {
    worst = std::max(worst, spectral_norm(basis.element(k)));
  }
  return static_cast<double>(basis.cols()) * worst * worst;
}

GammaMode GammaMode::default_for(Index rows, Index cols) {
  return rows * cols <= 250000 ? exact() : sampled(10000);
}

namespace {

double diagonal_entry(const Subspace& s, Index i, Index j) {
  if (const auto* t = s.as_tangent()) {
    const double a = t->U().row(i).squaredNorm();
    const double b = t->V().row(j).squaredNorm();
    return a + b - a * b;
  }
  if (const auto* o = s.as_support()) return o->contains(i, j) ? 1.0 : 0.0;
  if (const auto* g = s.as_span()) {
    const Index col = j * g->rows() + i;
    return g->size() == 0 ? 0.0 : g->stacked().col(col).squaredNorm();
  }
  if (s.kind() == Subspace::Kind::complement) return 1.0 - diagonal_entry(s.child(), i, j);
  Matrix e = Matrix::Zero(s.rows(), s.cols());
  e(i, j) = 1.0;
  return s.apply(e)(i, j);
}

}  // namespace

Matrix projector_diagonal(const Subspace& s) {
  const Index m = s.rows(), n = s.cols();
  Matrix d(m, n);
  if (const auto* t = s.as_tangent()) {
    const Vector a = t->U().rowwise().squaredNorm();
    const Vector b = t->V().rowwise().squaredNorm();
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) d(i, j) = a[i] + b[j] - a[i] * b[j];
    return d;
  }
  if (const auto* g = s.as_span()) {
    if (g->size() == 0) return Matrix::Zero(m, n);
    const Vector col_norms = g->stacked().colwise().squaredNorm().transpose();
    return Eigen::Map<const Matrix>(col_norms.data(), m, n);
  }
  if (s.kind() == Subspace::Kind::complement) {
    return Matrix::Ones(m, n) - projector_diagonal(s.child());
  }
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) d(i, j) = diagonal_entry(s, i, j);
  return d;
}

GammaEstimate gamma_constrained(const Subspace& s, const GammaMode& mode) {
  GammaEstimate out;
  if (mode.kind == GammaMode::Kind::exact) {
    const Matrix d = projector_diagonal(s);
    Index i = 0, j = 0;
    out.value = d.size() == 0 ? 0.0 : d.maxCoeff(&i, &j);
    out.argmax = {i, j};
    out.evaluated = d.size();
    return out;
  }
  Rng rng(mode.seed, 0x9a);
  std::uniform_int_distribution<Index> row(0, s.rows() - 1), col(0, s.cols() - 1);
  for (Index k = 0; k < mode.samples; ++k) {
    const Index i = row(rng.engine());
    const Index j = col(rng.engine());
    const double v = diagonal_entry(s, i, j);
    if (v > out.value || k == 0) {
      out.value = v;
      out.argmax = {i, j};
    }
  }
  out.evaluated = mode.samples;
  out.lower_bound = true;
  return out;
}

GammaEstimate gamma_constrained(const Subspace& s) {
  return gamma_constrained(s, GammaMode::default_for(s.rows(), s.cols()));
}

DirectSumCheck check_direct_sum(const Subspace& a, const Subspace& b, const OpNormOptions& opts) {
  DirectSumCheck out;
  out.overlap = op_norm_product(a, b, opts);
  out.independent = out.overlap.value < kDegenerateThreshold;
  return out;
}

}  // namespace cpcp
