#include "cpcp/instance.hpp"

#include <Eigen/QR>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "cpcp/errors.hpp"
#include "cpcp/io.hpp"
#include "cpcp/json_out.hpp"
#include "cpcp/rng.hpp"

namespace cpcp {

namespace {

// Sub-stream tags passed to mix_seed so components never share draws.
enum Stream : std::uint64_t { kLowRank = 1, kSparse = 2, kQperp = 3 };

Matrix gaussian(Index rows, Index cols, Rng& rng, double scale = 1.0) {
  Matrix x(rows, cols);
  for (Index k = 0; k < x.size(); ++k) x.data()[k] = scale * rng.normal();
  return x;
}

Matrix orthonormal_columns(Index rows, Index cols, Rng& rng) {
  if (cols == 0) return Matrix(rows, 0);
  Eigen::HouseholderQR<Matrix> qr(gaussian(rows, cols, rng));
  return qr.householderQ() * Matrix::Identity(rows, cols);
}

// Two-pass modified Gram-Schmidt on the rows of `rows`, in place. Returns the
// index of the first row whose residual falls below rel_tol times its
// original norm, or -1.
Index gram_schmidt_rows(Matrix& rows, double rel_tol) {
  for (Index k = 0; k < rows.rows(); ++k) {
    const double original = rows.row(k).norm();
    for (int pass = 0; pass < 2; ++pass) {
      for (Index j = 0; j < k; ++j) {
        rows.row(k) -= rows.row(j).dot(rows.row(k)) * rows.row(j);
      }
    }
    const double residual = rows.row(k).norm();
    if (!(residual > rel_tol * original) || original == 0.0) return k;
    rows.row(k) /= residual;
  }
  return -1;
}

}  // namespace

std::string to_string(QModel q) {
  switch (q) {
    case QModel::random: return "random";
    case QModel::nu_coherent_smooth: return "nu_coherent_smooth";
    case QModel::from_jacobians: return "from_jacobians";
  }
  return "random";
}

QModel parse_qmodel(const std::string& name) {
  if (name == "random") return QModel::random;
  if (name == "nu_coherent_smooth" || name == "nu_coherent") return QModel::nu_coherent_smooth;
  if (name == "from_jacobians" || name == "jacobians") return QModel::from_jacobians;
  throw std::invalid_argument("unknown qmodel '" + name + "'");
}

void GenParams::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("GenParams: " + msg); };
  if (m < 1 || n < 1) fail("m and n must be positive");
  if (n > m) fail("n must not exceed m");
  if (r < 0 || r > n) fail("r must lie in [0, n]");
  if (!(rho >= 0.0 && rho < 1.0)) fail("rho must lie in [0, 1)");
  if (p < 0) fail("p must be nonnegative");
  if (p > 0 && p >= m * n - (m + n - r) * r) {
    fail("p must be below mn - (m+n-r)r = " + std::to_string(m * n - (m + n - r) * r));
  }
  if (magnitude && !(*magnitude > 0.0 && std::isfinite(*magnitude))) {
    fail("magnitude must be positive");
  }
  if (qmodel == QModel::nu_coherent_smooth && p > n) fail("nu_coherent_smooth needs p <= n");
  if (qmodel == QModel::from_jacobians && p > kMaxJacobians) {
    fail("from_jacobians supports p <= " + std::to_string(kMaxJacobians));
  }
}

LowRankPart gen_low_rank(Index m, Index n, Index r, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_low_rank: empty shape");
  if (r < 0 || r > n || r > m) throw std::invalid_argument("gen_low_rank: r must lie in [0, min(m, n)]");
  Rng rng(seed, kLowRank);
  Matrix u = orthonormal_columns(m, r, rng);
  Matrix v = orthonormal_columns(n, r, rng);
  Vector sigma(r);
  for (Index k = 0; k < r; ++k) sigma[k] = 1.0 + rng.uniform();
  // Sort nonincreasing so (U, sigma, V) is a valid SVD.
  std::vector<Index> order(static_cast<std::size_t>(r));
  for (Index k = 0; k < r; ++k) order[static_cast<std::size_t>(k)] = k;
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return sigma[a] > sigma[b]; });
  Matrix us(m, r), vs(n, r);
  Vector ss(r);
  for (Index k = 0; k < r; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    us.col(k) = u.col(src);
    vs.col(k) = v.col(src);
    ss[k] = sigma[src];
  }
  Matrix l0 = us * ss.asDiagonal() * vs.transpose();
  return {std::move(l0), TangentSpace(std::move(us), std::move(vs)), std::move(ss)};
}

SparsePart gen_sparse(Index m, Index n, double rho, double magnitude, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("gen_sparse: rho must lie in [0, 1)");
  if (!(magnitude >= 0.0)) throw std::invalid_argument("gen_sparse: negative magnitude");
  Rng rng(seed, kSparse);
  SparsePart out{Matrix::Zero(m, n), SupportSet(m, n)};
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      if (rng.bernoulli(rho)) {
        out.omega.insert(i, j);
        out.S0(i, j) = magnitude * rng.sign();
      }
    }
  }
  return out;
}

SparsePart gen_sparse_on(const SupportSet& omega, double magnitude, std::uint64_t seed) {
  Rng rng(seed, kSparse);
  SparsePart out{Matrix::Zero(omega.rows(), omega.cols()), omega};
  for (Index j = 0; j < omega.cols(); ++j) {
    for (Index i = 0; i < omega.rows(); ++i) {
      if (omega.contains(i, j)) out.S0(i, j) = magnitude * rng.sign();
    }
  }
  return out;
}

SpanBasis gen_random_qperp(Index m, Index n, Index p, std::uint64_t seed) {
  if (p < 0 || p >= m * n) throw std::invalid_argument("gen_random_qperp: p must lie in [0, mn)");
  if (p == 0) return SpanBasis(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m * n));
  for (int attempt = 0; attempt <= kMaxGenerationRetries; ++attempt) {
    Rng rng(mix_seed(seed, kQperp, static_cast<std::uint64_t>(attempt)));
    Matrix rows = gaussian(p, m * n, rng, scale);
    if (gram_schmidt_rows(rows, 1e-8) < 0) return SpanBasis(m, n, std::move(rows));
  }
  throw NumericalError("gen_random_qperp: Gram-Schmidt broke down on every retry");
}

SpanBasis gen_nu_coherent_qperp(Index m, Index n, Index p, std::uint64_t /*seed*/) {
  if (p < 0 || p > n) throw std::invalid_argument("gen_nu_coherent_qperp: p must lie in [0, n]");
  if (n > m) throw std::invalid_argument("gen_nu_coherent_qperp: needs n <= m");
  if (p == 0) return SpanBasis(m, n);
  auto dct = [](Index size, Index k, Index i) {
    const double s = k == 0 ? std::sqrt(1.0 / static_cast<double>(size))
                            : std::sqrt(2.0 / static_cast<double>(size));
    return s * std::cos(std::numbers::pi * static_cast<double>((2 * i + 1) * k) /
                        (2.0 * static_cast<double>(size)));
  };
  Matrix w(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) w(i, j) = dct(m, j, i);
  Matrix rows(p, m * n);
  for (Index k = 0; k < p; ++k) {
    Matrix g(m, n);
    for (Index j = 0; j < n; ++j) g.col(j) = w.col(j) * dct(n, k, j);
    rows.row(k) = Eigen::Map<const Vector>(g.data(), g.size()).transpose();
  }
  // The family is orthonormal analytically; one Gram-Schmidt sweep removes
  // rounding drift.
  if (gram_schmidt_rows(rows, 1e-8) >= 0) {
    throw NumericalError("gen_nu_coherent_qperp: cosine family lost independence");
  }
  return SpanBasis(m, n, std::move(rows));
}

SpanBasis basis_from_jacobians(const std::vector<Matrix>& jacobians) {
  if (jacobians.empty()) throw std::invalid_argument("basis_from_jacobians: empty list");
  const Index m = jacobians.front().rows(), n = jacobians.front().cols();
  Matrix rows(static_cast<Index>(jacobians.size()), m * n);
  for (std::size_t k = 0; k < jacobians.size(); ++k) {
    const Matrix& j = jacobians[k];
    if (j.rows() != m || j.cols() != n) {
      throw std::invalid_argument("basis_from_jacobians: input " + std::to_string(k) +
                                  " has a different shape");
    }
    require_finite(j, "jacobian");
    rows.row(static_cast<Index>(k)) = Eigen::Map<const Vector>(j.data(), j.size()).transpose();
  }
  const Index bad = gram_schmidt_rows(rows, 1e-8);
  if (bad >= 0) {
    throw RankDeficient(static_cast<std::size_t>(bad),
                        "jacobian " + std::to_string(bad + 1) +
                            " (1-based) lies in the span of the preceding inputs");
  }
  return SpanBasis(m, n, std::move(rows));
}

std::vector<Matrix> synthetic_image_jacobians(Index m, Index n, Index count) {
  if (count < 1 || count > kMaxJacobians) {
    throw std::invalid_argument("synthetic_image_jacobians: count must lie in [1, 6]");
  }
  struct Blob {
    double cx, cy, s, a;
  };
  const Blob blobs[] = {{-0.35, -0.2, 0.35, 1.0}, {0.3, 0.25, 0.25, -0.7}, {0.05, -0.45, 0.2, 0.5}};
  Matrix ix(m, n), iy(m, n), xs(m, n), ys(m, n);
  for (Index i = 0; i < m; ++i) {
    const double y = m == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(m - 1);
    for (Index j = 0; j < n; ++j) {
      const double x =
          n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n - 1);
      double gx = 0.0, gy = 0.0;
      for (const auto& b : blobs) {
        const double dx = x - b.cx, dy = y - b.cy;
        const double v = b.a * std::exp(-(dx * dx + dy * dy) / (2.0 * b.s * b.s));
        gx += -dx / (b.s * b.s) * v;
        gy += -dy / (b.s * b.s) * v;
      }
      ix(i, j) = gx;
      iy(i, j) = gy;
      xs(i, j) = x;
      ys(i, j) = y;
    }
  }
  std::vector<Matrix> all = {
      ix,
      iy,
      (-ys.array() * ix.array() + xs.array() * iy.array()).matrix(),
      (xs.array() * ix.array() + ys.array() * iy.array()).matrix(),
      (xs.array() * ix.array() - ys.array() * iy.array()).matrix(),
      (ys.array() * ix.array() + xs.array() * iy.array()).matrix(),
  };
  all.resize(static_cast<std::size_t>(count));
  return all;
}

SpanBasis gen_qperp(const GenParams& params, std::uint64_t seed) {
  if (params.p == 0) return SpanBasis(params.m, params.n);
  switch (params.qmodel) {
    case QModel::random: return gen_random_qperp(params.m, params.n, params.p, seed);
    case QModel::nu_coherent_smooth: return gen_nu_coherent_qperp(params.m, params.n, params.p, seed);
    case QModel::from_jacobians:
      return basis_from_jacobians(synthetic_image_jacobians(params.m, params.n, params.p));
  }
  throw std::invalid_argument("unknown qmodel");
}

namespace {

double resolve_magnitude(const GenParams& params, const Matrix& l0) {
  if (params.magnitude) return *params.magnitude;
  const double mean_abs = l0.size() == 0 ? 0.0 : l0.cwiseAbs().mean();
  return mean_abs > 0.0 ? 10.0 * mean_abs : 1.0;
}

DirectSumVerdicts check_pairs(const ProblemInstance& inst) {
  const Subspace q = Subspace::span(inst.qperp);
  const Subspace t = Subspace::tangent(inst.T);
  const Subspace o = Subspace::support(inst.omega);
  return {check_direct_sum(q, t), check_direct_sum(q, o), check_direct_sum(t, o)};
}

ProblemInstance build(const GenParams& params, const SupportSet* fixed_omega, std::uint64_t seed) {
  params.validate();
  if (fixed_omega && (fixed_omega->rows() != params.m || fixed_omega->cols() != params.n)) {
    throw std::invalid_argument("assemble: support shape does not match params");
  }
  double last_overlap = 1.0;
  for (int attempt = 0; attempt <= kMaxGenerationRetries; ++attempt) {
    const std::uint64_t sub = mix_seed(seed, 0xa55e, static_cast<std::uint64_t>(attempt));
    ProblemInstance inst;
    inst.params = params;
    inst.seed = seed;
    inst.attempts = attempt + 1;
    LowRankPart low = gen_low_rank(params.m, params.n, params.r, sub);
    inst.magnitude = resolve_magnitude(params, low.L0);
    SparsePart sparse = fixed_omega ? gen_sparse_on(*fixed_omega, inst.magnitude, sub)
                                    : gen_sparse(params.m, params.n, params.rho, inst.magnitude, sub);
    inst.L0 = std::move(low.L0);
    inst.T = std::move(low.T);
    inst.S0 = std::move(sparse.S0);
    inst.omega = std::move(sparse.omega);
    inst.qperp = gen_qperp(params, sub);
    inst.D = inst.L0 + inst.S0;
    inst.verdicts = check_pairs(inst);
    if (inst.verdicts.all_independent()) return inst;
    last_overlap = std::max({inst.verdicts.qperp_T.overlap.value,
                             inst.verdicts.qperp_omega.overlap.value,
                             inst.verdicts.T_omega.overlap.value});
  }
  throw DegenerateSum(last_overlap, "assemble: degenerate direct sum after " +
                                        std::to_string(kMaxGenerationRetries) + " retries");
}

}  // namespace

ProblemInstance assemble(const GenParams& params, std::uint64_t seed) {
  return build(params, nullptr, seed);
}

ProblemInstance assemble_on_support(const GenParams& params, const SupportSet& omega,
                                    std::uint64_t seed) {
  return build(params, &omega, seed);
}

// ------------------------------------------------------------------- bundles

namespace {

using nlohmann::json;

json verdict_json(const DirectSumCheck& c) {
  return {{"independent", c.independent},
          {"overlap", c.overlap.value},
          {"converged", c.overlap.converged}};
}

DirectSumCheck verdict_from(const json& j) {
  DirectSumCheck c;
  c.independent = j.at("independent").get<bool>();
  c.overlap.value = j.at("overlap").get<double>();
  c.overlap.converged = j.value("converged", true);
  return c;
}

}  // namespace

std::string bundle_params_json(const ProblemInstance& inst) {
  json j;
  j["format"] = "cpcp-bundle-1";
  j["m"] = inst.params.m;
  j["n"] = inst.params.n;
  j["r"] = inst.params.r;
  j["rho"] = inst.params.rho;
  j["p"] = inst.params.p;
  j["magnitude"] = inst.magnitude;
  j["magnitude_default"] = !inst.params.magnitude.has_value();
  j["qmodel"] = to_string(inst.params.qmodel);
  j["seed"] = inst.seed;
  j["attempts"] = inst.attempts;
  j["support_size"] = inst.omega.count();
  j["direct_sum"] = {{"qperp_T", verdict_json(inst.verdicts.qperp_T)},
                     {"qperp_omega", verdict_json(inst.verdicts.qperp_omega)},
                     {"T_omega", verdict_json(inst.verdicts.T_omega)}};
  return dump_json(j) + "\n";
}

void write_bundle(const std::filesystem::path& dir, const ProblemInstance& inst) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create bundle directory " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "params.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "params.json").string());
    out << bundle_params_json(inst);
  }
  write_dmat(dir / "L0.dmat", inst.L0);
  write_dmat(dir / "S0.dmat", inst.S0);
  write_dmat(dir / "D.dmat", inst.D);
  write_support(dir / "omega.supp", inst.omega);
  write_basis(dir / "qperp.basis", inst.qperp);
}

ProblemInstance read_bundle(const std::filesystem::path& dir) {
  const auto params_path = dir / "params.json";
  std::ifstream in(params_path);
  if (!in) throw IoError("cannot open " + params_path.string());
  ProblemInstance inst;
  try {
    const json j = json::parse(in);
    inst.params.m = j.at("m").get<Index>();
    inst.params.n = j.at("n").get<Index>();
    inst.params.r = j.at("r").get<Index>();
    inst.params.rho = j.at("rho").get<double>();
    inst.params.p = j.at("p").get<Index>();
    inst.params.qmodel = parse_qmodel(j.at("qmodel").get<std::string>());
    inst.magnitude = j.at("magnitude").get<double>();
    if (!j.value("magnitude_default", false)) inst.params.magnitude = inst.magnitude;
    inst.seed = j.at("seed").get<std::uint64_t>();
    inst.attempts = j.value("attempts", 1);
    const json& ds = j.at("direct_sum");
    inst.verdicts = {verdict_from(ds.at("qperp_T")), verdict_from(ds.at("qperp_omega")),
                     verdict_from(ds.at("T_omega"))};
  } catch (const json::exception& e) {
    throw IoError(params_path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(params_path.string() + ": " + e.what());
  }
  inst.L0 = read_dmat(dir / "L0.dmat");
  inst.S0 = read_dmat(dir / "S0.dmat");
  inst.D = read_dmat(dir / "D.dmat");
  inst.omega = read_support(dir / "omega.supp");
  inst.qperp = read_basis(dir / "qperp.basis");

  const Index m = inst.params.m, n = inst.params.n;
  auto check_shape = [&](Index rows, Index cols, const char* what) {
    if (rows != m || cols != n) {
      throw IoError(dir.string() + ": " + what + " shape does not match params.json");
    }
  };
  check_shape(inst.L0.rows(), inst.L0.cols(), "L0");
  check_shape(inst.S0.rows(), inst.S0.cols(), "S0");
  check_shape(inst.D.rows(), inst.D.cols(), "D");
  check_shape(inst.omega.rows(), inst.omega.cols(), "omega");
  check_shape(inst.qperp.rows(), inst.qperp.cols(), "qperp");
  if (inst.qperp.size() != inst.params.p) throw IoError(dir.string() + ": qperp size != p");

  if (inst.params.r == 0) {
    inst.T = TangentSpace::empty(m, n);
  } else {
    const SvdFactors f = svd(inst.L0);
    if (f.rank() != inst.params.r) {
      throw IoError(dir.string() + ": L0 has rank " + std::to_string(f.rank()) + ", params say " +
                    std::to_string(inst.params.r));
    }
    inst.T = TangentSpace(f.U, f.V);
  }
  return inst;
}

}  // namespace cpcp
