#include "cpcp/lemmas.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

#include "cpcp/errors.hpp"
#include "cpcp/instance.hpp"
#include "cpcp/json_out.hpp"
#include "cpcp/parallel.hpp"
#include "cpcp/rng.hpp"
#include "cpcp/subspace.hpp"

namespace cpcp {

namespace {

// Relative slack for inequalities that hold exactly in exact arithmetic.
constexpr double kRoundoff = 1e-9;

SupportSet bernoulli_support(Index m, Index n, double rho, std::uint64_t seed) {
  return gen_sparse(m, n, rho, 1.0, seed).omega;
}

// Gamma^perp = T (+) R with R = P_{T^perp} Q^perp, an orthogonal split that
// gives the projector in closed form.
struct GammaPerp {
  TangentSpace t;
  SpanBasis r;

  GammaPerp(const TangentSpace& tangent, const SpanBasis& qperp) : t(tangent) {
    if (qperp.size() == 0) {
      r = SpanBasis(tangent.rows(), tangent.cols());
      return;
    }
    std::vector<Matrix> residuals;
    for (const auto& g : qperp.elements()) residuals.push_back(g - t.apply(g));
    r = basis_from_jacobians(residuals);
  }

  Matrix apply(const Matrix& x) const { return t.apply(x) + r.apply(x); }

  Matrix diagonal() const {
    return projector_diagonal(Subspace::tangent(t)) + projector_diagonal(Subspace::span(r));
  }
};

Subspace full_space(Index m, Index n) { return Subspace::zero(m, n).complement(); }

Matrix gaussian(Index m, Index n, Rng& rng) {
  Matrix x(m, n);
  for (Index k = 0; k < x.size(); ++k) x.data()[k] = rng.normal();
  return x;
}

// A small random subspace for the deterministic inequalities. Supports avoid
// `taken`, so two supports never share an entry (which would make their sum
// degenerate).
Subspace small_subspace(int kind, Index m, Index n, Rng& rng, SupportSet& taken) {
  const std::uint64_t s = rng.next_u64();
  switch (kind) {
    case 0:
      // Rank 1 keeps three summands well inside R^{m x n} at these sizes.
      return Subspace::tangent(gen_low_rank(m, n, 1, s).T);
    case 1: {
      const double rho = 0.05 + 0.15 * rng.uniform();
      SupportSet omega(m, n);
      for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
          if (rng.bernoulli(rho) && !taken.contains(i, j)) {
            omega.insert(i, j);
            taken.insert(i, j);
          }
        }
      }
      return Subspace::support(omega);
    }
    default: {
      const Index p = 1 + static_cast<Index>(rng.uniform() * 4.0);
      return Subspace::span(gen_random_qperp(m, n, std::min<Index>(p, 4), s));
    }
  }
}

struct SmallDraw {
  Index m, n;
  std::vector<Subspace> parts;
};

SmallDraw draw_small(std::uint64_t seed, int count) {
  Rng rng(seed, 0x1e77a);
  SmallDraw d;
  d.m = 6 + static_cast<Index>(rng.uniform() * 5.0);
  d.n = 6 + static_cast<Index>(rng.uniform() * 5.0);
  SupportSet taken(d.m, d.n);
  for (int k = 0; k < count; ++k) {
    const int kind = static_cast<int>(rng.uniform() * 3.0);
    d.parts.push_back(small_subspace(std::min(kind, 2), d.m, d.n, rng, taken));
  }
  return d;
}

// Retries with derived seeds when a draw is degenerate (the inequality's
// hypotheses fail), so each trial tests a valid configuration.
template <typename F>
LemmaTrial with_valid_draw(std::uint64_t seed, int count, F&& body) {
  for (std::uint64_t attempt = 0;; ++attempt) {
    const std::uint64_t s = attempt == 0 ? seed : mix_seed(seed, 0xd6a, attempt);
    try {
      return body(draw_small(s, count), s);
    } catch (const DegenerateSum&) {
      if (attempt >= 50) throw;
    }
  }
}

LemmaTrial two_subspace_trial(std::uint64_t seed) {
  return with_valid_draw(seed, 2, [](const SmallDraw& d, std::uint64_t s) {
    const Subspace& s1 = d.parts[0];
    const Subspace& s2 = d.parts[1];
    const double alpha = op_norm_product(s1, s2).value;
    const Subspace sum = Subspace::direct_sum(s1, s2);
    Rng rng(s, 0x7);
    const Matrix x = gaussian(d.m, d.n, rng);
    LemmaTrial t;
    t.seed = s;
    t.lhs = sum.apply(x).squaredNorm();
    t.rhs = (s1.apply(x).squaredNorm() + s2.apply(x).squaredNorm()) / (1.0 - alpha);
    t.pass = t.lhs <= t.rhs * (1.0 + kRoundoff) + kRoundoff;
    return t;
  });
}

LemmaTrial three_subspace_trial(std::uint64_t seed) {
  return with_valid_draw(seed, 3, [](const SmallDraw& d, std::uint64_t s) {
    const Subspace& s1 = d.parts[0];
    const Subspace& s2 = d.parts[1];
    const Subspace& s3 = d.parts[2];
    const Subspace sum = Subspace::direct_sum(s1, s2);
    // Independence of all three: (S1 + S2) + S3 must itself be a direct sum.
    Subspace::direct_sum(sum, s3);
    const double a12 = op_norm_product(s1, s2).value;
    const double a23 = op_norm_product(s2, s3).value;
    const double a31 = op_norm_product(s3, s1).value;
    LemmaTrial t;
    t.seed = s;
    t.lhs = op_norm_product(sum, s3, {.method = OpNormMethod::dense}).value;
    t.rhs = std::sqrt((a23 * a23 + a31 * a31) / (1.0 - a12));
    t.pass = t.lhs <= t.rhs * (1.0 + kRoundoff) + kRoundoff;
    return t;
  });
}

struct CheckDef {
  const char* inequality;
  bool deterministic;
  std::function<LemmaTrial(const LemmaSetup&, std::uint64_t)> trial;
};

LemmaTrial make(std::uint64_t seed, double lhs, double rhs, bool strict) {
  return {seed, lhs, rhs, strict ? lhs < rhs : lhs <= rhs * (1.0 + kRoundoff)};
}

const std::map<std::string, CheckDef>& definitions() {
  static const std::map<std::string, CheckDef> table = {
      {"qperp_entry_energy",
       {"max_ij ||P_Qperp e_i e_j^T||_F <= 4 sqrt(p log(mnp)/(mn))", false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const SpanBasis q = gen_random_qperp(u.m, u.n, u.p, s);
          const double lhs = std::sqrt(projector_diagonal(Subspace::span(q)).maxCoeff());
          const double mn = static_cast<double>(u.m * u.n);
          return make(s, lhs, 4.0 * std::sqrt(u.p * std::log(mn * u.p) / mn), false);
        }}},
      {"qperp_tangent_overlap",
       {"||P_Qperp P_T|| <= 8 (sqrt(p) + sqrt((m+n) r)) / sqrt(mn)", false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const TangentSpace t = gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T;
          const SpanBasis q = gen_random_qperp(u.m, u.n, u.p, mix_seed(s, 2));
          const double lhs = op_norm_product(Subspace::span(q), Subspace::tangent(t)).value;
          const double rhs = 8.0 * (std::sqrt(double(u.p)) + std::sqrt(double((u.m + u.n) * u.r))) /
                             std::sqrt(double(u.m * u.n));
          return make(s, lhs, rhs, false);
        }}},
      {"support_tangent_overlap",
       {"||P_Omega P_T||^2 <= rho + eps, eps = rho", false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const TangentSpace t = gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T;
          const SupportSet omega = bernoulli_support(u.m, u.n, u.rho, mix_seed(s, 2));
          const double a =
              op_norm_product(Subspace::support(omega), Subspace::tangent(t)).value;
          return make(s, a * a, 2.0 * u.rho, false);
        }}},
      {"two_subspace_sum",
       {"||P_{S1+S2} X||_F^2 <= (||P_S1 X||_F^2 + ||P_S2 X||_F^2) / (1 - ||P_S1 P_S2||)", true,
        [](const LemmaSetup&, std::uint64_t s) { return two_subspace_trial(s); }}},
      {"three_subspace_sum",
       {"||P_{S1+S2} P_S3|| <= sqrt((a23^2 + a31^2) / (1 - a12))", true,
        [](const LemmaSetup&, std::uint64_t s) { return three_subspace_trial(s); }}},
      {"gamma_perp_constrained",
       {"max_ij ||P_Gperp e_i e_j^T||_F^2 <= 4 (8p log(mnp)/(mn) + mu r / n)", false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const TangentSpace t = gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T;
          const SpanBasis q = gen_random_qperp(u.m, u.n, u.p, mix_seed(s, 2));
          const double lhs = GammaPerp(t, q).diagonal().maxCoeff();
          const double mn = static_cast<double>(u.m * u.n);
          const double rhs = 4.0 * (8.0 * u.p * std::log(mn * u.p) / mn +
                                    coherence_mu(t) * u.r / static_cast<double>(u.n));
          return make(s, lhs, rhs, false);
        }}},
      {"gamma_contraction",
       {"||P_Gperp - s^-1 P_Gperp P_Omega P_Gperp|| < 1, Omega ~ Ber(s)", false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const GammaPerp g(gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T,
                            gen_random_qperp(u.m, u.n, u.p, mix_seed(s, 2)));
          const SupportSet omega = bernoulli_support(u.m, u.n, u.sample_rho, mix_seed(s, 3));
          const double inv = 1.0 / u.sample_rho;
          const auto op = [&](const Matrix& x) -> Matrix {
            const Matrix px = g.apply(x);
            return px - inv * g.apply(omega.apply(px));
          };
          const double lhs = symmetric_op_norm(op, full_space(u.m, u.n)).value;
          return make(s, lhs, 1.0, true);
        }}},
      {"inf_contraction",
       {"||Z - s^-1 P_Gperp P_Omega Z||_inf < ||Z||_inf for Z = UV^T", false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const TangentSpace t = gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T;
          const GammaPerp g(t, gen_random_qperp(u.m, u.n, u.p, mix_seed(s, 2)));
          const SupportSet omega = bernoulli_support(u.m, u.n, u.sample_rho, mix_seed(s, 3));
          const Matrix z = t.uv();
          const Matrix dz = z - g.apply(omega.apply(z)) / u.sample_rho;
          return make(s, linf_norm(dz) / linf_norm(z), 1.0, true);
        }}},
      {"spectral_deviation",
       {"C = ||Z - s^-1 P_Omega Z|| / (sqrt(m log m / s) ||Z||_inf) <= s n / log m, Z = UV^T",
        false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const TangentSpace t = gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T;
          const SupportSet omega = bernoulli_support(u.m, u.n, u.sample_rho, mix_seed(s, 3));
          const Matrix z = t.uv();
          const double logm = std::log(static_cast<double>(u.m));
          const double c = spectral_norm(z - omega.apply(z) / u.sample_rho) /
                           (std::sqrt(u.m * logm / u.sample_rho) * linf_norm(z));
          return make(s, c, u.sample_rho * u.n / logm, false);
        }}},
      {"nu_entry_energy",
       {"max_ij ||P_Qperp e_i e_j^T||_F^2 <= nu p / n, nu-coherent Q^perp", true,
        [](const LemmaSetup& u, std::uint64_t s) {
          const SpanBasis q = gen_nu_coherent_qperp(u.m, u.n, u.p, s);
          const double lhs = projector_diagonal(Subspace::span(q)).maxCoeff();
          return make(s, lhs, nu_coherence(q) * u.p / static_cast<double>(u.n), false);
        }}},
      {"nu_tangent_overlap",
       {"||P_Qperp P_T||^2 <= 2 nu p r / n, nu-coherent Q^perp", true,
        [](const LemmaSetup& u, std::uint64_t s) {
          const SpanBasis q = gen_nu_coherent_qperp(u.m, u.n, u.p, s);
          const TangentSpace t = gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T;
          const double a = op_norm_product(Subspace::span(q), Subspace::tangent(t)).value;
          return make(s, a * a, 2.0 * nu_coherence(q) * u.p * u.r / static_cast<double>(u.n),
                      false);
        }}},
      {"nu_uv_energy",
       {"||P_Qperp UV^T||_F^2 <= 2 nu p r^2 / n, nu-coherent Q^perp", true,
        [](const LemmaSetup& u, std::uint64_t s) {
          const SpanBasis q = gen_nu_coherent_qperp(u.m, u.n, u.p, s);
          const TangentSpace t = gen_low_rank(u.m, u.n, u.r, mix_seed(s, 1)).T;
          const double lhs = q.apply(t.uv()).squaredNorm();
          return make(s, lhs,
                      2.0 * nu_coherence(q) * u.p * u.r * u.r / static_cast<double>(u.n), false);
        }}},
      {"qperp_support_overlap",
       {"||P_Qperp P_Omega|| < 1/2, nu-coherent Q^perp", false,
        [](const LemmaSetup& u, std::uint64_t s) {
          const SpanBasis q = gen_nu_coherent_qperp(u.m, u.n, u.p, s);
          const SupportSet omega = bernoulli_support(u.m, u.n, u.rho, mix_seed(s, 2));
          const double lhs = op_norm_product(Subspace::span(q), Subspace::support(omega)).value;
          return make(s, lhs, 0.5, true);
        }}},
  };
  return table;
}

}  // namespace

void LemmaSetup::validate() const {
  if (m < 2 || n < 2) throw std::invalid_argument("lemmas: m and n must be >= 2");
  if (r < 1 || r > std::min(m, n)) throw std::invalid_argument("lemmas: r out of range");
  if (p < 1 || p > n || p >= m * n) throw std::invalid_argument("lemmas: p out of range");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("lemmas: rho must lie in (0, 1)");
  if (!(sample_rho > 0.0 && sample_rho <= 1.0)) {
    throw std::invalid_argument("lemmas: sample_rho must lie in (0, 1]");
  }
  if (seeds < 1 || trials < 1) throw std::invalid_argument("lemmas: seeds and trials >= 1");
  if (!(majority > 0.0 && majority <= 1.0)) {
    throw std::invalid_argument("lemmas: majority must lie in (0, 1]");
  }
}

double LemmaCheck::pass_fraction() const {
  if (trials.empty()) return 0.0;
  const auto passed = std::count_if(trials.begin(), trials.end(),
                                    [](const LemmaTrial& t) { return t.pass; });
  return static_cast<double>(passed) / static_cast<double>(trials.size());
}

bool LemmaCheck::verdict(double majority) const {
  return deterministic ? pass_fraction() == 1.0 : pass_fraction() >= majority;
}

const std::vector<std::string>& lemma_check_names() {
  static const std::vector<std::string> names = {
      "qperp_entry_energy",  "qperp_tangent_overlap", "support_tangent_overlap",
      "two_subspace_sum",    "three_subspace_sum",    "gamma_perp_constrained",
      "gamma_contraction",   "inf_contraction",       "spectral_deviation",
      "nu_entry_energy",     "nu_tangent_overlap",    "nu_uv_energy",
      "qperp_support_overlap"};
  return names;
}

LemmaCheck run_check(const std::string& name, const LemmaSetup& setup, int threads) {
  setup.validate();
  const auto it = definitions().find(name);
  if (it == definitions().end()) throw std::invalid_argument("unknown lemma check '" + name + "'");
  const CheckDef& def = it->second;
  const auto& names = lemma_check_names();
  const auto index = static_cast<std::uint64_t>(
      std::find(names.begin(), names.end(), name) - names.begin());

  LemmaCheck check;
  check.name = name;
  check.inequality = def.inequality;
  check.deterministic = def.deterministic;
  // Deterministic small-scale inequalities get many trials; everything else
  // one trial per seed at the configured size.
  const bool small = name == "two_subspace_sum" || name == "three_subspace_sum";
  const int count = small ? setup.trials : setup.seeds;
  check.trials.resize(static_cast<std::size_t>(count));
  parallel_for(check.trials.size(), threads, [&](std::size_t k) {
    check.trials[k] = def.trial(setup, mix_seed(setup.seed, index, k));
  });
  return check;
}

std::string lemma_report_json(const std::vector<LemmaCheck>& checks, const LemmaSetup& setup) {
  nlohmann::json j;
  j["setup"] = {{"m", setup.m},           {"n", setup.n},
                {"r", setup.r},           {"p", setup.p},
                {"rho", setup.rho},       {"sample_rho", setup.sample_rho},
                {"seeds", setup.seeds},   {"trials", setup.trials},
                {"majority", setup.majority}, {"seed", setup.seed}};
  bool all = true;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json cj;
    cj["name"] = c.name;
    cj["inequality"] = c.inequality;
    cj["mode"] = c.deterministic ? "every_trial" : "majority";
    cj["pass_fraction"] = c.pass_fraction();
    cj["verdict"] = c.verdict(setup.majority);
    all = all && c.verdict(setup.majority);
    cj["trials"] = nlohmann::json::array();
    for (const auto& t : c.trials) {
      cj["trials"].push_back({{"seed", t.seed}, {"lhs", t.lhs}, {"rhs", t.rhs}, {"pass", t.pass}});
    }
    j["checks"].push_back(cj);
  }
  j["all_pass"] = all;
  return dump_json(j) + "\n";
}

}  // namespace cpcp
