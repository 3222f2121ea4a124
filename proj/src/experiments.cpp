#include "cpcp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cpcp/errors.hpp"
#include "cpcp/json_out.hpp"
#include "cpcp/parallel.hpp"
#include "cpcp/rng.hpp"

namespace cpcp {

namespace {

std::vector<Index> index_list(const Config& c, const char* key) {
  std::vector<Index> out;
  for (auto v : c.integers(key)) out.push_back(static_cast<Index>(v));
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

SolverOptions solver_options(const Config& c) {
  SolverOptions o;
  o.lambda = c.optional_real("lambda");
  o.penalty_mu0 = c.optional_real("solver.mu0");
  o.penalty_growth = c.real("solver.growth");
  o.penalty_cap_factor = c.real("solver.cap_factor");
  o.tol_primal = c.real("solver.tol");
  o.tol_change = c.real("solver.tol_change");
  o.max_iters = static_cast<int>(c.integer("solver.max_iters"));
  o.record_trace = c.flag("solver.trace");
  try {
    o.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return o;
}

LemmaSetup lemma_setup(const Config& c) {
  LemmaSetup s;
  auto first = [&](const char* key) {
    const auto v = c.integers(key);
    if (v.empty()) throw ConfigError(std::string("config key '") + key + "' is empty");
    return static_cast<Index>(v.front());
  };
  s.m = first("m");
  s.n = first("n");
  s.r = first("r");
  s.p = first("p");
  const auto rho = c.reals("rho");
  if (rho.empty()) throw ConfigError("config key 'rho' is empty");
  s.rho = rho.front();
  s.sample_rho = c.real("lemmas.sample_rho");
  s.seeds = static_cast<int>(c.integer("lemmas.seeds"));
  s.trials = static_cast<int>(c.integer("lemmas.trials"));
  s.majority = c.real("lemmas.majority");
  s.seed = c.u64("seed");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

ExperimentConfig ExperimentConfig::from(const Config& c) {
  ExperimentConfig e;
  e.m = index_list(c, "m");
  e.n = index_list(c, "n");
  e.r = index_list(c, "r");
  e.p = index_list(c, "p");
  e.rho = c.reals("rho");
  e.trials = static_cast<int>(c.integer("trials"));
  e.seed = c.u64("seed");
  e.threshold = c.real("threshold");
  try {
    e.qmodel = parse_qmodel(c.str("qmodel"));
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  e.magnitude = c.optional_real("magnitude");
  e.solver = solver_options(c);
  e.threads = static_cast<int>(c.integer("threads"));
  e.out = c.str("out");
  e.validate();
  return e;
}

void ExperimentConfig::validate() const {
  if (m.empty() || n.empty() || r.empty() || rho.empty() || p.empty()) {
    throw ConfigError("grid must be nonempty in m, n, r, rho and p");
  }
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  for (const auto& cell : cells()) {
    try {
      params(cell).validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
}

std::vector<GridCell> ExperimentConfig::cells() const {
  std::vector<GridCell> out;
  for (Index mm : m)
    for (Index nn : n)
      for (Index rr : r)
        for (double rh : rho)
          for (Index pp : p) out.push_back({mm, nn, rr, rh, pp});
  return out;
}

GenParams ExperimentConfig::params(const GridCell& cell) const {
  GenParams g;
  g.m = cell.m;
  g.n = cell.n;
  g.r = cell.r;
  g.rho = cell.rho;
  g.p = cell.p;
  g.magnitude = magnitude;
  g.qmodel = qmodel;
  return g;
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t cell, std::size_t trial) {
  return mix_seed(base, cell, trial);
}

double relative_error(const Matrix& x, const Matrix& x0) {
  const double d = (x - x0).norm();
  const double ref = x0.norm();
  return ref > 0.0 ? d / ref : d;
}

std::vector<BundleEntry> run_generate(const ExperimentConfig& cfg) {
  const auto cells = cfg.cells();
  std::vector<BundleEntry> entries;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t t = 0; t < static_cast<std::size_t>(cfg.trials); ++t) {
      char name[64];
      std::snprintf(name, sizeof name, "cell%03zu_trial%03zu", c, t);
      entries.push_back({std::filesystem::path("bundles") / name, c, t,
                         trial_seed(cfg.seed, c, t)});
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(cfg.out / "bundles", ec);
  if (ec) throw IoError("cannot create " + (cfg.out / "bundles").string() + ": " + ec.message());
  parallel_for(entries.size(), cfg.threads, [&](std::size_t k) {
    const BundleEntry& e = entries[k];
    const ProblemInstance inst = assemble(cfg.params(cells[e.cell]), e.seed);
    write_bundle(cfg.out / e.path, inst);
  });

  nlohmann::json manifest;
  manifest["count"] = entries.size();
  manifest["bundles"] = nlohmann::json::array();
  for (const auto& e : entries) {
    const GridCell& cell = cells[e.cell];
    manifest["bundles"].push_back({{"path", e.path.generic_string()},
                                   {"cell", e.cell},
                                   {"trial", e.trial},
                                   {"seed", e.seed},
                                   {"m", cell.m},
                                   {"n", cell.n},
                                   {"r", cell.r},
                                   {"rho", cell.rho},
                                   {"p", cell.p}});
  }
  std::ofstream out(cfg.out / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (cfg.out / "manifest.json").string());
  out << dump_json(manifest) << '\n';
  return entries;
}

SolveReport solve_instance(const ProblemInstance& inst, const SolverOptions& opts) {
  SolveReport rep;
  const auto start = std::chrono::steady_clock::now();
  rep.result = inst.qperp.size() == 0 ? solve_pcp(inst.D, opts)
                                      : solve_cpcp(inst.D, inst.qperp, opts);
  rep.wall_ms = elapsed_ms(start);
  rep.has_truth = inst.L0.rows() == inst.D.rows() && inst.L0.cols() == inst.D.cols() &&
                  inst.S0.rows() == inst.D.rows() && inst.S0.cols() == inst.D.cols();
  if (rep.has_truth) {
    rep.rel_err_L = relative_error(rep.result.L_hat, inst.L0);
    rep.rel_err_S = relative_error(rep.result.S_hat, inst.S0);
  }
  return rep;
}

std::string SolveReport::to_json() const {
  nlohmann::json j;
  j["path"] = result.pcp ? "pcp" : "cpcp";
  j["status"] = to_string(result.status);
  j["iters"] = result.iters;
  j["objective"] = result.objective;
  j["primal_residual"] = result.primal_residual;
  j["lambda"] = result.lambda;
  j["wall_ms"] = wall_ms;
  if (has_truth) {
    j["rel_err_L"] = rel_err_L;
    j["rel_err_S"] = rel_err_S;
  }
  return dump_json(j) + "\n";
}

std::string trace_csv(const SolverResult& res) {
  std::string out = "iter,primal_residual,objective\n";
  for (const auto& t : res.trace) {
    out += std::to_string(t.iter) + "," + fmt17(t.primal_residual) + "," + fmt17(t.objective) +
           "\n";
  }
  return out;
}

std::vector<GridRow> run_phase_grid(const ExperimentConfig& cfg) {
  const auto cells = cfg.cells();
  const auto trials = static_cast<std::size_t>(cfg.trials);

  struct Outcome {
    bool ok = false;
    std::string error;
    double rel_L = 0.0, rel_S = 0.0, iters = 0.0, ms = 0.0;
  };
  std::vector<Outcome> outcomes(cells.size() * trials);
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t k) {
    const std::size_t c = k / trials, t = k % trials;
    Outcome& o = outcomes[k];
    const auto start = std::chrono::steady_clock::now();
    try {
      const ProblemInstance inst = assemble(cfg.params(cells[c]), trial_seed(cfg.seed, c, t));
      const SolveReport rep = solve_instance(inst, cfg.solver);
      o.ok = true;
      o.rel_L = rep.rel_err_L;
      o.rel_S = rep.rel_err_S;
      o.iters = rep.result.iters;
    } catch (const std::exception& e) {
      o.error = "trial " + std::to_string(t) + ": " + e.what();
    }
    o.ms = elapsed_ms(start);
  });

  std::vector<GridRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    GridRow row;
    row.cell = cells[c];
    row.trials = cfg.trials;
    std::vector<double> el, es, it;
    for (std::size_t t = 0; t < trials; ++t) {
      const Outcome& o = outcomes[c * trials + t];
      row.wall_ms += o.ms;
      if (!o.ok) {
        row.errors.push_back(o.error);
        continue;
      }
      el.push_back(o.rel_L);
      es.push_back(o.rel_S);
      it.push_back(o.iters);
      if (o.rel_L <= cfg.threshold) ++row.successes;
    }
    row.med_rel_err_L = median(el);
    row.med_rel_err_S = median(es);
    row.med_iters = median(it);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string grid_csv(const std::vector<GridRow>& rows) {
  std::ostringstream out;
  out << "m,n,r,rho,p,trials,successes,med_rel_err_L,med_rel_err_S,med_iters,wall_ms\n";
  for (const auto& row : rows) {
    out << row.cell.m << ',' << row.cell.n << ',' << row.cell.r << ',' << fmt17(row.cell.rho)
        << ',' << row.cell.p << ',' << row.trials << ',' << row.successes << ','
        << fmt17(row.med_rel_err_L) << ',' << fmt17(row.med_rel_err_S) << ','
        << fmt17(row.med_iters) << ',' << fmt17(row.wall_ms) << '\n';
  }
  return out.str();
}

}  // namespace cpcp
