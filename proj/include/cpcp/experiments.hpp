#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpcp/config.hpp"
#include "cpcp/instance.hpp"
#include "cpcp/lemmas.hpp"
#include "cpcp/solver.hpp"

namespace cpcp {

struct GridCell {
  Index m = 0, n = 0, r = 0;
  double rho = 0.0;
  Index p = 0;
};

struct ExperimentConfig {
  std::vector<Index> m, n, r, p;
  std::vector<double> rho;
  int trials = 1;
  std::uint64_t seed = 0;
  double threshold = 1e-3;
  QModel qmodel = QModel::random;
  std::optional<double> magnitude;
  SolverOptions solver;
  int threads = 0;
  std::filesystem::path out;

  // Throws ConfigError on invalid values.
  static ExperimentConfig from(const Config& c);
  void validate() const;

  // Cartesian product with m outermost and p innermost.
  std::vector<GridCell> cells() const;
  GenParams params(const GridCell& cell) const;
};

SolverOptions solver_options(const Config& c);
LemmaSetup lemma_setup(const Config& c);

// Seed of trial t in cell c.
std::uint64_t trial_seed(std::uint64_t base, std::size_t cell, std::size_t trial);

// ||X - X0||_F / ||X0||_F, or ||X||_F when X0 = 0.
double relative_error(const Matrix& x, const Matrix& x0);

struct BundleEntry {
  std::filesystem::path path;  // relative to the output directory
  std::size_t cell = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
};

// One bundle per (cell, trial) under out/bundles, plus out/manifest.json.
std::vector<BundleEntry> run_generate(const ExperimentConfig& cfg);

struct SolveReport {
  SolverResult result;
  double rel_err_L = 0.0;
  double rel_err_S = 0.0;
  bool has_truth = false;
  double wall_ms = 0.0;

  std::string to_json() const;
};

// Routes p = 0 through solve_pcp. Ground truth is compared when the instance
// carries L0 and S0 of the right shape.
SolveReport solve_instance(const ProblemInstance& inst, const SolverOptions& opts);

// iter,primal_residual,objective
std::string trace_csv(const SolverResult& res);

struct GridRow {
  GridCell cell;
  int trials = 0;
  int successes = 0;
  double med_rel_err_L = 0.0;
  double med_rel_err_S = 0.0;
  double med_iters = 0.0;
  double wall_ms = 0.0;
  std::vector<std::string> errors;  // trials that raised instead of solving
};

// Trials run concurrently; rows come back in cell order regardless of
// scheduling.
std::vector<GridRow> run_phase_grid(const ExperimentConfig& cfg);

// m,n,r,rho,p,trials,successes,med_rel_err_L,med_rel_err_S,med_iters,wall_ms
std::string grid_csv(const std::vector<GridRow>& rows);

}  // namespace cpcp
