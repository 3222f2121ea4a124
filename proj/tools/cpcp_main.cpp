// cpcp: generate instances, solve, certify, run phase grids and lemma checks.
//
// Exit codes: 0 success, 1 I/O or configuration error, 2 premise or
// validation failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cpcp/certificate.hpp"
#include "cpcp/config.hpp"
#include "cpcp/errors.hpp"
#include "cpcp/experiments.hpp"
#include "cpcp/io.hpp"
#include "cpcp/json_out.hpp"
#include "cpcp/lemmas.hpp"

namespace fs = std::filesystem;
using namespace cpcp;

namespace {

constexpr int kOk = 0;
constexpr int kIoOrConfig = 1;
constexpr int kValidation = 2;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::vector<std::string> overrides;
  std::string bundle;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "flat key = value configuration file");
  cmd->add_option("--seed", a.seed, "base seed (overrides config key seed)");
  cmd->add_option("--out", a.out, "output directory (overrides config key out)");
  cmd->add_option("--threads", a.threads, "worker threads, 0 = hardware concurrency");
  cmd->add_option("--set", a.overrides, "override a config key, key=value (repeatable)");
}

Config resolve(const CommonArgs& a) {
  Config c = a.config.empty() ? Config() : Config::from_file(a.config);
  for (const auto& o : a.overrides) c.set_assignment(o);
  if (a.seed) c.set("seed", std::to_string(*a.seed));
  if (a.out) c.set("out", *a.out);
  if (a.threads) c.set("threads", std::to_string(*a.threads));
  if (!a.bundle.empty()) c.set("bundle", a.bundle);
  return c;
}

fs::path prepare_out(const Config& c) {
  const fs::path out = c.str("out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  c.write_snapshot(out / "config.resolved");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

ProblemInstance load_bundle(const Config& c) {
  const std::string dir = c.str("bundle");
  if (dir.empty()) throw ConfigError("no bundle given (positional argument or bundle = ...)");
  return read_bundle(dir);
}

int cmd_generate(const Config& c) {
  ExperimentConfig cfg = ExperimentConfig::from(c);
  cfg.out = prepare_out(c);
  const auto entries = run_generate(cfg);
  std::cout << "wrote " << entries.size() << " bundle(s) and manifest.json to "
            << cfg.out.string() << '\n';
  return kOk;
}

int cmd_solve(const Config& c) {
  const SolverOptions opts = solver_options(c);
  const ProblemInstance inst = load_bundle(c);
  const fs::path out = prepare_out(c);
  const SolveReport rep = solve_instance(inst, opts);
  write_text(out / "solve.json", rep.to_json());
  write_dmat(out / "L_hat.dmat", rep.result.L_hat);
  write_dmat(out / "S_hat.dmat", rep.result.S_hat);
  if (opts.record_trace) write_text(out / "trace.csv", trace_csv(rep.result));
  std::cout << rep.to_json();
  return kOk;
}

int cmd_certify(const Config& c) {
  const ProblemInstance inst = load_bundle(c);
  const fs::path out = prepare_out(c);
  CertifyOptions opts;
  opts.lambda = c.optional_real("lambda");
  opts.tol = c.real("certify.tol");
  opts.schedule_seed = c.u64("certify.schedule_seed");
  const PremiseReport premises = check_premises(inst.T, inst.omega, inst.qperp);
  write_text(out / "premises.json", premises.to_json());
  try {
    const CertificateReport rep = certify(inst, opts);
    write_text(out / "certificate.json", rep.to_json());
    write_dmat(out / "W.dmat", rep.W);
    std::cout << rep.to_json();
    return rep.verdict ? kOk : kValidation;
  } catch (const PremiseViolation& e) {
    nlohmann::json j;
    j["verdict"] = false;
    j["premise_violation"] = {{"premise", e.premise()},
                              {"measured", e.measured()},
                              {"bound", e.bound()}};
    const std::string text = dump_json(j) + "\n";
    write_text(out / "certificate.json", text);
    std::cout << text;
    return kValidation;
  }
}

int cmd_phase_grid(const Config& c) {
  ExperimentConfig cfg = ExperimentConfig::from(c);
  cfg.out = prepare_out(c);
  const auto rows = run_phase_grid(cfg);
  write_text(cfg.out / "grid.csv", grid_csv(rows));
  nlohmann::json errors = nlohmann::json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (const auto& e : rows[k].errors) errors.push_back({{"cell", k}, {"error", e}});
  }
  write_text(cfg.out / "grid_errors.json", dump_json(errors) + "\n");
  std::cout << grid_csv(rows);
  return kOk;
}

int cmd_validate_lemmas(const Config& c) {
  const LemmaSetup setup = lemma_setup(c);
  std::vector<std::string> names = c.strings("lemmas");
  if (names.size() == 1 && names[0] == "all") names = lemma_check_names();
  const int threads = static_cast<int>(c.integer("threads"));
  const fs::path out = prepare_out(c);
  std::vector<LemmaCheck> checks;
  for (const auto& name : names) {
    try {
      checks.push_back(run_check(name, setup, threads));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    const auto& ch = checks.back();
    std::cout << (ch.verdict(setup.majority) ? "PASS " : "FAIL ") << ch.name << "  "
              << ch.pass_fraction() << '\n';
  }
  write_text(out / "lemmas.json", lemma_report_json(checks, setup));
  bool all = true;
  for (const auto& ch : checks) all = all && ch.verdict(setup.majority);
  return all ? kOk : kValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressive principal component pursuit: instances, solver, certificates"};
  app.require_subcommand(1);

  CommonArgs args;
  auto* gen = app.add_subcommand("generate", "write instance bundles and a manifest");
  auto* solve = app.add_subcommand("solve", "solve a bundle, report errors against ground truth");
  auto* cert = app.add_subcommand("certify", "build and verify the dual certificate of a bundle");
  auto* grid = app.add_subcommand("phase-grid", "recovery success over a parameter grid");
  auto* lem = app.add_subcommand("validate-lemmas", "empirical checks of the supporting bounds");
  auto* keys = app.add_subcommand("config-keys", "list every configuration key with its default");
  for (auto* cmd : {gen, solve, cert, grid, lem}) add_common(cmd, args);
  solve->add_option("bundle", args.bundle, "instance bundle directory");
  cert->add_option("bundle", args.bundle, "instance bundle directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kIoOrConfig;
  }

  if (keys->parsed()) {
    for (const ConfigKey& k : config_schema()) {
      std::printf("%-22s %-12s %s\n", k.name, k.default_value, k.doc);
    }
    return kOk;
  }

  try {
    const Config c = resolve(args);
    if (gen->parsed()) return cmd_generate(c);
    if (solve->parsed()) return cmd_solve(c);
    if (cert->parsed()) return cmd_certify(c);
    if (grid->parsed()) return cmd_phase_grid(c);
    return cmd_validate_lemmas(c);
  } catch (const PremiseViolation& e) {
    std::cerr << "premise violation: " << e.what() << '\n';
    return kValidation;
  } catch (const DegenerateSum& e) {
    std::cerr << "degenerate direct sum: " << e.what() << '\n';
    return kValidation;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kIoOrConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIoOrConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kIoOrConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoOrConfig;
  }
}
