#include "cpcp/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "cpcp/errors.hpp"

namespace cpcp {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return v;
}

bool is_known(const std::string& key) {
  const auto& schema = config_schema();
  return std::any_of(schema.begin(), schema.end(),
                     [&](const ConfigKey& k) { return key == k.name; });
}

}  // namespace

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"seed", "0", "base seed; per-cell and per-trial seeds are derived from it"},
      {"threads", "0", "worker threads; 0 uses the hardware concurrency"},
      {"out", "cpcp-out", "output directory"},
      {"m", "100", "rows (list for grids)"},
      {"n", "100", "columns (list for grids)"},
      {"r", "3", "rank of L0 (list for grids)"},
      {"rho", "0.05", "Bernoulli support probability of S0 (list for grids)"},
      {"p", "5", "dimension of Q^perp (list for grids)"},
      {"qmodel", "random", "Q^perp model: random, nu_coherent_smooth or from_jacobians"},
      {"magnitude", "auto", "nonzero magnitude of S0; auto = 10 x mean |L0_ij|"},
      {"trials", "1", "trials per grid cell"},
      {"threshold", "1e-3", "success threshold on ||L - L0||_F / ||L0||_F"},
      {"bundle", "", "instance bundle directory read by solve and certify"},
      {"lambda", "auto", "sparsity weight; auto = 1/sqrt(m)"},
      {"solver.mu0", "auto", "initial penalty; auto = 1.25 / ||P_Q D||"},
      {"solver.growth", "1.5", "penalty growth factor per iteration"},
      {"solver.cap_factor", "100", "penalty cap as a multiple of the initial penalty"},
      {"solver.tol", "1e-7", "relative primal residual tolerance"},
      {"solver.tol_change", "1e-7", "relative iterate change tolerance"},
      {"solver.max_iters", "1000", "iteration limit"},
      {"solver.trace", "false", "write trace.csv from solve"},
      {"certify.tol", "1e-10", "truncation tolerance of the W^S and W^Q series"},
      {"certify.schedule_seed", "0", "seed of the retro-fitted golfing batches"},
      {"lemmas", "all", "checks run by validate-lemmas (comma list or all)"},
      {"lemmas.seeds", "20", "seeds per probabilistic check"},
      {"lemmas.trials", "200", "trials per deterministic inequality"},
      {"lemmas.majority", "0.8", "pass fraction required of probabilistic checks"},
      {"lemmas.sample_rho", "0.3", "sampling rate used by the contraction checks"},
  };
  return schema;
}

Config::Config() {
  for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  Config c;
  c.parse(in, path.string());
  return c;
}

void Config::parse(std::istream& in, const std::string& origin) {
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    try {
      set(key, trim(std::string_view(line).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = trim(value);
}

void Config::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  set(trim(std::string_view(assignment).substr(0, eq)),
      std::string(assignment.substr(eq + 1)));
}

const std::string& Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::real(const std::string& key) const { return parse_number<double>(key, raw(key)); }

std::int64_t Config::integer(const std::string& key) const {
  return parse_number<std::int64_t>(key, raw(key));
}

std::uint64_t Config::u64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, raw(key));
}

bool Config::flag(const std::string& key) const {
  const std::string& v = raw(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

std::optional<double> Config::optional_real(const std::string& key) const {
  const std::string& v = raw(key);
  if (v.empty() || v == "auto") return std::nullopt;
  return parse_number<double>(key, v);
}

std::vector<double> Config::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(raw(key))) out.push_back(parse_number<double>(key, item));
  return out;
}

std::vector<std::int64_t> Config::integers(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(raw(key))) {
    out.push_back(parse_number<std::int64_t>(key, item));
  }
  return out;
}

std::vector<std::string> Config::strings(const std::string& key) const {
  return split_list(raw(key));
}

std::string Config::snapshot() const {
  std::ostringstream out;
  out << "# resolved configuration\n";
  for (const auto& k : config_schema()) out << k.name << " = " << raw(k.name) << '\n';
  return out.str();
}

void Config::write_snapshot(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << snapshot();
}

}  // namespace cpcp
