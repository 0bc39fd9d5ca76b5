#include "oscillab/experiment.hpp"

#include "oscillab/estimates.hpp"
#include "oscillab/nls.hpp"
#include "oscillab/random_fields.hpp"
#include "oscillab/spectral_ops.hpp"

#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace oscillab {

using json = nlohmann::json;

const std::vector<ExperimentInfo>& experiment_catalog() {
  static const std::vector<ExperimentInfo> catalog{
      {ExperimentKind::identity_k1, "identity_k1", "quadrilinear identity residuals over eigenspace quadruples",
       "mu_sq_1,mu_sq_2,mu_sq_3,mu_sq_4,L0,rhs,residual"},
      {ExperimentKind::orthogonality, "orthogonality", "decay of |int e1 e2 e3 e4| as mu1 grows",
       "mu1_sq,lambda1,max_abs_L0"},
      {ExperimentKind::bilinear, "bilinear", "bilinear space-time ratio of two localized linear flows",
       "N,M,ratio,raw_norm"},
      {ExperimentKind::bilinear_derivative, "bilinear_derivative", "bilinear ratio with P(alpha), P(beta) applied",
       "N,M,word_a,word_b,ratio,raw_norm"},
      {ExperimentKind::bernstein, "bernstein", "||P(alpha) u_N|| / (N^ord ||u_N||) over localized fields",
       "word,N,ratio"},
      {ExperimentKind::energy_increment, "energy_increment", "max |E(I_N u(t)) - E(I_N u0)| over the local time",
       "N,delta,increment"},
      {ExperimentKind::norm_growth, "norm_growth", "running max of ||u(t)||_{H^s} and its growth exponent",
       "t,hs_norm,running_max"},
      {ExperimentKind::conservation, "conservation", "mass, energy and modified energy along the flow",
       "t,mass,energy,modified_energy,hs_norm_s"},
  };
  return catalog;
}

const ExperimentInfo& experiment_info(ExperimentKind kind) {
  for (const auto& e : experiment_catalog())
    if (e.kind == kind) return e;
  throw std::logic_error("unknown experiment kind");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

enum class KeyType { integer, unsigned_integer, real, string, int_list, string_list };

const std::map<std::string, KeyType>& key_types() {
  static const std::map<std::string, KeyType> types{
      {"experiment", KeyType::string},     {"seed", KeyType::unsigned_integer},
      {"d", KeyType::integer},             {"K", KeyType::integer},
      {"s", KeyType::real},                {"N_list", KeyType::int_list},
      {"M_list", KeyType::int_list},       {"dt", KeyType::real},
      {"T", KeyType::real},                {"trials", KeyType::integer},
      {"output_dir", KeyType::string},     {"N", KeyType::real},
      {"amplitude", KeyType::real},        {"decay", KeyType::real},
      {"max_level", KeyType::integer},     {"nonlinearity", KeyType::real},
      {"record_every", KeyType::integer},  {"scheme", KeyType::string},
      {"taint_threshold", KeyType::real},  {"C0", KeyType::real},
      {"partners", KeyType::int_list},     {"word_a", KeyType::string},
      {"word_b", KeyType::string},         {"words", KeyType::string_list},
      {"prune_tol", KeyType::real},
  };
  return types;
}

struct KeyRules {
  std::vector<std::string> required;
  std::vector<std::string> optional;
};

KeyRules rules_for(ExperimentKind k) {
  const std::vector<std::string> solver{"amplitude", "decay", "max_level", "nonlinearity", "record_every", "scheme",
                                        "taint_threshold"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  switch (k) {
    case ExperimentKind::identity_k1: return {{"d", "K"}, {"trials"}};
    case ExperimentKind::orthogonality: return {{"K"}, {"d", "partners", "C0", "trials"}};
    case ExperimentKind::bilinear: return {{"N_list", "M_list"}, {"d", "T", "trials", "prune_tol"}};
    case ExperimentKind::bilinear_derivative:
      return {{"N_list", "M_list", "word_a"}, {"word_b", "d", "T", "trials", "prune_tol"}};
    case ExperimentKind::bernstein: return {{"N_list"}, {"d", "words", "trials"}};
    case ExperimentKind::energy_increment: return {{"d", "K", "s", "N_list", "dt"}, solver};
    case ExperimentKind::norm_growth: return {{"d", "K", "s", "dt", "T"}, solver};
    case ExperimentKind::conservation: return {{"d", "K", "dt", "T"}, with({"s", "N"}, solver)};
  }
  return {};
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') || (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError(key, key + ": expected an integer, got \"" + text + "\"");
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw ConfigError(key, key + ": expected a finite number, got \"" + text + "\"");
  return v;
}

// key=value text -> JSON typed by the key table.
json kv_value(const std::string& key, KeyType type, const std::string& raw) {
  const std::string text = unquote(raw);
  auto split = [&] {
    std::vector<std::string> out;
    std::string t = text;
    if (t.size() >= 2 && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
    if (trim(t).empty()) return out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(unquote(trim(item)));
    return out;
  };
  switch (type) {
    case KeyType::integer: return parse_int(key, text);
    case KeyType::unsigned_integer: {
      if (!text.empty() && text[0] == '-') throw ConfigError(key, key + ": must be non-negative");
      std::uint64_t v = 0;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ConfigError(key, key + ": expected a non-negative integer, got \"" + text + "\"");
      return v;
    }
    case KeyType::real: return parse_real(key, text);
    case KeyType::string: return text;
    case KeyType::int_list: {
      json arr = json::array();
      for (const auto& item : split()) arr.push_back(parse_int(key, item));
      return arr;
    }
    case KeyType::string_list: {
      json arr = json::array();
      for (const auto& item : split()) arr.push_back(item);
      return arr;
    }
  }
  return {};
}

json parse_document(std::string_view text) {
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    json doc;
    try {
      doc = json::parse(t);
    } catch (const json::parse_error& e) {
      throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
    return doc;
  }
  json doc = json::object();
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string l = trim(line);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(l.substr(0, eq));
    const std::string value = trim(l.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty key");
    if (doc.contains(key)) throw ConfigError(key, key + ": given more than once");
    const auto it = key_types().find(key);
    if (it == key_types().end()) throw ConfigError(key, "unknown key \"" + key + "\"");
    doc[key] = kv_value(key, it->second, value);
  }
  return doc;
}

long long json_int(const std::string& key, const json& v) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  throw ConfigError(key, key + ": expected an integer");
}

double json_real(const std::string& key, const json& v) {
  if (!v.is_number()) throw ConfigError(key, key + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(key, key + ": expected a finite number");
  return d;
}

std::string json_string(const std::string& key, const json& v) {
  if (!v.is_string()) throw ConfigError(key, key + ": expected a string");
  return v.get<std::string>();
}

std::vector<long long> json_int_list(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError(key, key + ": expected a list");
  std::vector<long long> out;
  for (const auto& item : v) out.push_back(json_int(key, item));
  return out;
}

void range(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, key + ": " + what);
}

bool increasing(const std::vector<long long>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1]) return false;
  return true;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  const json doc = parse_document(text);
  ExperimentConfig cfg;
  cfg.source_text = std::string(text);

  if (!doc.contains("experiment")) throw ConfigError("experiment", "missing required key \"experiment\"");
  const std::string name = json_string("experiment", doc["experiment"]);
  bool found = false;
  for (const auto& e : experiment_catalog())
    if (name == e.name) {
      cfg.experiment = e.kind;
      found = true;
    }
  if (!found) throw ConfigError("experiment", "experiment: unknown experiment \"" + name + "\"");

  const KeyRules rules = rules_for(cfg.experiment);
  std::set<std::string> allowed{"experiment", "seed", "output_dir"};
  allowed.insert(rules.required.begin(), rules.required.end());
  allowed.insert(rules.optional.begin(), rules.optional.end());
  for (const auto& [key, value] : doc.items()) {
    if (!key_types().count(key)) throw ConfigError(key, "unknown key \"" + key + "\"");
    if (!allowed.count(key))
      throw ConfigError(key, key + ": not used by experiment \"" + name + "\"");
    cfg.given_keys.push_back(key);
  }
  std::vector<std::string> required = rules.required;
  required.push_back("seed");
  for (const auto& key : required)
    if (!doc.contains(key)) throw ConfigError(key, "missing required key \"" + key + "\"");

  // Experiment defaults; dependent ones are resolved below.
  switch (cfg.experiment) {
    case ExperimentKind::identity_k1: cfg.trials = 16; break;
    case ExperimentKind::orthogonality: cfg.d = 1; cfg.trials = 4; break;
    case ExperimentKind::bilinear:
    case ExperimentKind::bilinear_derivative: cfg.d = 2; cfg.T = 1.0; cfg.trials = 32; break;
    case ExperimentKind::bernstein: cfg.d = 1; cfg.trials = 16; break;
    case ExperimentKind::norm_growth: cfg.record_every = 10; break;
    case ExperimentKind::conservation: cfg.s = 1.5; cfg.record_every = 10; break;
    default: break;
  }

  for (const auto& [key, v] : doc.items()) {
    if (key == "seed") {
      if (v.is_number_unsigned()) cfg.seed = v.get<std::uint64_t>();
      else if (v.is_number_integer() && v.get<long long>() >= 0) cfg.seed = static_cast<std::uint64_t>(v.get<long long>());
      else throw ConfigError(key, "seed: expected a non-negative integer");
    } else if (key == "d") cfg.d = static_cast<int>(json_int(key, v));
    else if (key == "K") cfg.K = static_cast<int>(std::clamp<long long>(json_int(key, v), -1, 1 << 20));
    else if (key == "s") cfg.s = json_real(key, v);
    else if (key == "N_list") cfg.N_list = json_int_list(key, v);
    else if (key == "M_list") cfg.M_list = json_int_list(key, v);
    else if (key == "dt") cfg.dt = json_real(key, v);
    else if (key == "T") cfg.T = json_real(key, v);
    else if (key == "trials") cfg.trials = static_cast<int>(std::clamp<long long>(json_int(key, v), -1, 1 << 24));
    else if (key == "output_dir") cfg.output_dir = json_string(key, v);
    else if (key == "N") cfg.N = json_real(key, v);
    else if (key == "amplitude") cfg.amplitude = json_real(key, v);
    else if (key == "decay") cfg.decay = json_real(key, v);
    else if (key == "max_level") cfg.max_level = static_cast<int>(std::clamp<long long>(json_int(key, v), -1, 1 << 20));
    else if (key == "nonlinearity") cfg.nonlinearity = json_real(key, v);
    else if (key == "record_every") cfg.record_every = static_cast<int>(std::clamp<long long>(json_int(key, v), -1, 1 << 30));
    else if (key == "scheme") cfg.scheme = json_string(key, v);
    else if (key == "taint_threshold") cfg.taint_threshold = json_real(key, v);
    else if (key == "C0") cfg.C0 = json_real(key, v);
    else if (key == "partners") cfg.partners = json_int_list(key, v);
    else if (key == "word_a") cfg.word_a = json_string(key, v);
    else if (key == "word_b") cfg.word_b = json_string(key, v);
    else if (key == "words") {
      if (!v.is_array()) throw ConfigError(key, "words: expected a list");
      for (const auto& item : v) cfg.words.push_back(json_string(key, item));
    }
    else if (key == "prune_tol") cfg.prune_tol = json_real(key, v);
  }
  auto given = [&](const char* key) { return doc.contains(key); };

  range(cfg.d >= 1 && cfg.d <= kMaxDimension, "d", "must be 1, 2 or 3");
  range(cfg.K >= 1 && cfg.K + kLadderHeadroom <= kDefaultDegreeCap, "K", "must lie in [1, 1016]");
  range(cfg.trials >= 1, "trials", "must be >= 1");
  range(!cfg.output_dir.empty(), "output_dir", "must not be empty");

  switch (cfg.experiment) {
    case ExperimentKind::identity_k1:
      range(cfg.d > 1 || cfg.K <= 40, "K", "exhaustive d=1 scan is limited to K <= 40");
      range(cfg.d < 3 || cfg.K <= 24, "K", "d=3 scans are limited to K <= 24");
      break;
    case ExperimentKind::orthogonality: {
      if (!given("partners")) cfg.partners = {cfg.d, cfg.d, cfg.d};
      range(cfg.partners.size() == 3, "partners", "needs three eigenvalues mu^2 for e2, e3, e4");
      for (long long p : cfg.partners)
        range(p >= cfg.d && (p - cfg.d) % 2 == 0 && (p - cfg.d) / 2 <= cfg.K, "partners",
              std::to_string(p) + " is not an eigenvalue 2|m|+d within K");
      range(cfg.C0 > 0.0, "C0", "must be positive");
      range(cfg.d == 1 || cfg.K <= 48, "K", "d > 1 is limited to K <= 48");
      break;
    }
    case ExperimentKind::bilinear:
    case ExperimentKind::bilinear_derivative:
      range(!cfg.N_list.empty() && increasing(cfg.N_list), "N_list", "must be a non-empty increasing list");
      range(!cfg.M_list.empty() && increasing(cfg.M_list), "M_list", "must be a non-empty increasing list");
      for (long long n : cfg.N_list) range(is_dyadic(n) && n <= 64, "N_list", "entries must be powers of two <= 64");
      for (long long m : cfg.M_list) range(is_dyadic(m) && m <= 64, "M_list", "entries must be powers of two <= 64");
      range(cfg.M_list.front() <= cfg.N_list.back(), "M_list", "no pair with M <= N");
      range(cfg.T > 0.0 && cfg.T <= std::numbers::pi, "T", "must lie in (0, pi]");
      range(cfg.prune_tol >= 0.0 && cfg.prune_tol < 1.0, "prune_tol", "must lie in [0, 1)");
      if (cfg.experiment == ExperimentKind::bilinear_derivative) {
        PWord a, b;
        try {
          a = PWord::parse(cfg.word_a);
          a.validate(cfg.d);
        } catch (const std::exception& e) {
          throw ConfigError("word_a", std::string("word_a: ") + e.what());
        }
        try {
          b = PWord::parse(cfg.word_b);
          b.validate(cfg.d);
        } catch (const std::exception& e) {
          throw ConfigError("word_b", std::string("word_b: ") + e.what());
        }
        range(a.ord() + b.ord() <= kLadderHeadroom, "word_b", "combined word order exceeds 8");
      }
      break;
    case ExperimentKind::bernstein:
      range(!cfg.N_list.empty() && increasing(cfg.N_list), "N_list", "must be a non-empty increasing list");
      for (long long n : cfg.N_list) range(is_dyadic(n), "N_list", "entries must be powers of two");
      range(cfg.N_list.back() <= (cfg.d == 1 ? 256 : cfg.d == 2 ? 64 : 16), "N_list", "largest N too large for d");
      if (!given("words"))
        for (int order = 0; order <= 2; ++order)
          for (const PWord& w : PWord::all_of_order(order, cfg.d)) cfg.words.push_back(w.to_string());
      range(!cfg.words.empty(), "words", "must not be empty");
      for (const auto& w : cfg.words) {
        try {
          PWord::parse(w).validate(cfg.d);
        } catch (const std::exception& e) {
          throw ConfigError("words", std::string("words: ") + e.what());
        }
      }
      break;
    case ExperimentKind::energy_increment:
    case ExperimentKind::norm_growth:
    case ExperimentKind::conservation:
      range(cfg.dt > 0.0, "dt", "must be positive");
      if (cfg.experiment != ExperimentKind::energy_increment) {
        range(cfg.T > 0.0, "T", "must be positive");
        range(cfg.dt <= cfg.T, "dt", "must not exceed T");
        range(cfg.T / cfg.dt <= 1e8, "T", "more than 1e8 steps");
      }
      if (cfg.experiment == ExperimentKind::norm_growth) {
        range(cfg.s >= 0.0, "s", "must be non-negative");
        range(cfg.T >= 100 * cfg.dt, "T", "must be at least 100 dt");
      } else {
        range(cfg.s > 1.0, "s", "must exceed 1");
      }
      if (cfg.experiment == ExperimentKind::energy_increment) {
        range(!cfg.N_list.empty() && increasing(cfg.N_list), "N_list", "must be a non-empty increasing list");
        for (long long n : cfg.N_list) range(n >= 1, "N_list", "entries must be positive");
      }
      if (cfg.experiment == ExperimentKind::conservation) range(cfg.N > 0.0, "N", "must be positive");
      range(cfg.d < 3 || cfg.K <= 64, "K", "d=3 solver runs are limited to K <= 64");
      range(cfg.d < 2 || cfg.K <= 256, "K", "d=2 solver runs are limited to K <= 256");
      if (!given("decay")) cfg.decay = cfg.s + cfg.d + 1.0;
      if (!given("max_level")) cfg.max_level = cfg.K / 2;
      range(cfg.max_level >= 0 && cfg.max_level <= cfg.d * cfg.K, "max_level", "must lie in [0, d*K]");
      range(cfg.amplitude >= 0.0, "amplitude", "must be non-negative");
      range(cfg.record_every >= 1, "record_every", "must be >= 1");
      range(cfg.scheme == "strang" || cfg.scheme == "lie", "scheme", "must be \"strang\" or \"lie\"");
      range(cfg.taint_threshold > 0.0, "taint_threshold", "must be positive");
      break;
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Running

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& header) { out_ << header << '\n'; }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(long double v) { return format_double(static_cast<double>(v)); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }

  std::ostringstream out_;
};

json resolved_config(const ExperimentConfig& cfg) {
  const KeyRules rules = rules_for(cfg.experiment);
  std::vector<std::string> keys{"experiment", "seed", "output_dir"};
  keys.insert(keys.end(), rules.required.begin(), rules.required.end());
  keys.insert(keys.end(), rules.optional.begin(), rules.optional.end());
  json out = json::object();
  for (const auto& k : keys) {
    if (k == "experiment") out[k] = experiment_info(cfg.experiment).name;
    else if (k == "seed") out[k] = cfg.seed;
    else if (k == "output_dir") out[k] = cfg.output_dir;
    else if (k == "d") out[k] = cfg.d;
    else if (k == "K") out[k] = cfg.K;
    else if (k == "s") out[k] = cfg.s;
    else if (k == "N_list") out[k] = cfg.N_list;
    else if (k == "M_list") out[k] = cfg.M_list;
    else if (k == "dt") out[k] = cfg.dt;
    else if (k == "T") out[k] = cfg.T;
    else if (k == "trials") out[k] = cfg.trials;
    else if (k == "N") out[k] = cfg.N;
    else if (k == "amplitude") out[k] = cfg.amplitude;
    else if (k == "decay") out[k] = cfg.decay;
    else if (k == "max_level") out[k] = cfg.max_level;
    else if (k == "nonlinearity") out[k] = cfg.nonlinearity;
    else if (k == "record_every") out[k] = cfg.record_every;
    else if (k == "scheme") out[k] = cfg.scheme;
    else if (k == "taint_threshold") out[k] = cfg.taint_threshold;
    else if (k == "C0") out[k] = cfg.C0;
    else if (k == "partners") out[k] = cfg.partners;
    else if (k == "word_a") out[k] = cfg.word_a;
    else if (k == "word_b") out[k] = cfg.word_b;
    else if (k == "words") out[k] = cfg.words;
    else if (k == "prune_tol") out[k] = cfg.prune_tol;
  }
  return out;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json fit_json(const ScalingFit& f) {
  return json{{"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}, {"points", f.xs.size()}};
}

struct Outcome {
  std::string csv;
  json derived = json::object();
  json summary = json::object();
  bool tainted = false;
  double max_spillage = 0;
};

SolverConfig solver_config(const ExperimentConfig& cfg) {
  SolverConfig s;
  s.dt = cfg.dt;
  s.T = cfg.T;
  s.scheme = cfg.scheme == "lie" ? Scheme::lie : Scheme::strang;
  s.record_every = cfg.record_every;
  s.nonlinearity = cfg.nonlinearity;
  s.taint_threshold = cfg.taint_threshold;
  return s;
}

Outcome run_identity(const ExperimentConfig& cfg) {
  Outcome o;
  CsvWriter csv(experiment_info(cfg.experiment).columns);
  const IdentityScanResult r =
      cfg.d == 1 ? identity_scan_1d(cfg.K) : identity_scan_random(cfg.d, 2 * cfg.K + cfg.d, cfg.trials, cfg.seed);
  for (const auto& c : r.checks)
    csv.row(c.mu_sq[0], c.mu_sq[1], c.mu_sq[2], c.mu_sq[3], c.L0, c.rhs, c.residual);
  o.csv = csv.str();
  o.derived["mode"] = cfg.d == 1 ? "exhaustive" : "random";
  o.derived["product_nodes_per_axis"] = 2 * (cfg.K + 1) + 2;
  o.derived["precision"] = "long double";
  o.summary["tuples"] = r.checks.size();
  o.summary["resonant_skipped"] = r.resonant;
  o.summary["worst_residual"] = r.worst_residual;
  return o;
}

Outcome run_orthogonality(const ExperimentConfig& cfg) {
  Outcome o;
  CsvWriter csv(experiment_info(cfg.experiment).columns);
  Rng rng = make_rng(cfg.seed, {0x9a27ULL});
  std::array<SpectralField, 3> partners;
  std::array<int, 3> pmu{};
  for (int i = 0; i < 3; ++i) {
    pmu[i] = static_cast<int>(cfg.partners[i]);
    partners[i] = random_eigenfunction(cfg.d, cfg.K + 1, pmu[i], rng);
  }
  const int threshold = orthogonality_threshold(pmu, cfg.C0);
  std::vector<int> mus;
  for (int level = 0; level <= cfg.K; ++level)
    if (2 * level + cfg.d >= threshold) mus.push_back(2 * level + cfg.d);
  if (mus.size() < 3)
    throw ConfigError("K", "K: fewer than three eigenvalues satisfy mu1^2 >= C0 (mu2^2 + mu3^2 + mu4^2) = " +
                               std::to_string(threshold));
  const OrthogonalityScan r = almost_orthogonality_scan(mus, partners, cfg.K, cfg.C0, cfg.trials, cfg.seed);
  for (std::size_t i = 0; i < r.mu1_sq.size(); ++i) csv.row(r.mu1_sq[i], r.lambda1[i], r.max_abs_L0[i]);
  o.csv = csv.str();
  o.derived["mu1_sq_threshold"] = threshold;
  o.derived["product_nodes_per_axis"] = 2 * (cfg.K + 1) + 2;
  o.summary["parity_zero"] = r.parity_zero;
  o.summary["fit"] = r.fit ? fit_json(*r.fit) : json(nullptr);
  return o;
}

Outcome run_bilinear(const ExperimentConfig& cfg, int threads) {
  Outcome o;
  const bool derivative = cfg.experiment == ExperimentKind::bilinear_derivative;
  CsvWriter csv(experiment_info(cfg.experiment).columns);
  BilinearSettings bs;
  bs.dim = cfg.d;
  bs.T = cfg.T;
  bs.trials = cfg.trials;
  bs.seed = cfg.seed;
  bs.threads = threads;
  bs.prune_tol = cfg.prune_tol;
  const WordPair words{derivative ? PWord::parse(cfg.word_a) : PWord{}, derivative ? PWord::parse(cfg.word_b) : PWord{}};
  json cells = json::array();
  std::map<long long, std::vector<std::pair<double, double>>> by_m;  // M -> (N, raw)
  std::map<long long, std::vector<double>> ratios;
  for (long long N : cfg.N_list)
    for (long long M : cfg.M_list) {
      if (M > N) continue;
      const BilinearCell c = bilinear_cell(N, M, {words}, bs);
      if (derivative)
        csv.row(N, M, words.a.to_string(), words.b.to_string(), c.ratio[0], c.raw_norm[0]);
      else
        csv.row(N, M, c.ratio[0], c.raw_norm[0]);
      cells.push_back(json{{"N", N}, {"M", M}, {"nodes_per_axis", c.nodes_per_axis}, {"time_nodes", c.time_nodes}});
      by_m[M].push_back({double(N), c.raw_norm[0]});
      ratios[M].push_back(c.ratio[0]);
    }
  o.csv = csv.str();
  o.derived["cells"] = cells;
  json per_m = json::object();
  for (const auto& [M, pts] : by_m) {
    json entry = json::object();
    if (pts.size() >= 2) {
      std::vector<double> xs, ys;
      for (const auto& [n, raw] : pts) {
        xs.push_back(n);
        ys.push_back(raw);
      }
      entry["raw_norm_fit"] = fit_json(fit_power_law(xs, ys));
      const auto& r = ratios[M];
      entry["largest_N_ratio_over_previous"] = r[r.size() - 1] / r[r.size() - 2];
    }
    per_m[std::to_string(M)] = entry;
  }
  o.summary["by_M"] = per_m;
  return o;
}

Outcome run_bernstein(const ExperimentConfig& cfg, int threads) {
  Outcome o;
  CsvWriter csv(experiment_info(cfg.experiment).columns);
  json per_word = json::object();
  for (const auto& text : cfg.words) {
    const PWord w = PWord::parse(text);
    std::vector<double> r;
    for (long long N : cfg.N_list) {
      r.push_back(bernstein_ratio(w, N, cfg.trials, cfg.seed, cfg.d, threads));
      csv.row(w.to_string(), N, r.back());
    }
    const double top = *std::max_element(r.begin(), r.end());
    per_word[w.to_string()] = json{{"max_ratio", top}, {"max_over_last", top / r.back()}};
  }
  o.csv = csv.str();
  o.summary["words"] = per_word;
  return o;
}

Outcome run_energy_increment(const ExperimentConfig& cfg) {
  Outcome o;
  CsvWriter csv(experiment_info(cfg.experiment).columns);
  const HermiteBasis basis(cfg.d, cfg.K);
  const SpectralField u0 = mixed_mode_data(cfg.d, basis.extent(), cfg.amplitude, cfg.decay, cfg.max_level, cfg.seed);
  std::vector<double> ns(cfg.N_list.begin(), cfg.N_list.end());
  const EnergyIncrementResult r = energy_increment_scan(basis, u0, cfg.s, ns, solver_config(cfg));
  for (std::size_t i = 0; i < r.N.size(); ++i) csv.row(r.N[i], r.delta[i], r.increment[i]);
  o.csv = csv.str();
  o.derived["collocation_nodes_per_axis"] = basis.points(Grid::collocation);
  o.derived["delta_rule"] = "min(1, ||I u0||_{H^1}^-2)";
  o.summary["alpha"] = r.fit ? json(r.alpha) : json(nullptr);
  o.summary["strictly_decreasing"] = r.strictly_decreasing;
  o.tainted = r.tainted;
  o.max_spillage = r.max_spillage;
  return o;
}

Outcome run_norm_growth(const ExperimentConfig& cfg) {
  Outcome o;
  CsvWriter csv(experiment_info(cfg.experiment).columns);
  const HermiteBasis basis(cfg.d, cfg.K);
  const SpectralField u0 = mixed_mode_data(cfg.d, basis.extent(), cfg.amplitude, cfg.decay, cfg.max_level, cfg.seed);
  const NormGrowthResult r = norm_growth_experiment(basis, u0, cfg.s, solver_config(cfg));
  for (std::size_t i = 0; i < r.t.size(); ++i) csv.row(r.t[i], r.norm[i], r.running_max[i]);
  o.csv = csv.str();
  o.derived["steps"] = solver_config(cfg).steps();
  o.derived["collocation_nodes_per_axis"] = basis.points(Grid::collocation);
  o.summary["exponent"] = r.exponent;
  o.summary["bound"] = number_or_null(r.bound);
  o.summary["consistent"] = r.consistent;
  o.tainted = r.tainted;
  o.max_spillage = r.max_spillage;
  return o;
}

Outcome run_conservation(const ExperimentConfig& cfg) {
  Outcome o;
  CsvWriter csv(experiment_info(cfg.experiment).columns);
  const HermiteBasis basis(cfg.d, cfg.K);
  const SpectralField u0 = mixed_mode_data(cfg.d, basis.extent(), cfg.amplitude, cfg.decay, cfg.max_level, cfg.seed);
  SolverConfig sc = solver_config(cfg);
  sc.sobolev_orders = {cfg.s};
  const IOperatorSpec spec{cfg.N, cfg.s};
  const NlsSolver solver(basis, cfg.nonlinearity);
  const EvolveResult r = solver.evolve(u0, sc, spec);
  double mass_drift = 0, energy_drift = 0;
  for (const auto& rep : r.reports) {
    csv.row(rep.t, rep.mass, rep.energy, rep.modified_energy, rep.hs_norms[0]);
    mass_drift = std::max(mass_drift, std::abs(rep.mass - r.reports[0].mass));
    energy_drift = std::max(energy_drift, std::abs(rep.energy - r.reports[0].energy));
  }
  o.csv = csv.str();
  o.derived["steps"] = sc.steps();
  o.derived["collocation_nodes_per_axis"] = basis.points(Grid::collocation);
  o.derived["energy_quartic_grid"] = "collocation";
  o.summary["max_relative_mass_drift"] = r.reports[0].mass > 0 ? mass_drift / r.reports[0].mass : 0.0;
  o.summary["max_energy_drift"] = energy_drift;
  o.tainted = r.tainted;
  o.max_spillage = r.max_spillage;
  return o;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

int run_experiment(const ExperimentConfig& input, const RunOptions& opts) {
  ExperimentConfig cfg = input;
  if (opts.output_dir) cfg.output_dir = *opts.output_dir;
  if (opts.seed) cfg.seed = *opts.seed;
  const int threads = std::max(1, opts.threads);

  const std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir.string());

  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  switch (cfg.experiment) {
    case ExperimentKind::identity_k1: o = run_identity(cfg); break;
    case ExperimentKind::orthogonality: o = run_orthogonality(cfg); break;
    case ExperimentKind::bilinear:
    case ExperimentKind::bilinear_derivative: o = run_bilinear(cfg, threads); break;
    case ExperimentKind::bernstein: o = run_bernstein(cfg, threads); break;
    case ExperimentKind::energy_increment: o = run_energy_increment(cfg); break;
    case ExperimentKind::norm_growth: o = run_norm_growth(cfg); break;
    case ExperimentKind::conservation: o = run_conservation(cfg); break;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const int code = o.tainted ? 2 : 0;

  json manifest = json::object();
  manifest["config_text"] = cfg.source_text;
  manifest["config"] = resolved_config(cfg);
  manifest["overrides"] = json{{"output_dir", opts.output_dir ? json(*opts.output_dir) : json(nullptr)},
                               {"seed", opts.seed ? json(*opts.seed) : json(nullptr)}};
  manifest["software"] = json{{"name", "oscillab"}, {"version", OSCILLAB_VERSION}};
  manifest["threads"] = threads;
  manifest["wall_time_seconds"] = wall;
  manifest["tainted"] = o.tainted;
  manifest["max_spillage"] = o.max_spillage;
  manifest["derived"] = o.derived;
  manifest["summary"] = o.summary;
  manifest["columns"] = experiment_info(cfg.experiment).columns;
  manifest["exit_code"] = code;

  write_file(dir / "results.csv", o.csv);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return code;
}

}  // namespace oscillab
