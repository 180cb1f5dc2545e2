/*
 * config.hh
 *
 *  run configuration: strict `key = value` files with one dotted level
 *  (model.a, asf.psi, run.seed), full-line # comments, and a canonical
 *  serializer so resolved configurations can be written back out
 */

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "impsym/common.hh"
#include "impsym/dynamics.hh"

namespace impsym {

/* everything a run needs: the plant, the grid, the input set, the free
 * parameters of the derivation, and the simulation budget. vectors are
 * space-separated in files; lists of input vectors are comma-separated. */
struct RunConfig {
  std::string model = "storage-delivery";
  StorageParams storage;
  std::size_t model_n = 1; /* state dimension of pure-linear-nd */

  double tau = 0.2;
  int p1 = 1, p2 = 1;
  double eta = 0.01;

  /* explicit input list; when empty, the range form below is used and the
   * input set is every multiple of mu inside [min, max] */
  std::vector<vec> inputs;
  double input_min = 0, input_max = 0, input_mu = 0;

  vec psi_l, psi_u; /* safe box */

  double asf_psi = 0.99;
  std::optional<double> asf_epsilon; /* unset: optimized over the interval */
  std::optional<double> asf_delta;   /* unset: optimized over the interval */

  double integ_h_max = 0; /* 0: tau/10 */

  std::uint64_t seed = 1;
  std::int64_t horizon = 200;
  long long trials = 100;
  vec x0;                        /* empty: safe-box midpoint */
  std::optional<double> deflate; /* unset: the derived eps_hat */
};

namespace detail {

inline vec parse_vec(const std::string& s) {
  vec v;
  for (const std::string& tok : split_ws(s)) v.push_back(to_double(tok));
  return v;
}

inline std::vector<vec> parse_vec_list(const std::string& s) {
  std::vector<vec> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string item =
        comma == std::string::npos ? s.substr(pos) : s.substr(pos, comma - pos);
    vec v = parse_vec(trim(item));
    if (v.empty()) throw ConfigError("empty entry in vector list");
    out.push_back(std::move(v));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline std::optional<double> parse_auto(const std::string& s) {
  if (s == "auto") return std::nullopt;
  return to_double(s);
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_inputs = false, saw_range = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": missing '='");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");

    if (key == "model") {
      if (!known_model(val))
        throw ConfigError("unknown model '" + val + "'");
      c.model = val;
    } else if (key == "model.a") {
      c.storage.a = to_double(val);
    } else if (key == "model.b") {
      c.storage.b = to_double(val);
    } else if (key == "model.c") {
      c.storage.c = to_double(val);
    } else if (key == "model.d") {
      c.storage.d = to_double(val);
    } else if (key == "model.n") {
      long long n = to_int(val);
      if (n < 1) throw ConfigError("model.n must be at least 1");
      c.model_n = static_cast<std::size_t>(n);
    } else if (key == "tau") {
      c.tau = to_double(val);
    } else if (key == "p1") {
      c.p1 = static_cast<int>(to_int(val));
    } else if (key == "p2") {
      c.p2 = static_cast<int>(to_int(val));
    } else if (key == "eta") {
      c.eta = to_double(val);
    } else if (key == "inputs") {
      c.inputs = detail::parse_vec_list(val);
      saw_inputs = true;
    } else if (key == "input.min") {
      c.input_min = to_double(val);
      saw_range = true;
    } else if (key == "input.max") {
      c.input_max = to_double(val);
      saw_range = true;
    } else if (key == "input.mu") {
      c.input_mu = to_double(val);
      saw_range = true;
    } else if (key == "psi_l") {
      c.psi_l = detail::parse_vec(val);
    } else if (key == "psi_u") {
      c.psi_u = detail::parse_vec(val);
    } else if (key == "asf.psi") {
      c.asf_psi = to_double(val);
    } else if (key == "asf.epsilon") {
      c.asf_epsilon = detail::parse_auto(val);
    } else if (key == "asf.delta") {
      c.asf_delta = detail::parse_auto(val);
    } else if (key == "integrator.h_max") {
      c.integ_h_max = to_double(val);
    } else if (key == "run.seed") {
      c.seed = static_cast<std::uint64_t>(to_int(val));
    } else if (key == "run.horizon") {
      c.horizon = to_int(val);
    } else if (key == "run.trials") {
      c.trials = to_int(val);
    } else if (key == "run.x0") {
      c.x0 = detail::parse_vec(val);
    } else if (key == "deflate") {
      c.deflate = detail::parse_auto(val);
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "'");
    }
  }

  if (!(c.tau > 0)) throw ConfigError("tau must be positive");
  if (c.p1 < 1 || c.p2 < c.p1) throw ConfigError("need 1 <= p1 <= p2");
  if (!(c.eta > 0)) throw ConfigError("eta must be positive");
  if (c.psi_l.empty() || c.psi_l.size() != c.psi_u.size())
    throw ConfigError("psi_l and psi_u must be set with equal dimensions");
  for (std::size_t i = 0; i < c.psi_l.size(); ++i)
    if (!(c.psi_l[i] < c.psi_u[i]))
      throw ConfigError("safe box needs psi_l < psi_u in every coordinate");
  if (!(c.asf_psi > 0 && c.asf_psi < 1))
    throw ConfigError("asf.psi must lie in (0,1)");
  if (saw_inputs && saw_range)
    throw ConfigError("give either inputs or an input.min/max/mu range");
  if (!saw_inputs) {
    if (!saw_range) throw ConfigError("no input set given");
    if (!(c.input_mu > 0)) throw ConfigError("input.mu must be positive");
    if (!(c.input_min <= c.input_max))
      throw ConfigError("input.min must not exceed input.max");
  }
  if (c.horizon < 1) throw ConfigError("run.horizon must be positive");
  if (c.trials < 1) throw ConfigError("run.trials must be positive");
  if (c.deflate && *c.deflate < 0)
    throw ConfigError("deflate must be nonnegative");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

/* canonical text form: fixed key order, round-trippable numbers, optional
 * keys written as `auto` or omitted when empty */
inline std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "model = " << c.model << "\n";
  os << "model.a = " << fmt_double(c.storage.a) << "\n";
  os << "model.b = " << fmt_double(c.storage.b) << "\n";
  os << "model.c = " << fmt_double(c.storage.c) << "\n";
  os << "model.d = " << fmt_double(c.storage.d) << "\n";
  if (c.model == "pure-linear-nd") os << "model.n = " << c.model_n << "\n";
  os << "tau = " << fmt_double(c.tau) << "\n";
  os << "p1 = " << c.p1 << "\n";
  os << "p2 = " << c.p2 << "\n";
  os << "eta = " << fmt_double(c.eta) << "\n";
  if (!c.inputs.empty()) {
    os << "inputs = ";
    for (std::size_t u = 0; u < c.inputs.size(); ++u) {
      if (u) os << ',';
      os << fmt_vec(c.inputs[u]);
    }
    os << "\n";
  } else {
    os << "input.min = " << fmt_double(c.input_min) << "\n";
    os << "input.max = " << fmt_double(c.input_max) << "\n";
    os << "input.mu = " << fmt_double(c.input_mu) << "\n";
  }
  os << "psi_l = " << fmt_vec(c.psi_l) << "\n";
  os << "psi_u = " << fmt_vec(c.psi_u) << "\n";
  os << "asf.psi = " << fmt_double(c.asf_psi) << "\n";
  os << "asf.epsilon = "
     << (c.asf_epsilon ? fmt_double(*c.asf_epsilon) : std::string("auto"))
     << "\n";
  os << "asf.delta = "
     << (c.asf_delta ? fmt_double(*c.asf_delta) : std::string("auto")) << "\n";
  os << "integrator.h_max = " << fmt_double(c.integ_h_max) << "\n";
  os << "run.seed = " << c.seed << "\n";
  os << "run.horizon = " << c.horizon << "\n";
  os << "run.trials = " << c.trials << "\n";
  if (!c.x0.empty()) os << "run.x0 = " << fmt_vec(c.x0) << "\n";
  os << "deflate = "
     << (c.deflate ? fmt_double(*c.deflate) : std::string("auto")) << "\n";
  return os.str();
}

}  // namespace impsym
