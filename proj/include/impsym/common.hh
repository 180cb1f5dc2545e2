/*
 * common.hh
 *
 *  shared aliases, error types, deterministic formatting and random draws
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace impsym {

/* dense state/input vector; dimension is dynamic and small */
using vec = std::vector<double>;

/* boundary guard in grid units: quantities measured in multiples of eta are
 * compared with this absolute slack so that exact grid hits survive rounding */
inline constexpr double grid_slack = 1e-9;

/* a point was handed to a grid operation outside the admissible region */
struct OutOfDomain : std::runtime_error {
  explicit OutOfDomain(const std::string& what) : std::runtime_error(what) {}
};

/* enumeration request would exceed the point cap */
struct DomainTooLarge : std::runtime_error {
  explicit DomainTooLarge(const std::string& what) : std::runtime_error(what) {}
};

/* an integration step left the configured safe range */
struct NumericalBlowup : std::runtime_error {
  explicit NumericalBlowup(const std::string& what) : std::runtime_error(what) {}
};

/* certificate constants fall in the excluded quadrant (expanding flow and
 * expanding jumps): no dwell-time condition can help there */
struct CaseExcluded : std::runtime_error {
  explicit CaseExcluded(const std::string& what) : std::runtime_error(what) {}
};

/* the dwell-time inequality fails at an endpoint of the window */
struct DwellViolated : std::runtime_error {
  explicit DwellViolated(const std::string& what) : std::runtime_error(what) {}
};

/* no admissible free parameter satisfies the case's strict inequality */
struct FreeParamInfeasible : std::runtime_error {
  explicit FreeParamInfeasible(const std::string& what) : std::runtime_error(what) {}
};

/* refinement queried at a state outside the controller domain */
struct OutsideDomain : std::runtime_error {
  explicit OutsideDomain(const std::string& what) : std::runtime_error(what) {}
};

/* the tracked concrete/abstract pair broke the simulation guarantee;
 * indicates an implementation or certificate bug, never expected in runs */
struct RelationViolation : std::runtime_error {
  explicit RelationViolation(const std::string& what) : std::runtime_error(what) {}
};

/* malformed configuration or controller file */
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/* round-trip exact double formatting: every output file uses this, which makes
 * repeated runs byte-identical */
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_vec(const vec& v, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(sep);
    out += fmt_double(v[i]);
  }
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

/* strict string-to-double; %.17g output parses back to the identical bits */
inline double to_double(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("not a number: '" + s + "'");
  return v;
}

inline long long to_int(const std::string& s) {
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError("not an integer: '" + s + "'");
  return v;
}

inline double inf_norm(const vec& v) {
  double n = 0;
  for (double x : v) n = std::max(n, std::abs(x));
  return n;
}

inline double inf_dist(const vec& a, const vec& b) {
  double n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n = std::max(n, std::abs(a[i] - b[i]));
  return n;
}

/* xorshift-free splitmix-seeded mt19937_64 wrapper producing doubles with a
 * fixed algorithm, so sequences are identical across standard libraries */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    /* splitmix64 warm-up decorrelates small consecutive seeds */
    for (int i = 0; i < 4; ++i) next_u64();
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /* uniform in [0,1) with 53 random bits */
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /* uniform in [lo,hi) */
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  /* uniform integer in {lo,...,hi} */
  long long uniform_int(long long lo, long long hi) {
    return lo + static_cast<long long>(u01() * static_cast<double>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

}  // namespace impsym
