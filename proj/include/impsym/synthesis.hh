/*
 * synthesis.hh
 *
 *  safety games on the symbolic model: maximal controlled-invariant set,
 *  permissive controller with a bit-exact text form, refinement to concrete
 *  states, closed-loop execution against random impulse schedules, and a
 *  sampling validator for the alternating-simulation relation
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "impsym/abstraction.hh"
#include "impsym/certificates.hh"
#include "impsym/common.hh"
#include "impsym/dynamics.hh"
#include "impsym/geometry.hh"

namespace impsym {

/* safety objective: keep the run inside safe_box deflated by `deflation` per
 * face. eps_hat is carried along as controller metadata so a serialized
 * controller records the precision it was synthesized for. */
struct SafetySpec {
  Box safe_box;
  double deflation = 0;
  double eps_hat = 0;
};

/* permissive memoryless safety controller over (grid point, mode) states.
 * winning_[point*(p2+1)+mode] lists the admissible input indices in input
 * order; an empty list marks a losing state. */
class SafetyController {
 public:
  SafetyController(GridDomain domain, std::vector<GridIndex> points,
                   double tau, int p1, int p2, double eps_hat,
                   double deflation, std::vector<vec> inputs,
                   std::vector<std::vector<std::uint32_t>> winning)
      : domain_(std::move(domain)),
        points_(std::move(points)),
        tau_(tau),
        p1_(p1),
        p2_(p2),
        eps_hat_(eps_hat),
        deflation_(deflation),
        inputs_(std::move(inputs)),
        winning_(std::move(winning)) {
    if (winning_.size() != points_.size() * num_modes())
      throw OutOfDomain("controller: winning table size mismatch");
    for (const auto& w : winning_)
      if (!w.empty()) ++winning_states_;
  }

  const GridDomain& domain() const { return domain_; }
  const std::vector<GridIndex>& points() const { return points_; }
  const std::vector<vec>& inputs() const { return inputs_; }
  double tau() const { return tau_; }
  int p1() const { return p1_; }
  int p2() const { return p2_; }
  double eps_hat() const { return eps_hat_; }
  double deflation() const { return deflation_; }
  std::size_t num_modes() const { return static_cast<std::size_t>(p2_) + 1; }
  std::size_t num_points() const { return points_.size(); }

  /* number of (point, mode) states with at least one admissible input */
  std::size_t domain_size() const { return winning_states_; }
  bool empty() const { return winning_states_ == 0; }

  vec decode(const GridIndex& q) const { return domain_.decode(q); }

  /* admissible input indices at a grid state; empty means losing */
  const std::vector<std::uint32_t>& admissible(const GridIndex& q,
                                               int mode) const {
    if (mode < 0 || mode > p2_)
      throw OutOfDomain("controller: mode outside 0..p2");
    auto it = std::lower_bound(points_.begin(), points_.end(), q);
    if (it == points_.end() || !(*it == q))
      throw OutOfDomain("controller: grid point not in the domain");
    std::size_t p = static_cast<std::size_t>(it - points_.begin());
    return winning_[p * num_modes() + static_cast<std::size_t>(mode)];
  }

 private:
  GridDomain domain_;
  std::vector<GridIndex> points_;
  double tau_;
  int p1_, p2_;
  double eps_hat_, deflation_;
  std::vector<vec> inputs_;
  std::vector<std::vector<std::uint32_t>> winning_;
  std::size_t winning_states_ = 0;
};

/* maximal fixed point of the safety game. initial candidates are the grid
 * states whose point lies in the deflated safe box; a state survives while
 * some input is unblocked and sends every successor (either scenario the
 * impulse timing may pick) back into the candidate set. */
inline SafetyController synthesize_safety(const SymbolicModel& m,
                                          const SafetySpec& spec) {
  const std::size_t d = m.domain().dim();
  if (spec.safe_box.dim() != d)
    throw OutOfDomain("synthesize_safety: safe box dimension mismatch");
  if (!(spec.deflation >= 0))
    throw OutOfDomain("synthesize_safety: negative deflation");
  vec lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = spec.safe_box.lower[i] + spec.deflation;
    hi[i] = spec.safe_box.upper[i] - spec.deflation;
    if (!(lo[i] < hi[i]))
      throw OutOfDomain("synthesize_safety: deflation swallows the safe box");
  }
  const double slack = grid_slack * m.domain().eta();
  const std::size_t modes = m.num_modes();
  const std::size_t nu = m.num_inputs();

  std::vector<char> alive(m.num_states(), 0);
  for (std::size_t p = 0; p < m.num_points(); ++p) {
    vec x = m.decode(static_cast<point_id>(p));
    bool inside = true;
    for (std::size_t i = 0; i < d; ++i)
      if (x[i] < lo[i] - slack || x[i] > hi[i] + slack) {
        inside = false;
        break;
      }
    if (inside)
      for (std::size_t l = 0; l < modes; ++l) alive[p * modes + l] = 1;
  }

  /* a usable input must keep both open scenarios inside the candidate set */
  auto input_ok = [&](point_id p, int l, std::size_t u) {
    AbstractState s{p, l};
    if (m.blocked(s, u)) return false;
    if (m.flow_available(l))
      for (point_id t : m.flow_successors(p, u))
        if (!alive[t * modes + static_cast<std::size_t>(l) + 1]) return false;
    if (m.jump_available(l))
      for (point_id t : m.jump_successors(p, u))
        if (!alive[t * modes]) return false;
    return true;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t p = 0; p < m.num_points(); ++p)
      for (std::size_t l = 0; l < modes; ++l) {
        if (!alive[p * modes + l]) continue;
        bool ok = false;
        for (std::size_t u = 0; u < nu && !ok; ++u)
          ok = input_ok(static_cast<point_id>(p), static_cast<int>(l), u);
        if (!ok) {
          alive[p * modes + l] = 0;
          changed = true;
        }
      }
  }

  std::vector<std::vector<std::uint32_t>> winning(m.num_states());
  for (std::size_t p = 0; p < m.num_points(); ++p)
    for (std::size_t l = 0; l < modes; ++l) {
      if (!alive[p * modes + l]) continue;
      auto& w = winning[p * modes + l];
      for (std::size_t u = 0; u < nu; ++u)
        if (input_ok(static_cast<point_id>(p), static_cast<int>(l), u))
          w.push_back(static_cast<std::uint32_t>(u));
    }

  return SafetyController(m.domain(), m.points(), m.tau(), m.p1(), m.p2(),
                          spec.eps_hat, spec.deflation, m.inputs(),
                          std::move(winning));
}

/* ---------------------------------------------------------------------- */
/* controller text form                                                    */
/* ---------------------------------------------------------------------- */

/* plain-text controller: a header with the grid and game parameters, then one
 * line per winning state, `coords... mode input-indices...`, in (point, mode)
 * order. doubles use a round-trippable format, so serialize(parse(s)) == s. */
inline std::string serialize_controller(const SafetyController& c) {
  std::ostringstream os;
  os << "# safety controller\n";
  os << "eta = " << fmt_double(c.domain().eta()) << "\n";
  os << "tau = " << fmt_double(c.tau()) << "\n";
  os << "p1 = " << c.p1() << "\n";
  os << "p2 = " << c.p2() << "\n";
  os << "eps_hat = " << fmt_double(c.eps_hat()) << "\n";
  os << "deflation = " << fmt_double(c.deflation()) << "\n";
  os << "dim = " << c.domain().dim() << "\n";
  for (const Box& b : c.domain().boxes())
    os << "box = " << fmt_vec(b.lower) << ' ' << fmt_vec(b.upper) << "\n";
  os << "inputs = ";
  for (std::size_t u = 0; u < c.inputs().size(); ++u) {
    if (u) os << ',';
    os << fmt_vec(c.inputs()[u]);
  }
  os << "\n";
  os << "states = " << c.domain_size() << "\n";
  const std::size_t modes = c.num_modes();
  for (std::size_t p = 0; p < c.num_points(); ++p)
    for (std::size_t l = 0; l < modes; ++l) {
      const auto& w = c.admissible(c.points()[p], static_cast<int>(l));
      if (w.empty()) continue;
      for (std::int64_t k : c.points()[p].coords) os << k << ' ';
      os << l;
      for (std::uint32_t u : w) os << ' ' << u;
      os << "\n";
    }
  return os.str();
}

inline SafetyController parse_controller(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  double eta = 0, tau = 0, eps_hat = 0, deflation = 0;
  long long p1 = 0, p2 = 0, dim = 0, states = -1;
  std::vector<Box> boxes;
  std::vector<vec> inputs;
  bool have_eta = false, have_tau = false;

  auto read_values = [](const std::string& s) {
    vec v;
    for (const std::string& tok : split_ws(s)) v.push_back(to_double(tok));
    return v;
  };

  /* header: `key = value` lines up to and including `states = n` */
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("controller header: missing '=' in '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key == "eta") {
      eta = to_double(val);
      have_eta = true;
    } else if (key == "tau") {
      tau = to_double(val);
      have_tau = true;
    } else if (key == "p1") {
      p1 = to_int(val);
    } else if (key == "p2") {
      p2 = to_int(val);
    } else if (key == "eps_hat") {
      eps_hat = to_double(val);
    } else if (key == "deflation") {
      deflation = to_double(val);
    } else if (key == "dim") {
      dim = to_int(val);
    } else if (key == "box") {
      vec b = read_values(val);
      if (dim <= 0 || b.size() != 2 * static_cast<std::size_t>(dim))
        throw ConfigError("controller header: box before dim, or wrong size");
      boxes.emplace_back(vec(b.begin(), b.begin() + dim),
                         vec(b.begin() + dim, b.end()));
    } else if (key == "inputs") {
      std::size_t pos = 0;
      while (pos <= val.size()) {
        std::size_t comma = val.find(',', pos);
        std::string item = comma == std::string::npos
                               ? val.substr(pos)
                               : val.substr(pos, comma - pos);
        inputs.push_back(read_values(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
    } else if (key == "states") {
      states = to_int(val);
      break;
    } else {
      throw ConfigError("controller header: unknown key '" + key + "'");
    }
  }
  if (!have_eta || !have_tau || boxes.empty() || inputs.empty() || states < 0)
    throw ConfigError("controller header incomplete");
  if (p1 < 1 || p2 < p1)
    throw ConfigError("controller header: need 1 <= p1 <= p2");

  GridDomain domain(boxes, eta);
  std::vector<GridIndex> points = domain.enumerate();
  const std::size_t modes = static_cast<std::size_t>(p2) + 1;
  std::vector<std::vector<std::uint32_t>> winning(points.size() * modes);

  long long seen = 0;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> toks = split_ws(t);
    if (toks.size() < static_cast<std::size_t>(dim) + 2)
      throw ConfigError("controller state line too short: '" + t + "'");
    GridIndex q;
    for (long long i = 0; i < dim; ++i)
      q.coords.push_back(to_int(toks[static_cast<std::size_t>(i)]));
    long long mode = to_int(toks[static_cast<std::size_t>(dim)]);
    if (mode < 0 || mode > p2)
      throw ConfigError("controller state line: mode outside 0..p2");
    auto it = std::lower_bound(points.begin(), points.end(), q);
    if (it == points.end() || !(*it == q))
      throw ConfigError("controller state line: point outside the grid");
    std::size_t p = static_cast<std::size_t>(it - points.begin());
    auto& w = winning[p * modes + static_cast<std::size_t>(mode)];
    if (!w.empty())
      throw ConfigError("controller state line: duplicate state");
    for (std::size_t i = static_cast<std::size_t>(dim) + 1; i < toks.size();
         ++i) {
      long long u = to_int(toks[i]);
      if (u < 0 || static_cast<std::size_t>(u) >= inputs.size())
        throw ConfigError("controller state line: input index out of range");
      w.push_back(static_cast<std::uint32_t>(u));
    }
    ++seen;
  }
  if (seen != states)
    throw ConfigError("controller: state line count disagrees with header");

  return SafetyController(std::move(domain), std::move(points), tau,
                          static_cast<int>(p1), static_cast<int>(p2), eps_hat,
                          deflation, std::move(inputs), std::move(winning));
}

/* ---------------------------------------------------------------------- */
/* refinement and closed loop                                              */
/* ---------------------------------------------------------------------- */

/* refine the controller to a concrete state: quantize, look up the winning
 * list of (nearest point, mode), return its first input index. only exact
 * input refinement is supported, which is what a zero input-mismatch gain
 * certifies. */
inline std::size_t refine(const SafetyController& c, const AsfParameters& asf,
                          const vec& x, int mode) {
  if (!asf.rho_u_tilde.is_zero())
    throw OutOfDomain("refine: only exact input matching is supported");
  if (mode < 0 || mode > c.p2())
    throw OutsideDomain("refine: mode outside 0..p2");
  const std::vector<std::uint32_t>* w = nullptr;
  try {
    GridIndex q = c.domain().quantize(x);
    w = &c.admissible(q, mode);
  } catch (const OutOfDomain& e) {
    throw OutsideDomain(std::string("refine: ") + e.what());
  }
  if (w->empty())
    throw OutsideDomain("refine: state outside the winning domain");
  return (*w)[0];
}

/* what a relation check saw: every concrete/abstract pair it visited, the
 * worst deviation and worst weighted certificate value, and how many checks
 * failed. `level` is the invariant sublevel max{rho(r), eps}; eps_hat the
 * deviation bound derived from it. */
struct RelationReport {
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  double max_deviation = 0;
  double max_value = 0;
  double level = 0;
  double eps_hat = 0;
};

/* membership of a concrete/abstract pair in the relation sublevel set */
inline bool in_relation(const AsfParameters& asf, const MaxFormParameters& mf,
                        const vec& x, const vec& xh, int mode) {
  if (!asf.V) throw OutOfDomain("in_relation: certificate value missing");
  const double level = std::max(mf.rho(mf.input_bound), mf.eps);
  return asf.weighted(x, xh, mode) <= level;
}

/* run the controlled system for `horizon` sampling periods against a random
 * admissible impulse schedule, tracking an abstract companion run. each
 * transition (a tau flow, or an instantaneous jump at an impulse instant)
 * takes the first admissible input of the tracked abstract state; the
 * companion moves to the stored successor nearest to the concrete state,
 * ties toward lexicographically smaller grid coordinates. every visited pair
 * is checked against the relation invariant; a breach throws
 * RelationViolation. rows record the flow input applied on [k tau,(k+1) tau);
 * the last row records the input the controller would apply next. */
inline std::pair<Trajectory, RelationReport> closed_loop(
    const ImpulsiveSystem& sys, const SafetyController& c,
    const AsfParameters& asf, const MaxFormParameters& mf, const vec& x0,
    std::int64_t horizon, std::uint64_t seed) {
  if (!asf.V) throw OutOfDomain("closed_loop: certificate value missing");
  if (horizon < 1) throw OutOfDomain("closed_loop: horizon must be positive");
  RelationReport rep;
  rep.level = std::max(mf.rho(mf.input_bound), mf.eps);
  rep.eps_hat = mf.eps_hat;
  const double tol = 1e-12;
  const double eta = c.domain().eta();

  auto check_pair = [&](const vec& xc, const vec& xa, int mode) {
    double dev = inf_dist(xc, xa);
    double w = asf.weighted(xc, xa, mode);
    ++rep.pairs_checked;
    rep.max_deviation = std::max(rep.max_deviation, dev);
    rep.max_value = std::max(rep.max_value, w);
    if (w > rep.level + tol)
      throw RelationViolation(
          "closed loop: weighted value escaped the invariant level");
    if (dev > asf.deviation_bound(rep.level, mode) + tol)
      throw RelationViolation("closed loop: deviation exceeded the bound");
  };

  /* admissible input at the tracked abstract state; the game invariant keeps
   * the run winning, so an empty list is a genuine relation breach */
  auto pick_input = [&](const GridIndex& q, int mode) -> std::size_t {
    const auto& w = c.admissible(q, mode);
    if (w.empty())
      throw RelationViolation("closed loop: abstract run left the winning domain");
    return w[0];
  };

  /* stored successor of one scenario nearest to the concrete successor */
  auto pair_to = [&](const vec& nominal, const vec& xc) -> GridIndex {
    std::vector<GridIndex> ball = c.domain().ball_points(nominal, eta);
    if (ball.empty())
      throw RelationViolation("closed loop: empty abstract successor set");
    std::size_t best = 0;
    double best_d = inf_dist(c.decode(ball[0]), xc);
    for (std::size_t i = 1; i < ball.size(); ++i) {
      double d = inf_dist(c.decode(ball[i]), xc);
      if (d < best_d) {
        best = i;
        best_d = d;
      }
    }
    return ball[best];
  };

  ImpulseSchedule sched = random_schedule(sys.p1, sys.p2, horizon, seed);
  Trajectory traj;
  traj.samples.reserve(static_cast<std::size_t>(horizon) + 1);

  vec x = x0;
  GridIndex q;
  try {
    q = c.domain().quantize(x0);
  } catch (const OutOfDomain& e) {
    throw OutsideDomain(std::string("closed_loop: ") + e.what());
  }
  int l = 0;
  check_pair(x, c.decode(q), l);

  TrajectorySample first;
  first.k = 0;
  first.t = 0;
  first.before = x0;
  first.after = x0;
  first.jumped = false;
  traj.samples.push_back(first);

  for (std::int64_t k = 0; k < horizon; ++k) {
    std::size_t uidx = pick_input(q, l);
    const vec& u = c.inputs()[uidx];
    traj.samples.back().input = u;

    /* flow transition over one period */
    if (l > sys.p2 - 1)
      throw RelationViolation("closed loop: flow past the maximal gap");
    vec xn = flow_map(sys, x, u, sys.tau);
    vec nominal = flow_map(sys, c.decode(q), u, sys.tau);
    q = pair_to(nominal, xn);
    x = xn;
    ++l;
    check_pair(x, c.decode(q), l);

    TrajectorySample row;
    row.k = k + 1;
    row.t = static_cast<double>(k + 1) * sys.tau;
    row.before = x;
    row.after = x;
    row.jumped = false;

    /* impulse at this instant: an extra zero-duration transition with its
     * own refined input */
    if (sched.has(k + 1)) {
      if (l < sys.p1 || l > sys.p2)
        throw RelationViolation("closed loop: impulse outside the gap window");
      std::size_t jidx = pick_input(q, l);
      const vec& uj = c.inputs()[jidx];
      vec xj = jump_map(sys, x, uj);
      vec nominal_j = jump_map(sys, c.decode(q), uj);
      q = pair_to(nominal_j, xj);
      x = xj;
      l = 0;
      check_pair(x, c.decode(q), l);
      row.after = x;
      row.jumped = true;
    }
    traj.samples.push_back(row);
  }
  traj.samples.back().input = c.inputs()[pick_input(q, l)];
  return {std::move(traj), rep};
}

/* draw random pairs inside the relation sublevel set and check both halves of
 * the alternating-simulation property on them: the deviation bound, and for
 * every abstract input and every open scenario the existence of a stored-form
 * successor (a grid point within eta of the nominal successor, domain
 * restriction deliberately not applied) that keeps the weighted value inside
 * the sublevel set. failures are counted, never thrown. */
inline RelationReport validate_relation(const ImpulsiveSystem& sys,
                                        const SymbolicModel& m,
                                        const AsfParameters& asf,
                                        const MaxFormParameters& mf,
                                        std::size_t samples,
                                        std::uint64_t seed) {
  if (!asf.V) throw OutOfDomain("validate_relation: certificate value missing");
  RelationReport rep;
  rep.level = std::max(mf.rho(mf.input_bound), mf.eps);
  rep.eps_hat = mf.eps_hat;
  const double tol = 1e-12;
  const double eta = m.domain().eta();
  const std::size_t d = m.domain().dim();
  Rng rng(seed);

  /* best stored successor for one scenario: scan the grid ball around the
   * nominal successor for the smallest next-mode weighted value */
  auto scenario_ok = [&](const vec& xc, const vec& nominal, int next_mode) {
    double best = -1;
    for (const GridIndex& cand : m.domain().grid_ball(nominal, eta)) {
      double w = asf.weighted(xc, m.domain().decode(cand), next_mode);
      if (best < 0 || w < best) best = w;
    }
    if (best < 0) return false; /* cannot happen: the ball holds a rounding */
    rep.max_value = std::max(rep.max_value, best);
    return best <= rep.level + tol;
  };

  for (std::size_t s = 0; s < samples; ++s) {
    /* rejection-sample a pair in the sublevel set with x in the region */
    vec x, xh;
    int mode = 0;
    bool got = false;
    for (int attempt = 0; attempt < 128 && !got; ++attempt) {
      point_id p = static_cast<point_id>(
          rng.uniform_int(0, static_cast<std::int64_t>(m.num_points()) - 1));
      mode = static_cast<int>(rng.uniform_int(0, m.p2()));
      xh = m.decode(p);
      double r = asf.deviation_bound(rep.level, mode);
      x = xh;
      for (std::size_t i = 0; i < d; ++i) x[i] += rng.uniform(-r, r);
      got = sys.region_contains(x, 0.0) &&
            asf.weighted(x, xh, mode) <= rep.level;
    }
    if (!got) continue;
    ++rep.pairs_checked;

    double dev = inf_dist(x, xh);
    rep.max_deviation = std::max(rep.max_deviation, dev);
    bool bad = dev > asf.deviation_bound(rep.level, mode) + tol;

    for (std::size_t u = 0; u < m.num_inputs() && !bad; ++u) {
      const vec& uv = m.inputs()[u];
      if (m.flow_available(mode)) {
        vec xc = flow_map(sys, x, uv, sys.tau);
        vec nominal = flow_map(sys, xh, uv, sys.tau);
        if (!scenario_ok(xc, nominal, mode + 1)) bad = true;
      }
      if (!bad && m.jump_available(mode)) {
        vec xc = jump_map(sys, x, uv);
        vec nominal = jump_map(sys, xh, uv);
        if (!scenario_ok(xc, nominal, 0)) bad = true;
      }
    }
    if (bad) ++rep.violations;
  }
  return rep;
}

}  // namespace impsym
