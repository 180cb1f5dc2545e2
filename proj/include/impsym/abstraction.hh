/*
 * abstraction.hh
 *
 *  finite symbolic model of an impulsive system on a grid domain. states are
 *  (grid point, mode) where the mode counts sampling periods since the last
 *  impulse. per grid point and input the eta-ball around the nominal flow
 *  resp. jump successor is stored once and shared across modes; the mode only
 *  decides which of the two scenarios are available:
 *      flow: mode <= p2-1, successors keep mode+1
 *      jump: p1 <= mode <= p2, successors reset the mode to 0
 *  successors falling outside the domain are dropped. an input whose open
 *  scenario lost all successors is blocked at that mode: the impulse timing is
 *  adversarial, so the input is only usable when every available scenario has
 *  somewhere in-domain to go.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include "impsym/common.hh"
#include "impsym/dynamics.hh"
#include "impsym/geometry.hh"

namespace impsym {

using point_id = std::uint32_t;

struct AbstractState {
  point_id point = 0;
  int mode = 0;

  friend bool operator==(const AbstractState& a, const AbstractState& b) {
    return a.point == b.point && a.mode == b.mode;
  }
  friend bool operator<(const AbstractState& a, const AbstractState& b) {
    return a.point != b.point ? a.point < b.point : a.mode < b.mode;
  }
};

class SymbolicModel {
 public:
  SymbolicModel(GridDomain domain, std::vector<GridIndex> points, double tau,
                int p1, int p2, std::vector<vec> inputs)
      : domain_(std::move(domain)),
        points_(std::move(points)),
        tau_(tau),
        p1_(p1),
        p2_(p2),
        inputs_(std::move(inputs)) {}

  const GridDomain& domain() const { return domain_; }
  const std::vector<GridIndex>& points() const { return points_; }
  const std::vector<vec>& inputs() const { return inputs_; }
  double tau() const { return tau_; }
  int p1() const { return p1_; }
  int p2() const { return p2_; }
  std::size_t num_points() const { return points_.size(); }
  std::size_t num_inputs() const { return inputs_.size(); }
  std::size_t num_modes() const { return static_cast<std::size_t>(p2_) + 1; }
  std::size_t num_states() const { return num_points() * num_modes(); }

  vec decode(point_id p) const { return domain_.decode(points_[p]); }

  /* dense point id of a grid index; points are kept sorted */
  point_id point_of(const GridIndex& q) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), q);
    if (it == points_.end() || !(*it == q))
      throw OutOfDomain("symbolic model: grid point not in the domain");
    return static_cast<point_id>(it - points_.begin());
  }

  bool flow_available(int mode) const { return mode >= 0 && mode <= p2_ - 1; }
  bool jump_available(int mode) const { return mode >= p1_ && mode <= p2_; }

  /* stored successor points of one scenario, sorted by point id */
  const std::vector<point_id>& flow_successors(point_id p, std::size_t u) const {
    return flow_[p * num_inputs() + u];
  }
  const std::vector<point_id>& jump_successors(point_id p, std::size_t u) const {
    return jump_[p * num_inputs() + u];
  }

  /* adversarial availability: the input is unusable at this mode as soon as
   * one available scenario has an empty in-domain successor set */
  bool blocked(const AbstractState& s, std::size_t u) const {
    bool any = false;
    if (flow_available(s.mode)) {
      if (flow_successors(s.point, u).empty()) return true;
      any = true;
    }
    if (jump_available(s.mode)) {
      if (jump_successors(s.point, u).empty()) return true;
      any = true;
    }
    return !any;  /* no scenario at all cannot happen for 0 <= mode <= p2 */
  }

  /* exact successor set, deterministically ordered: flow block first (mode+1),
   * then jump block (mode 0), each sorted by point id */
  std::vector<AbstractState> post(const AbstractState& s, std::size_t u) const {
    std::vector<AbstractState> out;
    if (s.mode < 0 || s.mode > p2_)
      throw OutOfDomain("post: mode outside 0..p2");
    if (u >= num_inputs()) throw OutOfDomain("post: input index out of range");
    if (blocked(s, u)) return out;
    if (flow_available(s.mode))
      for (point_id t : flow_successors(s.point, u))
        out.push_back({t, s.mode + 1});
    if (jump_available(s.mode))
      for (point_id t : jump_successors(s.point, u)) out.push_back({t, 0});
    return out;
  }

  /* bit-exact textual dump for diffing: header, then one line per
   * (point, input) with both scenario target runs */
  std::string dump() const {
    std::ostringstream os;
    os << "# symbolic model\n";
    os << "eta = " << fmt_double(domain_.eta()) << "\n";
    os << "tau = " << fmt_double(tau_) << "\n";
    os << "p1 = " << p1_ << "\n";
    os << "p2 = " << p2_ << "\n";
    os << "dim = " << domain_.dim() << "\n";
    os << "points = " << num_points() << "\n";
    os << "inputs = " << num_inputs() << "\n";
    for (std::size_t p = 0; p < num_points(); ++p)
      for (std::size_t u = 0; u < num_inputs(); ++u) {
        os << p << ' ' << u << " |";
        for (point_id t : flow_[p * num_inputs() + u]) os << ' ' << t;
        os << " |";
        for (point_id t : jump_[p * num_inputs() + u]) os << ' ' << t;
        os << "\n";
      }
    return os.str();
  }

  friend SymbolicModel build_symbolic(const ImpulsiveSystem& sys,
                                      const GridDomain& domain);
  /* test hook: construct a model with hand-written tables */
  static SymbolicModel from_tables(GridDomain domain,
                                   std::vector<GridIndex> points, double tau,
                                   int p1, int p2, std::vector<vec> inputs,
                                   std::vector<std::vector<point_id>> flow,
                                   std::vector<std::vector<point_id>> jump) {
    SymbolicModel m(std::move(domain), std::move(points), tau, p1, p2,
                    std::move(inputs));
    m.flow_ = std::move(flow);
    m.jump_ = std::move(jump);
    return m;
  }

 private:
  GridDomain domain_;
  std::vector<GridIndex> points_;
  double tau_;
  int p1_, p2_;
  std::vector<vec> inputs_;
  /* indexed by point*num_inputs+input; inner vectors sorted */
  std::vector<std::vector<point_id>> flow_;
  std::vector<std::vector<point_id>> jump_;
};

/* build the symbolic model: one integration and one reset evaluation per
 * (grid point, input), parallel over fixed chunks of points. results land in
 * preassigned slots, so the tables are bit-identical run to run. */
inline SymbolicModel build_symbolic(const ImpulsiveSystem& sys,
                                    const GridDomain& domain) {
  if (!(sys.tau > 0)) throw OutOfDomain("build_symbolic: tau must be positive");
  if (sys.p1 < 1 || sys.p2 < sys.p1)
    throw OutOfDomain("build_symbolic: need 1 <= p1 <= p2");
  if (sys.inputs.empty()) throw OutOfDomain("build_symbolic: empty input set");
  SymbolicModel m(domain, domain.enumerate(), sys.tau, sys.p1, sys.p2,
                  sys.inputs);
  const std::size_t np = m.num_points(), ni = m.num_inputs();
  m.flow_.assign(np * ni, {});
  m.jump_.assign(np * ni, {});
  const double eta = domain.eta();
  auto to_ids = [&m](const std::vector<GridIndex>& ball) {
    std::vector<point_id> ids;
    ids.reserve(ball.size());
    for (const GridIndex& q : ball) ids.push_back(m.point_of(q));
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  constexpr std::size_t chunks = 8;
  auto run_chunk = [&](std::size_t chunk) {
    for (std::size_t p = np * chunk / chunks; p < np * (chunk + 1) / chunks; ++p) {
      vec x = m.decode(static_cast<point_id>(p));
      for (std::size_t u = 0; u < ni; ++u) {
        vec xf = flow_map(sys, x, sys.inputs[u], sys.tau);
        m.flow_[p * ni + u] = to_ids(domain.ball_points(xf, eta));
        vec xj = jump_map(sys, x, sys.inputs[u]);
        m.jump_[p * ni + u] = to_ids(domain.ball_points(xj, eta));
      }
    }
  };
  std::vector<std::future<void>> futs;
  for (std::size_t c = 0; c < chunks; ++c)
    futs.push_back(std::async(std::launch::async, run_chunk, c));
  for (auto& f : futs) f.get();
  return m;
}

/* sampled-time successors of a concrete state (x, mode) under one input:
 * the flow over one period while mode <= p2-1, the instantaneous reset while
 * p1 <= mode <= p2; the impulse consumes no flow time */
inline std::vector<std::pair<vec, int>> concrete_post(
    const ImpulsiveSystem& sys, const vec& x, int mode, const vec& u) {
  if (mode < 0 || mode > sys.p2)
    throw OutOfDomain("concrete_post: mode outside 0..p2");
  std::vector<std::pair<vec, int>> out;
  if (mode <= sys.p2 - 1)
    out.emplace_back(flow_map(sys, x, u, sys.tau), mode + 1);
  if (mode >= sys.p1) out.emplace_back(jump_map(sys, x, u), 0);
  return out;
}

struct BlockingReport {
  std::size_t total_states = 0;
  std::vector<AbstractState> blocked_states;  /* no usable input at all */
};

/* states every input is blocked at; synthesis can never keep them safe */
inline BlockingReport check_nonblocking(const SymbolicModel& m) {
  BlockingReport r;
  r.total_states = m.num_states();
  for (point_id p = 0; p < m.num_points(); ++p)
    for (int l = 0; l <= m.p2(); ++l) {
      AbstractState s{p, l};
      bool usable = false;
      for (std::size_t u = 0; u < m.num_inputs() && !usable; ++u)
        usable = !m.blocked(s, u);
      if (!usable) r.blocked_states.push_back(s);
    }
  return r;
}

}  // namespace impsym
