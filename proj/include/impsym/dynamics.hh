/*
 * dynamics.hh
 *
 *  impulsive systems: vector field between impulses, reset map at impulses,
 *  sampled-time simulation. impulses are instantaneous and co-located with
 *  sampling instants; consecutive impulses are separated by p1..p2 periods.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "impsym/common.hh"
#include "impsym/geometry.hh"

namespace impsym {

/* writes dx = f(x,u) resp. x+ = g(x,u) into the third argument */
using field_fn = std::function<void(const vec&, const vec&, vec&)>;

struct IntegratorOptions {
  double h_max = 0;        /* 0: use tau/10 */
  double blowup = 1e9;     /* abort when an intermediate state passes this */
  double margin = 1e-6;    /* domain inflation accepted by flow_map inputs */
};

/* continuous-time system with impulses: dx/dt = f(x,u) between impulses,
 * x(t) = g(x(t-), u) at impulse times; inputs piecewise constant per period */
struct ImpulsiveSystem {
  std::size_t dim = 1;
  field_fn flow;                 /* f */
  field_fn jump;                 /* g */
  double tau = 0;                /* sampling period */
  int p1 = 1;                    /* min periods between impulses */
  int p2 = 1;                    /* max periods between impulses */
  std::vector<vec> inputs;       /* finite input set */
  std::vector<Box> region;       /* compact operating region */
  IntegratorOptions integ;

  double h_max() const { return integ.h_max > 0 ? integ.h_max : tau / 10; }

  bool region_contains(const vec& x, double margin) const {
    for (const Box& b : region)
      if (b.contains(x, margin)) return true;
    return false;
  }
};

/* classical fixed-step fourth-order integration of f(.,u) over duration.
 * substep count is ceil(duration/h_max) so refining h_max is a pure
 * refinement (no step-size adaption anywhere, runs are reproducible). */
inline vec flow_map(const ImpulsiveSystem& sys, const vec& x0, const vec& u,
                    double duration) {
  if (x0.size() != sys.dim) throw OutOfDomain("flow_map: dimension mismatch");
  if (!(duration > 0)) throw OutOfDomain("flow_map: duration must be positive");
  const int nint =
      std::max(1, static_cast<int>(std::ceil(duration / sys.h_max() - 1e-9)));
  const double h = duration / nint;
  vec x = x0, k0(sys.dim), k1(sys.dim), k2(sys.dim), k3(sys.dim), tmp(sys.dim);
  for (int s = 0; s < nint; ++s) {
    sys.flow(x, u, k0);
    for (std::size_t i = 0; i < sys.dim; ++i) tmp[i] = x[i] + h / 2 * k0[i];
    sys.flow(tmp, u, k1);
    for (std::size_t i = 0; i < sys.dim; ++i) tmp[i] = x[i] + h / 2 * k1[i];
    sys.flow(tmp, u, k2);
    for (std::size_t i = 0; i < sys.dim; ++i) tmp[i] = x[i] + h * k2[i];
    sys.flow(tmp, u, k3);
    for (std::size_t i = 0; i < sys.dim; ++i)
      x[i] += h / 6 * (k0[i] + 2 * k1[i] + 2 * k2[i] + k3[i]);
    if (!(inf_norm(x) <= sys.integ.blowup))
      throw NumericalBlowup("flow_map: state passed the blow-up bound");
  }
  return x;
}

/* exact evaluation of the reset map */
inline vec jump_map(const ImpulsiveSystem& sys, const vec& x, const vec& u) {
  if (x.size() != sys.dim) throw OutOfDomain("jump_map: dimension mismatch");
  vec out(sys.dim);
  sys.jump(x, u, out);
  return out;
}

/* impulse times as integer period counts k (impulse at t = k*tau); the first
 * impulse arrives no earlier than p1 periods, consecutive gaps stay in
 * {p1,...,p2} periods */
struct ImpulseSchedule {
  std::vector<std::int64_t> periods;

  void validate(int p1, int p2) const {
    std::int64_t prev = 0;
    bool first = true;
    for (std::int64_t k : periods) {
      if (first) {
        if (k < p1) throw OutOfDomain("schedule: first impulse earlier than p1 periods");
        first = false;
      } else {
        std::int64_t gap = k - prev;
        if (gap < p1 || gap > p2)
          throw OutOfDomain("schedule: impulse gap outside {p1,...,p2} periods");
      }
      prev = k;
    }
  }

  bool has(std::int64_t k) const {
    return std::binary_search(periods.begin(), periods.end(), k);
  }
};

/* i.i.d. uniform gaps in {p1,...,p2} periods until the horizon is covered */
inline ImpulseSchedule random_schedule(int p1, int p2, std::int64_t horizon,
                                       std::uint64_t seed) {
  if (p1 < 1 || p2 < p1) throw OutOfDomain("schedule: need 1 <= p1 <= p2");
  Rng rng(seed);
  ImpulseSchedule s;
  std::int64_t t = 0;
  for (;;) {
    t += rng.uniform_int(p1, p2);
    if (t > horizon) break;
    s.periods.push_back(t);
  }
  return s;
}

/* one value per sampling period: values[k] is active on [k*tau,(k+1)*tau) and
 * is the value an impulse at t = k*tau consumes */
struct InputSignal {
  std::vector<vec> values;

  const vec& at(std::int64_t k) const {
    if (k < 0 || static_cast<std::size_t>(k) >= values.size())
      throw OutOfDomain("input signal does not cover the horizon");
    return values[static_cast<std::size_t>(k)];
  }
};

/* state sampled at t = k*tau. states are right-continuous: `after` is the
 * value at t, `before` the flow limit from the left; they differ only at
 * impulse times. `input` is the value active on [t, t+tau). */
struct TrajectorySample {
  std::int64_t k = 0;
  double t = 0;
  vec before;
  vec after;
  vec input;
  bool jumped = false;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
};

/* integrate over horizon periods under the given signal and schedule; an
 * impulse at t = k*tau is applied to the flowed state using values[k] */
inline Trajectory simulate(const ImpulsiveSystem& sys, const vec& x0,
                           const InputSignal& signal,
                           const ImpulseSchedule& schedule,
                           std::int64_t horizon) {
  if (x0.size() != sys.dim) throw OutOfDomain("simulate: dimension mismatch");
  if (horizon < 0) throw OutOfDomain("simulate: negative horizon");
  schedule.validate(sys.p1, sys.p2);
  if (static_cast<std::size_t>(horizon) + 1 > signal.values.size())
    throw OutOfDomain("simulate: input signal does not cover the horizon");
  Trajectory tr;
  TrajectorySample s0;
  s0.k = 0;
  s0.t = 0;
  s0.before = s0.after = x0;
  s0.input = signal.at(0);
  tr.samples.push_back(s0);
  vec x = x0;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    x = flow_map(sys, x, signal.at(k - 1), sys.tau);
    TrajectorySample s;
    s.k = k;
    s.t = static_cast<double>(k) * sys.tau;
    s.before = x;
    s.jumped = schedule.has(k);
    if (s.jumped) x = jump_map(sys, x, signal.at(k));
    s.after = x;
    s.input = signal.at(k);
    tr.samples.push_back(s);
  }
  return tr;
}

/* ---------------------------------------------------------------------- */
/* model registry                                                          */
/* ---------------------------------------------------------------------- */

/* scalar storage with deliveries: dx/dt = a*x + c*u between deliveries,
 * x+ = b*x + d*u at a delivery */
struct StorageParams {
  double a = -0.2, b = 0.9, c = 10, d = 10;
};

inline std::pair<field_fn, field_fn> storage_delivery_fields(StorageParams p) {
  field_fn f = [p](const vec& x, const vec& u, vec& dx) {
    dx[0] = p.a * x[0] + p.c * u[0];
  };
  field_fn g = [p](const vec& x, const vec& u, vec& xp) {
    xp[0] = p.b * x[0] + p.d * u[0];
  };
  return {f, g};
}

/* n-dimensional diagonal analogue driven by one scalar input; exists so grid
 * and abstraction code paths get exercised beyond dimension one */
inline std::pair<field_fn, field_fn> pure_linear_nd_fields(std::size_t n,
                                                           StorageParams p) {
  field_fn f = [p, n](const vec& x, const vec& u, vec& dx) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = p.a * x[i] + p.c * u[0];
  };
  field_fn g = [p, n](const vec& x, const vec& u, vec& xp) {
    for (std::size_t i = 0; i < n; ++i) xp[i] = p.b * x[i] + p.d * u[0];
  };
  return {f, g};
}

inline bool known_model(const std::string& name) {
  return name == "storage-delivery" || name == "pure-linear-nd";
}

}  // namespace impsym
