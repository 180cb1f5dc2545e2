/*
 * certificates.hh
 *
 *  incremental-stability certificates for impulsive systems and the simulation
 *  parameters they induce. a certificate V sandwiches the state mismatch,
 *  decays at rate kappa_c along flows and contracts by kappa_d across jumps,
 *  both up to an input-mismatch gain. under a dwell-time condition on the
 *  impulse window the weighted function V * w(l) contracts uniformly per
 *  sampled step, which yields a one-step bound
 *      W(next pair) <= lambda_f * W(pair) + gamma_f(eta)
 *  and from it the precision eps_hat of the grid abstraction.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "impsym/common.hh"
#include "impsym/comparison.hh"
#include "impsym/dynamics.hh"

namespace impsym {

struct StabilityCertificate {
  /* V(x, x') >= 0, zero exactly on the diagonal */
  std::function<double(const vec&, const vec&)> V;
  /* optional analytic gradient: writes dV/dx and dV/dx'; when absent the
   * verifier falls back to central differences */
  std::function<void(const vec&, const vec&, vec&, vec&)> gradient;
  ComparisonFunction alpha_lower = ComparisonFunction::identity();
  ComparisonFunction alpha_upper = ComparisonFunction::identity();
  double kappa_c = 0;  /* flow decay rate, any sign */
  double kappa_d = 1;  /* jump factor, must be positive */
  ComparisonFunction rho_uc = ComparisonFunction::zero();
  ComparisonFunction rho_ud = ComparisonFunction::zero();
  ComparisonFunction gamma_hat = ComparisonFunction::identity();
};

/* canonical certificate of the linear models: V is the infinity norm of the
 * mismatch, exact constants follow from the coefficients */
inline StabilityCertificate linear_infnorm_certificate(double a, double b,
                                                       double c, double d) {
  StabilityCertificate cert;
  cert.V = [](const vec& x, const vec& y) { return inf_dist(x, y); };
  cert.gradient = [](const vec& x, const vec& y, vec& gx, vec& gy) {
    gx.assign(x.size(), 0.0);
    gy.assign(y.size(), 0.0);
    std::size_t arg = 0;
    double best = -1;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double m = std::abs(x[i] - y[i]);
      if (m > best) { best = m; arg = i; }
    }
    double s = x[arg] >= y[arg] ? 1.0 : -1.0;
    gx[arg] = s;
    gy[arg] = -s;
  };
  cert.alpha_lower = ComparisonFunction::identity();
  cert.alpha_upper = ComparisonFunction::identity();
  cert.kappa_c = -a;
  cert.kappa_d = std::abs(b);
  cert.rho_uc = std::abs(c) > 0 ? ComparisonFunction::linear(std::abs(c))
                                : ComparisonFunction::zero();
  cert.rho_ud = std::abs(d) > 0 ? ComparisonFunction::linear(std::abs(d))
                                : ComparisonFunction::zero();
  cert.gamma_hat = ComparisonFunction::identity();
  return cert;
}

/* ---------------------------------------------------------------------- */
/* sampling-based falsification of the certificate conditions              */
/* ---------------------------------------------------------------------- */

struct CertificateReport {
  bool pass = false;
  double sandwich_max_violation = 0;   /* alpha bounds around V */
  double flow_max_violation = 0;       /* decay inequality along flows */
  double jump_max_violation = 0;       /* contraction inequality across jumps */
  double triangle_max_violation = 0;   /* gamma_hat triangle inequality */
  std::size_t samples = 0;
  double tolerance = 1e-6;
};

namespace detail {

inline vec random_region_point(const ImpulsiveSystem& sys, Rng& rng) {
  const Box& b = sys.region[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<long long>(sys.region.size()) - 1))];
  vec x(sys.dim);
  for (std::size_t i = 0; i < sys.dim; ++i)
    x[i] = rng.uniform(b.lower[i], b.upper[i]);
  return x;
}

/* dV/dx and dV/dx' by central differences with a relative step */
inline void numeric_gradient(const StabilityCertificate& cert, const vec& x,
                             const vec& y, vec& gx, vec& gy) {
  gx.assign(x.size(), 0.0);
  gy.assign(y.size(), 0.0);
  vec a = x, b = y;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    a[i] = x[i] + h;
    double up = cert.V(a, y);
    a[i] = x[i] - h;
    double dn = cert.V(a, y);
    a[i] = x[i];
    gx[i] = (up - dn) / (2 * h);
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    double h = 1e-6 * std::max(1.0, std::abs(y[i]));
    b[i] = y[i] + h;
    double up = cert.V(x, b);
    b[i] = y[i] - h;
    double dn = cert.V(x, b);
    b[i] = y[i];
    gy[i] = (up - dn) / (2 * h);
  }
}

}  // namespace detail

/* draw random state pairs and inputs from the operating region and report the
 * worst violation of each certificate condition; chunked over a fixed number
 * of workers with per-chunk seeds, so results do not depend on scheduling */
inline CertificateReport verify_certificate(const StabilityCertificate& cert,
                                            const ImpulsiveSystem& sys,
                                            std::size_t samples,
                                            std::uint64_t seed) {
  if (!(cert.kappa_d > 0)) throw OutOfDomain("certificate: kappa_d must be positive");
  constexpr std::size_t chunks = 8;
  auto run_chunk = [&](std::size_t chunk) {
    CertificateReport r;
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * (chunk + 1));
    std::size_t lo = samples * chunk / chunks, hi = samples * (chunk + 1) / chunks;
    vec gx, gy, fx(sys.dim), fy(sys.dim);
    for (std::size_t s = lo; s < hi; ++s) {
      vec x = detail::random_region_point(sys, rng);
      vec y = detail::random_region_point(sys, rng);
      vec z = detail::random_region_point(sys, rng);
      const vec& u = sys.inputs[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<long long>(sys.inputs.size()) - 1))];
      const vec& w = sys.inputs[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<long long>(sys.inputs.size()) - 1))];
      double v = cert.V(x, y);
      double dist = inf_dist(x, y);
      double du = inf_dist(u, w);
      /* sandwich bounds */
      r.sandwich_max_violation = std::max(
          {r.sandwich_max_violation, cert.alpha_lower(dist) - v,
           v - cert.alpha_upper(dist)});
      /* flow decay: grad_x V . f(x,u) + grad_x' V . f(x',u')
       *             <= -kappa_c V + rho_uc(|u-u'|) */
      if (cert.gradient) cert.gradient(x, y, gx, gy);
      else detail::numeric_gradient(cert, x, y, gx, gy);
      sys.flow(x, u, fx);
      sys.flow(y, w, fy);
      double lie = 0;
      for (std::size_t i = 0; i < sys.dim; ++i) lie += gx[i] * fx[i] + gy[i] * fy[i];
      r.flow_max_violation = std::max(
          r.flow_max_violation, lie - (-cert.kappa_c * v + cert.rho_uc(du)));
      /* jump contraction: V(g(x,u), g(x',u')) <= kappa_d V + rho_ud(|u-u'|) */
      double vj = cert.V(jump_map(sys, x, u), jump_map(sys, y, w));
      r.jump_max_violation = std::max(
          r.jump_max_violation, vj - (cert.kappa_d * v + cert.rho_ud(du)));
      /* triangle: V(x,y) <= V(x,z) + gamma_hat(|y-z|) */
      r.triangle_max_violation = std::max(
          r.triangle_max_violation,
          v - (cert.V(x, z) + cert.gamma_hat(inf_dist(y, z))));
    }
    r.samples = hi - lo;
    return r;
  };
  std::vector<std::future<CertificateReport>> futs;
  for (std::size_t c = 0; c < chunks; ++c)
    futs.push_back(std::async(std::launch::async, run_chunk, c));
  CertificateReport total;
  for (auto& f : futs) {
    CertificateReport r = f.get();
    total.samples += r.samples;
    total.sandwich_max_violation =
        std::max(total.sandwich_max_violation, r.sandwich_max_violation);
    total.flow_max_violation =
        std::max(total.flow_max_violation, r.flow_max_violation);
    total.jump_max_violation =
        std::max(total.jump_max_violation, r.jump_max_violation);
    total.triangle_max_violation =
        std::max(total.triangle_max_violation, r.triangle_max_violation);
  }
  total.pass = total.sandwich_max_violation <= total.tolerance &&
               total.flow_max_violation <= total.tolerance &&
               total.jump_max_violation <= total.tolerance &&
               total.triangle_max_violation <= total.tolerance;
  return total;
}

/* ---------------------------------------------------------------------- */
/* dwell-time condition and per-gap mismatch propagation                   */
/* ---------------------------------------------------------------------- */

/* strict dwell condition ln(kappa_d) - kappa_c*tau*l < 0 at both window ends */
inline bool check_dwell(double kappa_d, double kappa_c, double tau, int p1,
                        int p2) {
  if (!(kappa_d > 0)) throw OutOfDomain("check_dwell: kappa_d must be positive");
  if (!(tau > 0)) throw OutOfDomain("check_dwell: tau must be positive");
  if (p1 < 1 || p2 < p1) throw OutOfDomain("check_dwell: need 1 <= p1 <= p2");
  const double lk = std::log(kappa_d);
  return lk - kappa_c * tau * p1 < 0 && lk - kappa_c * tau * p2 < 0;
}

/* (1 - e^{-kappa_c g})/kappa_c with its analytic limit g at kappa_c = 0 */
inline double decay_weight(double kappa_c, double gap) {
  if (kappa_c == 0) return gap;
  return -std::expm1(-kappa_c * gap) / kappa_c;
}

/* propagate a certificate value across one inter-impulse gap under constant
 * input mismatch:  V(end) <= e^{-kappa_c gap} V0 + decay_weight * rho_uc(r) */
inline double flow_mismatch_bound(const StabilityCertificate& cert, double v0,
                                  double gap, double mismatch) {
  if (!(gap > 0)) throw OutOfDomain("flow_mismatch_bound: gap must be positive");
  if (!(v0 >= 0)) throw OutOfDomain("flow_mismatch_bound: negative certificate value");
  return std::exp(-cert.kappa_c * gap) * v0 +
         decay_weight(cert.kappa_c, gap) * cert.rho_uc(mismatch);
}

/* ---------------------------------------------------------------------- */
/* simulation-function parameters                                          */
/* ---------------------------------------------------------------------- */

/* sign pattern of the certificate constants; the fourth combination
 * (expanding flow and expanding jumps) admits no dwell condition */
enum class CaseTag { both_stable, unstable_jumps, unstable_flow };

inline const char* to_string(CaseTag t) {
  switch (t) {
    case CaseTag::both_stable: return "both-stable";
    case CaseTag::unstable_jumps: return "unstable-jumps";
    default: return "unstable-flow";
  }
}

inline CaseTag classify_case(double kappa_d, double kappa_c) {
  if (kappa_d < 1 && kappa_c > 0) return CaseTag::both_stable;
  if (kappa_d >= 1 && kappa_c > 0) return CaseTag::unstable_jumps;
  if (kappa_d < 1) return CaseTag::unstable_flow;
  throw CaseExcluded(
      "certificate constants kappa_d >= 1 and kappa_c <= 0: expanding flow "
      "with expanding jumps cannot satisfy any dwell condition");
}

/* one-step contraction data of the weighted certificate W(x,x',l) =
 * V(x,x') * mode_weight(l); alpha_tilde converts W levels back to state
 * deviation bounds */
struct AsfParameters {
  CaseTag tag = CaseTag::both_stable;
  double kappa_c = 0, kappa_d = 0;
  double tau = 0;
  int p1 = 1, p2 = 1;
  double eta = 0;
  double epsilon_free = 0.5;  /* in (0,1); active for unstable_jumps */
  double delta_free = 0;      /* > p2;   active for unstable_flow */
  double lambda_f = 0;        /* one-step contraction factor, < 1 */
  double sigma_tilde = 0;     /* equals lambda_f */
  ComparisonFunction gamma_f = ComparisonFunction::identity();
  double eps_tilde = 0;       /* gamma_f(eta) */
  ComparisonFunction rho_u_tilde = ComparisonFunction::zero();
  ComparisonFunction alpha_tilde = ComparisonFunction::identity();
  ComparisonFunction alpha_lower = ComparisonFunction::identity();

  /* certificate value carried over from the source certificate, so the
   * weighted function can be evaluated on concrete/abstract state pairs */
  std::function<double(const vec&, const vec&)> V;

  double mode_weight(int l) const {
    switch (tag) {
      case CaseTag::both_stable:
        return 1.0;
      case CaseTag::unstable_jumps:
        return std::exp(kappa_c * tau * epsilon_free * l);
      default:
        return std::pow(kappa_d, static_cast<double>(l) / delta_free);
    }
  }

  /* W(x,x',l) */
  double value(double v, int l) const { return v * mode_weight(l); }

  double weighted(const vec& x, const vec& xh, int l) const {
    return value(V(x, xh), l);
  }

  /* largest distance compatible with a weighted value at most `level` in
   * mode l; equals alpha_tilde^{-1}(level) wherever the mode weight is at
   * its minimum, and is never smaller than that */
  double deviation_bound(double level, int l) const {
    return alpha_lower.inverse()(level / mode_weight(l));
  }
};

/* derive the one-step contraction of W from the certificate constants.
 * both_stable ignores the free parameters; unstable_jumps needs epsilon in
 * (0,1) with ln(kappa_d) < kappa_c*tau*epsilon*p1; unstable_flow needs
 * delta > p2 with ln(kappa_d) < kappa_c*tau*delta. */
inline AsfParameters derive_asf(const StabilityCertificate& cert, double tau,
                                int p1, int p2, double eta,
                                double epsilon_free, double delta_free) {
  AsfParameters a;
  a.tag = classify_case(cert.kappa_d, cert.kappa_c);
  a.kappa_c = cert.kappa_c;
  a.kappa_d = cert.kappa_d;
  a.tau = tau;
  a.p1 = p1;
  a.p2 = p2;
  a.eta = eta;
  a.epsilon_free = epsilon_free;
  a.delta_free = delta_free;
  a.alpha_lower = cert.alpha_lower;
  a.V = cert.V;
  if (!(eta > 0)) throw OutOfDomain("derive_asf: eta must be positive");
  if (!(epsilon_free > 0 && epsilon_free < 1))
    throw OutOfDomain("derive_asf: epsilon_free must lie in (0,1)");
  if (!(delta_free > p2))
    throw OutOfDomain("derive_asf: delta_free must exceed p2");
  if (!check_dwell(cert.kappa_d, cert.kappa_c, tau, p1, p2))
    throw DwellViolated("dwell condition ln(kappa_d) - kappa_c*tau*l < 0 "
                        "fails on the impulse window");
  const double lk = std::log(cert.kappa_d);
  switch (a.tag) {
    case CaseTag::both_stable:
      a.lambda_f = std::max(std::exp(-cert.kappa_c * tau), cert.kappa_d);
      a.gamma_f = cert.gamma_hat;
      a.alpha_tilde = cert.alpha_lower;
      break;
    case CaseTag::unstable_jumps: {
      if (!(lk - cert.kappa_c * tau * epsilon_free * p1 < 0))
        throw FreeParamInfeasible(
            "epsilon_free too small: ln(kappa_d) < kappa_c*tau*epsilon*p1 "
            "required");
      a.lambda_f = std::max(
          std::exp(-cert.kappa_c * tau * (1 - epsilon_free)),
          std::exp(-cert.kappa_c * tau * epsilon_free * p1) * cert.kappa_d);
      const double boost =
          std::exp(cert.kappa_c * tau * epsilon_free * (p2 + 1));
      a.gamma_f = cert.gamma_hat.is_zero() ? ComparisonFunction::zero()
                                           : cert.gamma_hat.scaled(boost);
      a.alpha_tilde = cert.alpha_lower.scaled(
          std::exp(cert.kappa_c * tau * epsilon_free * p1));
      break;
    }
    case CaseTag::unstable_flow: {
      if (!(lk - cert.kappa_c * tau * delta_free < 0))
        throw FreeParamInfeasible(
            "delta_free too large: ln(kappa_d) < kappa_c*tau*delta required");
      a.lambda_f = std::max(
          std::exp(-cert.kappa_c * tau) * std::pow(cert.kappa_d, 1 / delta_free),
          std::pow(cert.kappa_d, (delta_free - p2) / delta_free));
      a.gamma_f = cert.gamma_hat;
      a.alpha_tilde = cert.alpha_lower.scaled(
          std::pow(cert.kappa_d, static_cast<double>(p2) / delta_free));
      break;
    }
  }
  if (!(a.lambda_f < 1))
    throw FreeParamInfeasible("derived contraction factor is not below one");
  a.sigma_tilde = a.lambda_f;
  a.eps_tilde = a.gamma_f(eta);
  a.rho_u_tilde = ComparisonFunction::zero();
  return a;
}

/* reverse-direction parameters: the abstract input tracks the concrete one up
 * to mu, which costs an additive max{flow-term, rho_ud}(mu); the flow term
 * carries the unstable_jumps boost. the inter-impulse gap inside the flow term
 * is taken as tau, one sampling period. */
inline AsfParameters derive_reverse_asf(const AsfParameters& asf,
                                        const StabilityCertificate& cert,
                                        double mu) {
  if (!(mu >= 0)) throw OutOfDomain("derive_reverse_asf: mu must be nonnegative");
  AsfParameters r = asf;
  double flow_term = decay_weight(cert.kappa_c, asf.tau) * cert.rho_uc(mu);
  if (asf.tag == CaseTag::unstable_jumps)
    flow_term *=
        std::exp(cert.kappa_c * asf.tau * asf.epsilon_free * (asf.p2 + 1));
  r.eps_tilde = asf.eps_tilde + std::max(flow_term, cert.rho_ud(mu));
  return r;
}

/* ---------------------------------------------------------------------- */
/* max-form conversion and precision                                       */
/* ---------------------------------------------------------------------- */

/* max-form data: W(next) <= max{sigma W, rho(|u|), eps}, and the resulting
 * state-deviation precision eps_hat = alpha_tilde^{-1}(max{rho(r), eps}) */
struct MaxFormParameters {
  double sigma = 0;
  ComparisonFunction rho = ComparisonFunction::zero();
  double eps = 0;
  double psi = 0;
  double input_bound = 0;
  double eps_hat = 0;
};

inline MaxFormParameters to_max_form(const AsfParameters& asf, double psi,
                                     double input_bound) {
  if (!(psi > 0 && psi < 1))
    throw OutOfDomain("to_max_form: psi must lie in (0,1)");
  if (!(input_bound >= 0))
    throw OutOfDomain("to_max_form: negative input bound");
  MaxFormParameters m;
  m.psi = psi;
  m.input_bound = input_bound;
  const double denom = (1 - asf.sigma_tilde) * psi;
  m.sigma = 1 - (1 - psi) * (1 - asf.sigma_tilde);
  m.rho = asf.rho_u_tilde.is_zero() ? ComparisonFunction::zero()
                                    : asf.rho_u_tilde.scaled(1 / denom);
  m.eps = asf.eps_tilde / denom;
  m.eps_hat = asf.alpha_tilde.inverse()(std::max(m.rho(input_bound), m.eps));
  return m;
}

struct PrecisionResult {
  AsfParameters asf;
  MaxFormParameters maxform;
};

namespace detail {

/* feasible open interval of the case's free parameter, empty if none */
inline std::pair<double, double> free_param_interval(CaseTag tag,
                                                     const StabilityCertificate& cert,
                                                     double tau, int p1, int p2) {
  const double lk = std::log(cert.kappa_d);
  switch (tag) {
    case CaseTag::both_stable:
      return {0, 1};  /* inert placeholder range */
    case CaseTag::unstable_jumps: {
      double lo = std::max(0.0, lk / (cert.kappa_c * tau * p1));
      return {lo, 1};
    }
    default: {
      double hi = static_cast<double>(p2) + 10;
      if (cert.kappa_c < 0)
        hi = std::min(hi, lk / (cert.kappa_c * tau));
      return {static_cast<double>(p2), hi};
    }
  }
}

}  // namespace detail

/* deterministic search for the free parameters minimizing eps_hat: a lattice
 * over the feasible interval of epsilon resp. delta (and over psi unless one
 * is pinned), followed by shrinking refinement rounds around the incumbent.
 * ties break toward smaller eps_hat, then lexicographically smaller
 * (epsilon, delta, psi). */
inline PrecisionResult optimize_precision(const StabilityCertificate& cert,
                                          double tau, int p1, int p2,
                                          double eta, double input_bound,
                                          std::optional<double> pinned_psi =
                                              std::nullopt) {
  const CaseTag tag = classify_case(cert.kappa_d, cert.kappa_c);
  if (!check_dwell(cert.kappa_d, cert.kappa_c, tau, p1, p2))
    throw DwellViolated("dwell condition fails on the impulse window");
  std::vector<double> psis;
  if (pinned_psi) {
    psis.push_back(*pinned_psi);
  } else {
    for (int i = 1; i <= 9; ++i) psis.push_back(0.1 * i);
    psis.push_back(0.95);
    psis.push_back(0.99);
    psis.push_back(0.999);  /* lattice cap below the open boundary psi = 1 */
  }
  auto [t_lo, t_hi] = detail::free_param_interval(tag, cert, tau, p1, p2);
  if (!(t_lo < t_hi))
    throw FreeParamInfeasible("free-parameter interval of the case is empty");

  auto eval = [&](double t, double psi) -> std::optional<PrecisionResult> {
    double eps_free = 0.5, delta_free = static_cast<double>(p2) + 1;
    if (tag == CaseTag::unstable_jumps) eps_free = t;
    if (tag == CaseTag::unstable_flow) delta_free = t;
    try {
      PrecisionResult r;
      r.asf = derive_asf(cert, tau, p1, p2, eta, eps_free, delta_free);
      r.maxform = to_max_form(r.asf, psi, input_bound);
      return r;
    } catch (const FreeParamInfeasible&) {
      return std::nullopt;
    }
  };
  auto better = [](const PrecisionResult& a, const PrecisionResult& b) {
    auto key = [](const PrecisionResult& r) {
      return std::tuple<double, double, double, double>(
          r.maxform.eps_hat, r.asf.epsilon_free, r.asf.delta_free,
          r.maxform.psi);
    };
    return key(a) < key(b);
  };

  std::optional<PrecisionResult> best;
  const bool has_free = tag != CaseTag::both_stable;
  for (double psi : psis) {
    /* coarse pass: 64 interior points of the feasible interval */
    std::optional<PrecisionResult> loc;
    double loc_t = 0, step = (t_hi - t_lo) / 64;
    const int coarse = has_free ? 64 : 1;
    for (int i = 0; i < coarse; ++i) {
      double t = t_lo + (i + 0.5) * (t_hi - t_lo) / coarse;
      auto r = eval(t, psi);
      if (r && (!loc || better(*r, *loc))) { loc = r; loc_t = t; }
    }
    /* refinement: re-grid around the incumbent with shrinking steps */
    for (int round = 0; has_free && loc && round < 3; ++round) {
      double lo = std::max(t_lo, loc_t - step), hi = std::min(t_hi, loc_t + step);
      step = (hi - lo) / 32;
      for (int i = 0; i <= 32; ++i) {
        double t = lo + (hi - lo) * i / 32;
        if (!(t > t_lo && t < t_hi)) continue;
        auto r = eval(t, psi);
        if (r && better(*r, *loc)) { loc = r; loc_t = t; }
      }
    }
    if (loc && (!best || better(*loc, *best))) best = loc;
  }
  if (!best)
    throw FreeParamInfeasible(
        "no lattice point satisfies the case's strict inequality");
  return *best;
}

}  // namespace impsym
