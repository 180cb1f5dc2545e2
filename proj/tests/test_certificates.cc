/* certificates, dwell conditions, and the derived contraction parameters */

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "impsym/certificates.hh"
#include "impsym/common.hh"
#include "impsym/comparison.hh"
#include "impsym/dynamics.hh"

using namespace impsym;
using Catch::Approx;

namespace {

ImpulsiveSystem make_storage(StorageParams p, double tau, int p1, int p2,
                             vec lo, vec hi) {
  ImpulsiveSystem sys;
  sys.dim = lo.size();
  auto fields = storage_delivery_fields(p);
  sys.flow = fields.first;
  sys.jump = fields.second;
  sys.tau = tau;
  sys.p1 = p1;
  sys.p2 = p2;
  sys.inputs = {{-1}, {0}, {1}};
  sys.region = {Box(lo, hi)};
  return sys;
}

StabilityCertificate case1_cert() {
  return linear_infnorm_certificate(-0.2, 0.9, 10, 10);
}
StabilityCertificate case2_cert() {
  return linear_infnorm_certificate(-0.3, 1.01, 15, 15);
}
StabilityCertificate case3_cert() {
  return linear_infnorm_certificate(0.2, 0.85, 15, 15);
}

}  // namespace

TEST_CASE("comparison functions evaluate, scale, and invert") {
  ComparisonFunction z = ComparisonFunction::zero();
  REQUIRE(z(0.0) == 0.0);
  REQUIRE(z(5.0) == 0.0);
  REQUIRE(z.is_zero());
  REQUIRE_THROWS_AS(z.inverse(), OutOfDomain);

  ComparisonFunction lin = ComparisonFunction::linear(10);
  REQUIRE(lin(2.5) == Approx(25.0).margin(1e-12));
  REQUIRE(lin.is_linear());
  REQUIRE(lin.gain() == 10.0);
  REQUIRE(lin.inverse()(25.0) == Approx(2.5).margin(1e-12));
  REQUIRE(lin.scaled(0.5)(2.0) == Approx(10.0).margin(1e-12));

  ComparisonFunction sq = ComparisonFunction::power(3, 2);
  REQUIRE(sq(2.0) == Approx(12.0).margin(1e-12));
  REQUIRE(sq.inverse()(12.0) == Approx(2.0).margin(1e-12));
  REQUIRE(sq.inverse()(sq(0.37)) == Approx(0.37).margin(1e-12));

  REQUIRE(ComparisonFunction::identity()(0.7) == 0.7);
  REQUIRE_THROWS_AS(ComparisonFunction::power(0, 2), OutOfDomain);
  REQUIRE_THROWS_AS(ComparisonFunction::power(1, 0), OutOfDomain);
  REQUIRE_THROWS_AS(lin(-1.0), OutOfDomain);
  REQUIRE_THROWS_AS(lin.scaled(0.0), OutOfDomain);
}

TEST_CASE("the distance certificate of the storage plant checks out") {
  ImpulsiveSystem sys = make_storage({-0.2, 0.9, 10, 10}, 0.2, 1, 5, {25}, {50});
  CertificateReport rep = verify_certificate(case1_cert(), sys, 2000, 42);
  REQUIRE(rep.pass);
  REQUIRE(rep.samples == 2000);
  REQUIRE(rep.sandwich_max_violation <= 1e-6);
  REQUIRE(rep.flow_max_violation <= 1e-6);
  REQUIRE(rep.jump_max_violation <= 1e-6);
  REQUIRE(rep.triangle_max_violation <= 1e-6);
}

TEST_CASE("a squared-distance certificate passes via numeric gradients") {
  /* V = (x - y)^2 with Young-split constants on the bounded region; no
   * analytic gradient, so the flow check runs on central differences */
  ImpulsiveSystem sys = make_storage({-0.2, 0.9, 10, 10}, 0.2, 1, 5, {25}, {50});
  StabilityCertificate cert;
  cert.V = [](const vec& x, const vec& y) {
    double p = x[0] - y[0];
    return p * p;
  };
  cert.alpha_lower = ComparisonFunction::power(1, 2);
  cert.alpha_upper = ComparisonFunction::power(1, 2);
  cert.kappa_c = 0.2;
  cert.kappa_d = 0.9;
  cert.rho_uc = ComparisonFunction::power(500, 2);
  cert.rho_ud = ComparisonFunction::power(1000, 2);
  /* triangle slack 2*diam + diam on a region of diameter 25 */
  cert.gamma_hat = ComparisonFunction::linear(75);
  CertificateReport rep = verify_certificate(cert, sys, 2000, 42);
  REQUIRE(rep.pass);
}

TEST_CASE("overclaimed constants are caught by sampling") {
  ImpulsiveSystem sys = make_storage({-0.2, 0.9, 10, 10}, 0.2, 1, 5, {25}, {50});
  StabilityCertificate wrong = case1_cert();
  wrong.kappa_d = 0.5;  /* jumps scale by 0.9, not 0.5 */
  CertificateReport rep = verify_certificate(wrong, sys, 2000, 42);
  REQUIRE_FALSE(rep.pass);
  REQUIRE(rep.jump_max_violation > 1e-6);
}

TEST_CASE("dwell margins carry their known values") {
  /* contracting flow, contracting jumps */
  REQUIRE(check_dwell(0.9, 0.2, 0.2, 1, 5));
  double lk = std::log(0.9);
  REQUIRE(lk - 0.2 * 0.2 * 1 == Approx(-0.14536051565782629).margin(1e-12));
  /* expanding jumps need enough flow between impulses */
  REQUIRE(check_dwell(1.01, 0.3, 0.2, 5, 7));
  REQUIRE(std::log(1.01) - 0.3 * 0.2 * 5 ==
          Approx(-0.29004966914683192).margin(1e-12));
  REQUIRE(std::log(1.01) - 0.3 * 0.2 * 7 ==
          Approx(-0.41004966914683192).margin(1e-12));
  /* expanding flow, contracting jumps */
  REQUIRE(check_dwell(0.85, -0.2, 0.2, 1, 2));
  REQUIRE(std::log(0.85) - (-0.2) * 0.2 * 1 ==
          Approx(-0.12251892949777494).margin(1e-12));
  REQUIRE(std::log(0.85) - (-0.2) * 0.2 * 2 ==
          Approx(-0.082518929497774939).margin(1e-12));
  /* too much expansion */
  REQUIRE_FALSE(check_dwell(1.2, 0.2, 0.2, 1, 5));
  REQUIRE_THROWS_AS(check_dwell(0.0, 0.2, 0.2, 1, 5), OutOfDomain);
  REQUIRE_THROWS_AS(check_dwell(0.9, 0.2, 0.0, 1, 5), OutOfDomain);
  REQUIRE_THROWS_AS(check_dwell(0.9, 0.2, 0.2, 3, 2), OutOfDomain);
}

TEST_CASE("the decay weight is stable through zero") {
  REQUIRE(decay_weight(0.0, 0.2) == 0.2);
  REQUIRE(decay_weight(0.2, 0.2) ==
          Approx(0.19605280423838395).margin(1e-15));
  REQUIRE(std::abs(decay_weight(1e-12, 0.2) - 0.2) <= 1e-12);
  REQUIRE(std::abs(decay_weight(-1e-12, 0.2) - 0.2) <= 1e-12);
  REQUIRE(decay_weight(-0.2, 0.2) > 0.2);  /* expansion costs more */
}

TEST_CASE("the gap bound combines decay and input mismatch") {
  StabilityCertificate cert = case1_cert();
  REQUIRE(flow_mismatch_bound(cert, 1.0, 0.2, 1.0) ==
          Approx(2.921317481536163).margin(1e-12));
  /* no mismatch: pure decay */
  REQUIRE(flow_mismatch_bound(cert, 1.0, 0.2, 0.0) ==
          Approx(0.960789439152323).margin(1e-12));
  REQUIRE_THROWS_AS(flow_mismatch_bound(cert, -1.0, 0.2, 0.0), OutOfDomain);
  REQUIRE_THROWS_AS(flow_mismatch_bound(cert, 1.0, 0.0, 0.0), OutOfDomain);
}

TEST_CASE("the constant sign pattern picks the derivation branch") {
  REQUIRE(classify_case(0.9, 0.2) == CaseTag::both_stable);
  REQUIRE(classify_case(1.01, 0.3) == CaseTag::unstable_jumps);
  REQUIRE(classify_case(1.0, 0.3) == CaseTag::unstable_jumps);
  REQUIRE(classify_case(0.85, -0.2) == CaseTag::unstable_flow);
  REQUIRE(classify_case(0.85, 0.0) == CaseTag::unstable_flow);
  REQUIRE_THROWS_AS(classify_case(1.1, -0.2), CaseExcluded);
  REQUIRE_THROWS_AS(classify_case(1.0, 0.0), CaseExcluded);
  REQUIRE(to_string(CaseTag::both_stable) == "both-stable");
  REQUIRE(to_string(CaseTag::unstable_jumps) == "unstable-jumps");
  REQUIRE(to_string(CaseTag::unstable_flow) == "unstable-flow");
}

TEST_CASE("contraction parameters, both constants contracting") {
  AsfParameters a = derive_asf(case1_cert(), 0.2, 1, 5, 0.01, 0.5, 7);
  REQUIRE(a.tag == CaseTag::both_stable);
  REQUIRE(a.lambda_f == Approx(0.9607894391523232).margin(1e-12));
  REQUIRE(a.sigma_tilde == a.lambda_f);
  REQUIRE(a.eps_tilde == Approx(0.01).margin(1e-15));
  REQUIRE(a.rho_u_tilde.is_zero());
  for (int l = 0; l <= 5; ++l) REQUIRE(a.mode_weight(l) == 1.0);
  REQUIRE(a.alpha_tilde(1.0) == Approx(1.0).margin(1e-15));
  REQUIRE(a.V);
  REQUIRE(a.weighted({30}, {30.5}, 3) == Approx(0.5).margin(1e-12));
}

TEST_CASE("contraction parameters, expanding jumps") {
  AsfParameters a = derive_asf(case2_cert(), 0.2, 5, 7, 0.01, 0.5, 8);
  REQUIRE(a.tag == CaseTag::unstable_jumps);
  REQUIRE(a.lambda_f == Approx(0.97044553354850818).margin(1e-12));
  REQUIRE(a.eps_tilde == Approx(0.012712491503214047).margin(1e-12));
  /* the mode weight grows along the flow and is largest at the gap end */
  REQUIRE(a.mode_weight(0) == 1.0);
  REQUIRE(a.mode_weight(7) > a.mode_weight(3));
  MaxFormParameters mf = to_max_form(a, 0.99, 1.0);
  REQUIRE(mf.eps_hat == Approx(0.37396261272765883).margin(1e-12));
  /* the free parameter must clear the feasibility threshold 0.03317 */
  REQUIRE_THROWS_AS(derive_asf(case2_cert(), 0.2, 5, 7, 0.01, 0.01, 8),
                    FreeParamInfeasible);
}

TEST_CASE("contraction parameters, expanding flow") {
  AsfParameters a = derive_asf(case3_cert(), 0.2, 1, 2, 0.01, 0.5, 2.5);
  REQUIRE(a.tag == CaseTag::unstable_flow);
  REQUIRE(a.lambda_f == Approx(0.97530252720556706).margin(1e-12));
  REQUIRE(a.eps_tilde == Approx(0.01).margin(1e-15));
  /* the mode weight shrinks along the flow from its jump-time reset */
  REQUIRE(a.mode_weight(0) == 1.0);
  REQUIRE(a.mode_weight(2) < a.mode_weight(1));
  MaxFormParameters mf = to_max_form(a, 0.99, 1.0);
  REQUIRE(mf.eps_hat == Approx(0.46577604526411035).margin(1e-12));
  /* delta beyond the feasible range ln(kd)/(kc tau) = 4.063 */
  REQUIRE_THROWS_AS(derive_asf(case3_cert(), 0.2, 1, 2, 0.01, 0.5, 5.0),
                    FreeParamInfeasible);
}

TEST_CASE("derivation rejects bad parameters outright") {
  REQUIRE_THROWS_AS(derive_asf(case1_cert(), 0.2, 1, 5, 0.0, 0.5, 7),
                    OutOfDomain);  /* eta */
  REQUIRE_THROWS_AS(derive_asf(case1_cert(), 0.2, 1, 5, 0.01, 1.5, 7),
                    OutOfDomain);  /* epsilon outside (0,1) */
  REQUIRE_THROWS_AS(derive_asf(case1_cert(), 0.2, 1, 5, 0.01, 0.5, 4),
                    OutOfDomain);  /* delta <= p2 */
  StabilityCertificate hot = case1_cert();
  hot.kappa_d = 1.2;
  hot.kappa_c = 0.2;
  REQUIRE_THROWS_AS(derive_asf(hot, 0.2, 1, 5, 0.01, 0.5, 7), DwellViolated);
}

TEST_CASE("tracking a concrete input costs an additive mismatch term") {
  AsfParameters a = derive_asf(case1_cert(), 0.2, 1, 5, 0.01, 0.5, 7);
  AsfParameters r = derive_reverse_asf(a, case1_cert(), 1.0);
  REQUIRE(r.eps_tilde == Approx(10.01).margin(1e-12));
  REQUIRE(r.sigma_tilde == a.sigma_tilde);
  AsfParameters r0 = derive_reverse_asf(a, case1_cert(), 0.0);
  REQUIRE(r0.eps_tilde == Approx(0.01).margin(1e-15));
  REQUIRE_THROWS_AS(derive_reverse_asf(a, case1_cert(), -1.0), OutOfDomain);
}

TEST_CASE("max-form conversion blends the contraction with psi") {
  AsfParameters a;
  a.sigma_tilde = 0.5;
  a.eps_tilde = 1.0;
  a.alpha_tilde = ComparisonFunction::identity();
  a.rho_u_tilde = ComparisonFunction::zero();
  MaxFormParameters mf = to_max_form(a, 0.5, 1.0);
  REQUIRE(mf.sigma == Approx(0.75).margin(1e-15));
  REQUIRE(mf.eps == Approx(4.0).margin(1e-15));
  REQUIRE(mf.rho.is_zero());
  REQUIRE(mf.eps_hat == Approx(4.0).margin(1e-15));
  REQUIRE_THROWS_AS(to_max_form(a, 0.0, 1.0), OutOfDomain);
  REQUIRE_THROWS_AS(to_max_form(a, 1.0, 1.0), OutOfDomain);
}

TEST_CASE("precision search reproduces the pinned-psi values") {
  PrecisionResult r = optimize_precision(case1_cert(), 0.2, 1, 5, 0.01, 1.0,
                                         0.99);
  REQUIRE(r.maxform.eps_hat == Approx(0.2576094267115942).margin(1e-12));
  /* without a pin the search takes the largest lattice psi */
  PrecisionResult f = optimize_precision(case1_cert(), 0.2, 1, 5, 0.01, 1.0);
  REQUIRE(f.maxform.psi == Approx(0.999).margin(1e-15));
  REQUIRE(f.maxform.eps_hat == Approx(0.2552886210655438).margin(1e-12));

  PrecisionResult r2 = optimize_precision(case2_cert(), 0.2, 5, 7, 0.01, 1.0,
                                          0.99);
  REQUIRE(r2.maxform.eps_hat <= 0.37396261272765883);
  REQUIRE(r2.asf.lambda_f < 1.0);

  PrecisionResult r3 = optimize_precision(case3_cert(), 0.2, 1, 2, 0.01, 1.0,
                                          0.99);
  REQUIRE(r3.maxform.eps_hat <= 0.46577604526411035);
  REQUIRE(r3.asf.lambda_f < 1.0);

  StabilityCertificate hot = case1_cert();
  hot.kappa_d = 1.2;
  hot.kappa_c = 0.2;
  REQUIRE_THROWS_AS(optimize_precision(hot, 0.2, 1, 5, 0.01, 1.0, 0.99),
                    DwellViolated);
}

TEST_CASE("deviation bounds track the mode weight") {
  AsfParameters a1 = derive_asf(case1_cert(), 0.2, 1, 5, 0.01, 0.5, 7);
  for (int l = 0; l <= 5; ++l)
    REQUIRE(a1.deviation_bound(0.25, l) == Approx(0.25).margin(1e-12));
  AsfParameters a2 = derive_asf(case2_cert(), 0.2, 5, 7, 0.01, 0.5, 8);
  REQUIRE(a2.deviation_bound(0.25, 0) == Approx(0.25).margin(1e-12));
  REQUIRE(a2.deviation_bound(0.25, 7) < a2.deviation_bound(0.25, 5));
}
