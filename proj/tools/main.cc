/*
 * impsym — grid abstractions and safety controllers for sampled plants with
 * impulsive state resets
 *
 *  certify     check the certificate numerically, derive the contraction and
 *              precision parameters
 *  abstract    build the symbolic model and dump its transition tables
 *  synthesize  solve the safety game and write the permissive controller
 *  simulate    run the controlled plant against random impulse schedules
 *  casestudy   the three bundled storage scenarios end to end
 */

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "impsym/cli.hh"
#include "impsym/config.hh"

int main(int argc, char** argv) {
  CLI::App app{"symbolic safety controllers for impulsive plants"};
  app.require_subcommand(1);

  std::string config_path, controller_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool caption_gains = false;

  CLI::App* certify = app.add_subcommand(
      "certify", "check the certificate and derive the precision");
  CLI::App* abstract_ = app.add_subcommand(
      "abstract", "build the symbolic model and dump its tables");
  CLI::App* synthesize = app.add_subcommand(
      "synthesize", "solve the safety game and write the controller");
  CLI::App* simulate = app.add_subcommand(
      "simulate", "run the controlled plant against random schedules");
  CLI::App* casestudy = app.add_subcommand(
      "casestudy", "run the three bundled storage scenarios end to end");

  for (CLI::App* sub : {certify, abstract_, synthesize, simulate})
    sub->add_option("--config", config_path, "run configuration file")
        ->required();
  for (CLI::App* sub : {certify, abstract_, synthesize, simulate, casestudy}) {
    sub->add_option("--out", out_dir, "output directory (default: out)");
    sub->add_option("--seed", seed, "override the configured seed");
  }
  simulate->add_option("--controller", controller_path,
                       "controller file written by synthesize")
      ->required();
  casestudy->add_flag("--case1-caption-params", caption_gains,
                      "use the c = d = 5 gain pair in scenario 1");

  CLI11_PARSE(app, argc, argv);

  try {
    auto load = [&]() {
      impsym::RunConfig c = impsym::load_config(config_path);
      if (seed) c.seed = *seed;
      return c;
    };
    if (certify->parsed()) return impsym::cmd_certify(load(), out_dir);
    if (abstract_->parsed()) return impsym::cmd_abstract(load(), out_dir);
    if (synthesize->parsed()) return impsym::cmd_synthesize(load(), out_dir);
    if (simulate->parsed())
      return impsym::cmd_simulate(load(), controller_path, out_dir);
    if (casestudy->parsed())
      return impsym::cmd_casestudy(out_dir, caption_gains, seed.value_or(1));
  } catch (const impsym::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const impsym::DwellViolated& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const impsym::FreeParamInfeasible& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const impsym::CaseExcluded& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const impsym::OutsideDomain& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
