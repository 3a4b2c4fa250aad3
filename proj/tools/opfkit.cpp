#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using opfkit::cli::Format;
  opfkit::cli::RunConfig cfg;

  CLI::App app{"Relaxed optimal power flow on radial networks"};
  app.require_subcommand(1);
  app.fallthrough();
  const std::map<std::string, Format> formats{{"text", Format::kText}, {"json", Format::kJson}};
  app.add_option("--format", cfg.format, "Output format")
      ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
  app.add_option("--feas-tol", cfg.feas_tol, "Solver feasibility tolerance")->check(CLI::PositiveNumber);
  app.add_option("--gap-tol", cfg.gap_tol, "Solver duality gap tolerance")->check(CLI::PositiveNumber);
  app.add_option("--max-iter", cfg.max_iter, "Solver iteration limit")->check(CLI::PositiveNumber);
  app.add_option("--exact-tol", cfg.exact_tol, "Relative cone gap counted as exact")->check(CLI::PositiveNumber);
  app.add_option("--preset", cfg.preset, "paper-peak | worst-case | bad-case")
      ->check(CLI::IsMember({"paper-peak", "worst-case", "bad-case"}));

  std::string net_path, solution_path;

  auto* validate = app.add_subcommand("validate", "Check a network file and report merges and topology");
  validate->add_option("network", net_path)->required();
  validate->add_option("-o,--output", cfg.output, "Write the merged per-unit network here");

  auto* conditions = app.add_subcommand("conditions", "Report r/x range, minimum interval and C1");
  conditions->add_option("network", net_path)->required();

  auto* solve = app.add_subcommand("solve", "Solve the SOCP relaxation and write a solution file");
  solve->add_option("network", net_path)->required();
  solve->add_option("--variant", cfg.variant, "socp | socp-m")->check(CLI::IsMember({"socp", "socp-m"}));
  solve->add_option("--objective", cfg.objective, "loss | sum-cost")->check(CLI::IsMember({"loss", "sum-cost"}));
  solve->add_option("-o,--output", cfg.output, "Solution file (default: stdout)");
  solve->add_flag("--enumerate-capacitors", cfg.enumerate_capacitors,
                  "Solve every capacitor on/off pattern instead of the convex hull");

  auto* epsilon = app.add_subcommand("epsilon", "Deviation of the linear voltage from power flow");
  epsilon->add_option("network", net_path)->required();
  auto* inj = epsilon->add_option("--injections", cfg.injections, "Injection file");
  auto* samples = epsilon->add_option("--samples", cfg.samples, "Uniform samples of the injection sets");
  inj->excludes(samples);
  epsilon->add_option("--seed", cfg.seed, "Sampling seed");

  auto* certify = app.add_subcommand("certify", "Run the improvement construction on a solution");
  certify->add_option("network", net_path)->required();
  certify->add_option("solution", solution_path)->required();
  certify->add_option("--variant", cfg.variant, "socp | socp-m")->check(CLI::IsMember({"socp", "socp-m"}));
  certify->add_option("--objective", cfg.objective, "loss | sum-cost")
      ->check(CLI::IsMember({"loss", "sum-cost"}));
  certify->add_option("--step", cfg.step, "Fixed step (default: line search from full slack)")
      ->check(CLI::PositiveNumber);

  auto* powerflow = app.add_subcommand("powerflow", "Backward/forward sweep power flow");
  powerflow->add_option("network", net_path)->required();
  powerflow->add_option("--injections", cfg.injections, "Injection file (default: peak operating point)");

  auto* emit = app.add_subcommand("emit-data", "Write the bundled data files");
  emit->add_option("-o,--output", cfg.output, "Directory (default: .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const opfkit::cli::Streams io{std::cout, std::cerr};
  try {
    if (*validate) return opfkit::cli::cmd_validate(cfg, net_path, io);
    if (*conditions) return opfkit::cli::cmd_conditions(cfg, net_path, io);
    if (*solve) return opfkit::cli::cmd_solve(cfg, net_path, io);
    if (*epsilon) return opfkit::cli::cmd_epsilon(cfg, net_path, io);
    if (*certify) return opfkit::cli::cmd_certify(cfg, net_path, solution_path, io);
    if (*powerflow) return opfkit::cli::cmd_powerflow(cfg, net_path, io);
    if (*emit) return opfkit::cli::cmd_emit_data(cfg, io);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
