#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace opfkit::cli {

enum class Format { kText, kJson };

struct RunConfig {
  Format format = Format::kText;
  double feas_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iter = 100;
  double exact_tol = 1e-6;
  std::optional<std::string> preset;
  std::string variant = "socp-m";
  std::string objective = "loss";
  // epsilon policy; at most one of injections / samples
  std::string injections;
  std::size_t samples = 0;
  std::uint64_t seed = 1;
  bool enumerate_capacitors = false;
  std::optional<double> step;  // certify; line search when empty
  std::string output;          // solve, validate: file; emit-data: directory
};

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

int cmd_validate(const RunConfig& cfg, const std::string& net_path, Streams io);
int cmd_conditions(const RunConfig& cfg, const std::string& net_path, Streams io);
int cmd_solve(const RunConfig& cfg, const std::string& net_path, Streams io);
int cmd_epsilon(const RunConfig& cfg, const std::string& net_path, Streams io);
int cmd_certify(const RunConfig& cfg, const std::string& net_path, const std::string& solution_path,
                Streams io);
int cmd_powerflow(const RunConfig& cfg, const std::string& net_path, Streams io);
int cmd_emit_data(const RunConfig& cfg, Streams io);

}  // namespace opfkit::cli
