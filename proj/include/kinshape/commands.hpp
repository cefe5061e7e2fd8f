#pragma once

#include "kinshape/idapbc.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace kinshape {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,      // unexpected error
  kExitUsage = 2,        // bad arguments or configuration
  kExitDivergence = 3,   // closed loop left the bounded region
  kExitInvariant = 4,    // model/design invariant violated
  kExitVerifyBreach = 5  // a verification check exceeded its tolerance
};

struct CommandOptions {
  std::optional<Controller> controller;
  std::optional<std::filesystem::path> out_dir;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const std::filesystem::path& config, const CommandOptions& opt,
                 std::ostream& out, std::ostream& err);
int cmd_compare(const std::filesystem::path& config, const CommandOptions& opt,
                std::ostream& out, std::ostream& err);
int cmd_solve(const std::string& x_csv, const std::string& b_csv,
              std::ostream& out, std::ostream& err);
int cmd_verify(const std::filesystem::path& config, const CommandOptions& opt,
               std::ostream& out, std::ostream& err);

/// "1, -2.5,3" -> (1, -2.5, 3); throws std::invalid_argument.
Vec parse_csv_vector(const std::string& text);

}  // namespace kinshape
