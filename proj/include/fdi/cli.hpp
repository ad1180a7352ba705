#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace fdi::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsageError = 2;
inline constexpr int kRuntimeError = 3;

struct SimulateArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // falls back to output.scores in the config
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_roc(const std::filesystem::path& scores, const std::filesystem::path& roc_out, std::ostream& out,
            std::ostream& err);
int cmd_gen_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, const std::filesystem::path& path,
                   std::ostream& out, std::ostream& err);
int cmd_estimate(const std::filesystem::path& config, std::optional<std::uint64_t> seed, std::ostream& out,
                 std::ostream& err);

/// Parses `fdi <subcommand> ...` and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fdi::cli
