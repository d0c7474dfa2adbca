#pragma once

#include <string>
#include <vector>

#include "voclip/io.hpp"
#include "voclip/kitti_eval.hpp"
#include "voclip/loss.hpp"

namespace voclip::cli {

/// Exit codes: 0 success, 1 usage/validation error, 2 verification failure.
int dispatch(int argc, const char* const* argv);
int dispatch(const std::vector<std::string>& args);

struct ToyRunResult {
  std::vector<LossBreakdown> steps;
  EvalReport report;
};

/// Seeded toy training run: synthesizes data, trains for cfg.train_steps,
/// evaluates on a held-out synthetic sequence and writes checkpoint, log and
/// report files under out_dir (created if missing). log_out, when non-null,
/// receives the exact log text.
ToyRunResult run_train_toy(const RunConfig& cfg, const std::string& out_dir, std::string* log_out);

/// Gradient-check suite used by the gradcheck subcommand. Prints one line
/// per component; returns the number of failures. corrupt_backward injects a
/// broken backward implementation (test hook).
int run_gradcheck(bool corrupt_backward, std::string& report_out);

}  // namespace voclip::cli
