#pragma once

#include <string>
#include <vector>

#include "atrfas/config.hpp"

namespace atrfas {

/// Command implementations shared by the CLI binary and the test suites.
/// Each prints its report to stdout and throws typed errors; the CLI maps
/// those to exit codes.

void cmd_generate(const RunConfig& cfg, const std::string& out_dir);

void cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out_dir,
               bool force);

struct EvalOptions {
    std::string scores_file; // bypass: "score<TAB>label" rows, metrics only
    std::string roc_csv;     // empty = next to the checkpoint
};

void cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
              const EvalOptions& opts);

void cmd_ablate(const RunConfig& cfg, const std::string& data_dir,
                const std::vector<std::string>& rows, int jobs, const std::string& out_dir);

void cmd_sweep_n0(const RunConfig& cfg, const std::string& work_dir, int jobs);

/// Resolves the train split directory: `dir`/train when present, else `dir`.
std::string resolve_train_split(const std::string& dir);
std::string resolve_test_split(const std::string& dir);

} // namespace atrfas
