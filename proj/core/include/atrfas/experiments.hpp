#pragma once

#include <string>
#include <vector>

#include "atrfas/synthgen.hpp"
#include "atrfas/trainer.hpp"

namespace atrfas {

struct FoldResult {
    EvalReport report;
    double best_val_eer = 1.0;
};

struct KfoldSummary {
    std::vector<FoldResult> folds;
    double eer_mean = 0.0, eer_std = 0.0;
    double hter_mean = 0.0, hter_std = 0.0;
};

/// Deterministic stratified fold assignment by (label, attack type).
std::vector<int> assign_folds(const Dataset& data, int k, uint64_t seed);

/// Trains a fresh model per fold (val split inside the training portion
/// provides the HTER threshold) and aggregates mean +- sample std.
/// jobs > 1 runs folds on worker threads; outputs are identical to serial.
KfoldSummary kfold_eval(const Dataset& data, int k, const TrainConfig& cfg, int jobs = 1);

struct AblationSetting {
    std::string name;
    Mode mode = Mode::DGM;
    InputScheme scheme = InputScheme::dn;
};

/// The nine mixture settings plus the three normalization variants.
std::vector<AblationSetting> default_ablation_grid();

struct AblationRow {
    std::string name;
    double hter_mean = 0.0, hter_std = 0.0;
    double eer_mean = 0.0, eer_std = 0.0;
};

/// One kfold_eval per setting with shared seeds, so rows are paired.
std::vector<AblationRow> run_ablation(const Dataset& data,
                                      std::span<const AblationSetting> settings, int k,
                                      const TrainConfig& base, int jobs = 1);

struct SweepRow {
    int n0 = 0;
    int n_frames = 0; // frames entering the network, 2*(n0-2)
    double hter = 0.0, eer = 0.0;
    double forward_ms = 0.0; // median single-sequence forward time
};

/// Renders matched datasets per n0 under work_dir, trains, evaluates and
/// times the forward pass (median of `timing_runs`).
std::vector<SweepRow> sweep_n0(const GenConfig& gen, std::span<const int> n0_values,
                               const TrainConfig& base, const std::string& work_dir,
                               int timing_runs = 100);

/// Median single-sequence forward wall time in milliseconds.
double time_forward_ms(AtrFasModel& model, const nd::Tensor& input, int runs);

} // namespace atrfas
