#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atrfas/dataset.hpp"
#include "atrfas/losses.hpp"
#include "atrfas/metrics.hpp"
#include "atrfas/model.hpp"

namespace atrfas {

/// How dataset frames become network input.
enum class InputScheme { dn, no_dn, adjacent };

const char* to_string(InputScheme s);
InputScheme scheme_from_string(const std::string& s);

/// Frames entering the network under a scheme: 2(n0-2), n0, or n0-1.
int scheme_input_frames(InputScheme s, int n0);

enum class DepthLossKind { bce, softmax2d };

struct TrainConfig {
    int batch_size = 4;
    float lr = 1e-4f;
    float decay = 0.97f; // multiplicative, per epoch
    int epochs = 30;
    int n0 = 5;
    uint64_t seed = 12345;
    Mode mode = Mode::DGM;
    InputScheme scheme = InputScheme::dn;
    LossWeights weights;
    DepthLossKind depth_loss_kind = DepthLossKind::bce;
    bool input_standardize = false;
    float val_fraction = 0.1f;
    int experts = 3;
    int stem_channels = 16;
};

struct EpochLog {
    int epoch = 0;
    float lr = 0.0f;
    double l_c = 0.0, l_d = 0.0, l_g = 0.0;
    double acc = 0.0;
    double val_eer = 0.0;

    std::string tsv_line() const;
};

struct TrainResult {
    ModelConfig model_config;
    std::vector<std::pair<std::string, nd::Tensor>> best_state;
    std::vector<EpochLog> log;
    double best_val_eer = 1.0;
    double best_val_threshold = 0.5;
    int best_epoch = -1;

    AtrFasModel restore_best() const;
};

/// Network input for one sequence under a scheme (differential frames, raw
/// frames, or consecutive differences), optionally standardized per sample.
nd::Tensor prepare_input(const FlashSequence& seq, InputScheme scheme, bool standardize);

/// Stratified train/validation index split, deterministic in (seed,
/// fraction). At least one sample per class lands in validation. The same
/// split backs both training-time checkpoint selection and the dev
/// threshold at evaluation time.
std::pair<std::vector<int>, std::vector<int>> split_train_val_indices(const Dataset& data,
                                                                      float fraction,
                                                                      uint64_t seed);

/// Seeded end-to-end training with a stratified validation split carved from
/// `data`; tracks the best-validation-EER parameter snapshot.
TrainResult train(const Dataset& data, const TrainConfig& cfg);

/// Spoof probabilities of every sample (forward only, no tape).
std::vector<float> score_dataset(AtrFasModel& model, const Dataset& data, InputScheme scheme,
                                 bool standardize);

ScoreSet score_set_from(const std::vector<float>& scores, const Dataset& data);

} // namespace atrfas
