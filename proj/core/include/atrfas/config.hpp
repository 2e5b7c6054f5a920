#pragma once

#include <string>
#include <vector>

#include "atrfas/experiments.hpp"
#include "atrfas/synthgen.hpp"
#include "atrfas/trainer.hpp"

namespace atrfas {

struct AblateParams {
    int k = 10;
    int epochs = -1; // -1 inherits [train] epochs
    std::vector<std::string> rows; // empty = full grid
};

struct SweepParams {
    std::vector<int> n0_values{3, 4, 5, 6, 7, 8};
    int epochs = -1;
    GenCounts train{24, 8, 8, 8};
    GenCounts test{12, 4, 4, 4};
    int timing_runs = 100;
};

/// Union of generator, training, ablation and sweep settings, populated from
/// a sectioned key=value file. Unknown sections or keys are hard errors;
/// every key has a default (see echo() of a default-constructed config).
struct RunConfig {
    GenConfig gen;
    TrainConfig train;
    AblateParams ablate;
    SweepParams sweep;

    bool gen_seed_set = false;
    bool train_seed_set = false;

    static RunConfig defaults();
    /// Defaults overridden by the file, then by ATRFAS_SEED for seeds that
    /// the file leaves unset.
    static RunConfig from_file(const std::string& path);
    static RunConfig parse(const std::string& text, const std::string& origin);

    /// Forces both seeds (CLI --seed wins over everything).
    void override_seed(uint64_t seed);
    void apply_env_seed_fallback();

    /// Fully-resolved key=value text, suitable for re-parsing.
    std::string echo() const;
};

} // namespace atrfas
