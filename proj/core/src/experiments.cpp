#include "atrfas/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <thread>

#include "atrfas/errors.hpp"

namespace atrfas {

std::vector<int> assign_folds(const Dataset& data, int k, uint64_t seed) {
    if (k < 2) throw ParamError("assign_folds: k must be >= 2");
    std::map<std::pair<int, int>, std::vector<int>> buckets;
    for (size_t i = 0; i < data.size(); ++i)
        buckets[{int(data.records[i].label), int(data.records[i].attack)}].push_back(int(i));

    std::vector<int> fold(data.size(), 0);
    RngStream root = RngStream(seed).split("kfold");
    for (auto& [key, idx] : buckets) {
        RngStream s = root.split(uint64_t(key.first * 97 + key.second));
        for (size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[s.below(i)]);
        for (size_t i = 0; i < idx.size(); ++i) fold[size_t(idx[i])] = int(i % size_t(k));
    }

    // Every fold must keep both classes, otherwise EER is undefined there.
    std::vector<std::array<int, 2>> counts(size_t(k), {0, 0});
    for (size_t i = 0; i < data.size(); ++i)
        ++counts[size_t(fold[i])][size_t(data.records[i].cls_label)];
    for (int f = 0; f < k; ++f)
        if (counts[size_t(f)][0] == 0 || counts[size_t(f)][1] == 0)
            throw ValueError("assign_folds: fold " + std::to_string(f) +
                             " is missing a class; reduce k or add samples");
    return fold;
}

namespace {

std::pair<double, double> mean_std(std::span<const double> xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(xs.size() - 1);
    return {mean, std::sqrt(var)};
}

FoldResult run_fold(const Dataset& data, const std::vector<int>& fold, int f,
                    const TrainConfig& cfg) {
    std::vector<int> train_idx, test_idx;
    for (size_t i = 0; i < data.size(); ++i)
        (fold[i] == f ? test_idx : train_idx).push_back(int(i));
    Dataset train_split = data.subset(train_idx);
    Dataset test_split = data.subset(test_idx);

    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = RngStream(cfg.seed).split("fold").split(uint64_t(f)).seed();
    TrainResult tr = train(train_split, fold_cfg);
    AtrFasModel model = tr.restore_best();

    std::vector<float> scores =
        score_dataset(model, test_split, cfg.scheme, cfg.input_standardize);
    FoldResult res;
    res.best_val_eer = tr.best_val_eer;
    res.report = evaluate_scores(score_set_from(scores, test_split), tr.best_val_threshold);
    return res;
}

} // namespace

KfoldSummary kfold_eval(const Dataset& data, int k, const TrainConfig& cfg, int jobs) {
    const std::vector<int> fold = assign_folds(data, k, cfg.seed);
    KfoldSummary summary;
    summary.folds.resize(size_t(k));

    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (int f = 0; f < k; ++f) summary.folds[size_t(f)] = run_fold(data, fold, f, cfg);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&, t]() {
                for (int f = t; f < k; f += jobs)
                    summary.folds[size_t(f)] = run_fold(data, fold, f, cfg);
            });
        for (auto& th : pool) th.join();
    }

    std::vector<double> eers, hters;
    for (const FoldResult& fr : summary.folds) {
        eers.push_back(fr.report.eer);
        hters.push_back(fr.report.hter);
    }
    std::tie(summary.eer_mean, summary.eer_std) = mean_std(eers);
    std::tie(summary.hter_mean, summary.hter_std) = mean_std(hters);
    return summary;
}

std::vector<AblationSetting> default_ablation_grid() {
    return {
        {"woMEMM", Mode::woMEMM, InputScheme::dn},
        {"Avg", Mode::Avg, InputScheme::dn},
        {"Sum", Mode::Sum, InputScheme::dn},
        {"Cat", Mode::Cat, InputScheme::dn},
        {"woMEMM_ATT", Mode::woMEMM_ATT, InputScheme::dn},
        {"ATT", Mode::ATT, InputScheme::dn},
        {"RG", Mode::RG, InputScheme::dn},
        {"RG_ATT", Mode::RG_ATT, InputScheme::dn},
        {"TG", Mode::TG, InputScheme::dn},
        {"DN", Mode::DGM, InputScheme::dn},
        {"woDN", Mode::DGM, InputScheme::no_dn},
        {"adjacent", Mode::DGM, InputScheme::adjacent},
    };
}

std::vector<AblationRow> run_ablation(const Dataset& data,
                                      std::span<const AblationSetting> settings, int k,
                                      const TrainConfig& base, int jobs) {
    std::vector<AblationRow> rows;
    for (const AblationSetting& s : settings) {
        TrainConfig cfg = base; // same seed everywhere: paired comparisons
        cfg.mode = s.mode;
        cfg.scheme = s.scheme;
        KfoldSummary summary = kfold_eval(data, k, cfg, jobs);
        rows.push_back({s.name, summary.hter_mean, summary.hter_std, summary.eer_mean,
                        summary.eer_std});
    }
    return rows;
}

double time_forward_ms(AtrFasModel& model, const nd::Tensor& input, int runs) {
    nd::NoGradGuard ng;
    model.forward(input); // warmup
    std::vector<double> ms;
    ms.reserve(size_t(runs));
    for (int i = 0; i < runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        model.forward(input);
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    return ms[ms.size() / 2];
}

std::vector<SweepRow> sweep_n0(const GenConfig& gen, std::span<const int> n0_values,
                               const TrainConfig& base, const std::string& work_dir,
                               int timing_runs) {
    std::vector<SweepRow> rows;
    for (int n0 : n0_values) {
        if (n0 < 3) throw ParamError("sweep_n0: n0 must be >= 3");
        GenConfig g = gen;
        g.n0 = n0;
        const std::string dir = work_dir + "/n0_" + std::to_string(n0);
        generate_dataset(g, dir);
        Dataset train_split = Dataset::load(dir + "/train");
        Dataset test_split = Dataset::load(dir + "/test");

        TrainConfig cfg = base;
        cfg.n0 = n0;
        TrainResult tr = train(train_split, cfg);
        AtrFasModel model = tr.restore_best();

        std::vector<float> scores =
            score_dataset(model, test_split, cfg.scheme, cfg.input_standardize);
        EvalReport rep =
            evaluate_scores(score_set_from(scores, test_split), tr.best_val_threshold);

        nd::Tensor probe =
            prepare_input(test_split.sequences.front(), cfg.scheme, cfg.input_standardize);
        SweepRow row;
        row.n0 = n0;
        row.n_frames = scheme_input_frames(cfg.scheme, n0);
        row.hter = rep.hter;
        row.eer = rep.eer;
        row.forward_ms = time_forward_ms(model, probe, timing_runs);
        rows.push_back(row);
    }
    return rows;
}

} // namespace atrfas
