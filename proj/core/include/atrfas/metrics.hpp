#pragma once

#include <string>
#include <vector>

namespace atrfas {

/// Scores are spoof probabilities; label 1 = spoof, 0 = live.
/// Decision rule, fixed project-wide: a sample is accepted as live when its
/// score is strictly below the threshold.
struct ScoreSet {
    std::vector<float> scores;
    std::vector<int> labels;

    void validate() const; // equal lengths, labels in {0,1}, both classes
};

/// far = fraction of spoof samples accepted as live (score < threshold);
/// frr = fraction of live samples rejected (score >= threshold).
std::pair<double, double> far_frr(const ScoreSet& s, double threshold);

struct RocPoint {
    double threshold, far, frr;
};

/// far/frr at every distinct score, the midpoints between them, and both
/// boundary thresholds; sorted by threshold. Under the decision rule FAR is
/// non-decreasing and FRR non-increasing along the sweep.
std::vector<RocPoint> roc_sweep(const ScoreSet& s);

struct EerResult {
    double eer = 0.0;
    double threshold = 0.0;
};

/// Operating point where FAR and FRR cross. The threshold is linearly
/// interpolated between the bracketing sweep points (ties resolved toward
/// the lower threshold) and the reported rate is (far+frr)/2 evaluated at
/// that threshold, so hter(s, eer(s).threshold) == eer(s).eer.
EerResult eer(const ScoreSet& s);

/// (far + frr) / 2 at a threshold fixed elsewhere (on a dev split).
double hter(const ScoreSet& test, double threshold);

struct EvalReport {
    double eer = 0.0;
    double eer_threshold = 0.0;
    double hter = 0.0; // at dev_threshold
    double far = 0.0, frr = 0.0;
    double dev_threshold = 0.0;
    std::vector<RocPoint> roc;
};

EvalReport evaluate_scores(const ScoreSet& test, double dev_threshold);

void write_roc_csv(const std::string& path, const std::vector<RocPoint>& roc);

} // namespace atrfas
