#include "atrfas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "atrfas/errors.hpp"

namespace atrfas {

void ScoreSet::validate() const {
    if (scores.size() != labels.size())
        throw ShapeError("ScoreSet: scores and labels lengths disagree");
    if (scores.empty()) throw ValueError("ScoreSet: empty");
    bool has_live = false, has_spoof = false;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0)
            has_live = true;
        else if (labels[i] == 1)
            has_spoof = true;
        else
            throw ValueError("ScoreSet: labels must be 0 (live) or 1 (spoof)");
        if (!std::isfinite(scores[i])) throw ValueError("ScoreSet: non-finite score");
    }
    if (!has_live || !has_spoof)
        throw ValueError("ScoreSet: both classes are required");
}

std::pair<double, double> far_frr(const ScoreSet& s, double threshold) {
    s.validate();
    int64_t spoof = 0, live = 0, spoof_accepted = 0, live_rejected = 0;
    for (size_t i = 0; i < s.scores.size(); ++i) {
        if (s.labels[i] == 1) {
            ++spoof;
            if (double(s.scores[i]) < threshold) ++spoof_accepted;
        } else {
            ++live;
            if (double(s.scores[i]) >= threshold) ++live_rejected;
        }
    }
    return {double(spoof_accepted) / double(spoof), double(live_rejected) / double(live)};
}

namespace {

// Sorted per-class score arrays; rates via binary search so sweeps stay
// O(n log n).
struct SortedScores {
    std::vector<double> live, spoof;

    explicit SortedScores(const ScoreSet& s) {
        for (size_t i = 0; i < s.scores.size(); ++i)
            (s.labels[i] == 1 ? spoof : live).push_back(double(s.scores[i]));
        std::sort(live.begin(), live.end());
        std::sort(spoof.begin(), spoof.end());
    }
    double far(double t) const {
        const auto it = std::lower_bound(spoof.begin(), spoof.end(), t);
        return double(it - spoof.begin()) / double(spoof.size());
    }
    double frr(double t) const {
        const auto it = std::lower_bound(live.begin(), live.end(), t);
        return double(live.size() - (it - live.begin())) / double(live.size());
    }
};

std::vector<double> sweep_thresholds(const ScoreSet& s) {
    std::vector<double> distinct(s.scores.begin(), s.scores.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> t;
    t.reserve(distinct.size() * 2 + 2);
    const double lo = std::min(0.0, distinct.front());
    t.push_back(lo);
    for (size_t i = 0; i < distinct.size(); ++i) {
        if (i > 0) t.push_back(0.5 * (distinct[i - 1] + distinct[i]));
        t.push_back(distinct[i]);
    }
    // One step past the top score so the sweep reaches (far=1, frr=0).
    t.push_back(std::nextafter(distinct.back(), distinct.back() + 1.0) + 1e-9);
    t.erase(std::unique(t.begin(), t.end()), t.end());
    return t;
}

} // namespace

std::vector<RocPoint> roc_sweep(const ScoreSet& s) {
    s.validate();
    const SortedScores ss(s);
    std::vector<RocPoint> roc;
    for (double t : sweep_thresholds(s)) roc.push_back({t, ss.far(t), ss.frr(t)});
    return roc;
}

EerResult eer(const ScoreSet& s) {
    s.validate();
    const SortedScores ss(s);
    const std::vector<double> ts = sweep_thresholds(s);

    double best_gap = 2.0;
    size_t best = 0;
    std::vector<double> diff(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        const double far = ss.far(ts[i]);
        const double frr = ss.frr(ts[i]);
        diff[i] = far - frr;
        const double gap = std::fabs(diff[i]);
        if (gap < best_gap - 1e-15) { // ties resolve toward the lower threshold
            best_gap = gap;
            best = i;
        }
    }

    EerResult r;
    if (best_gap <= 1e-15) {
        r.threshold = ts[best];
    } else {
        // diff is non-decreasing; interpolate the threshold inside the
        // bracketing pair around the sign change.
        size_t hi = 0;
        while (hi < ts.size() && diff[hi] < 0.0) ++hi;
        if (hi == 0) {
            r.threshold = ts.front();
        } else if (hi == ts.size()) {
            r.threshold = ts.back();
        } else {
            const double d0 = diff[hi - 1], d1 = diff[hi];
            const double alpha = d0 / (d0 - d1);
            r.threshold = ts[hi - 1] + alpha * (ts[hi] - ts[hi - 1]);
        }
    }
    const auto [far, frr] = std::make_pair(ss.far(r.threshold), ss.frr(r.threshold));
    r.eer = 0.5 * (far + frr);
    return r;
}

double hter(const ScoreSet& test, double threshold) {
    const auto [far, frr] = far_frr(test, threshold);
    return 0.5 * (far + frr);
}

EvalReport evaluate_scores(const ScoreSet& test, double dev_threshold) {
    EvalReport rep;
    const EerResult e = eer(test);
    rep.eer = e.eer;
    rep.eer_threshold = e.threshold;
    rep.dev_threshold = dev_threshold;
    const auto [far, frr] = far_frr(test, dev_threshold);
    rep.far = far;
    rep.frr = frr;
    rep.hter = 0.5 * (far + frr);
    rep.roc = roc_sweep(test);
    return rep;
}

void write_roc_csv(const std::string& path, const std::vector<RocPoint>& roc) {
    std::ofstream os(path);
    if (!os) throw DataError("write_roc_csv: cannot open " + path);
    os << "threshold,far,frr\n";
    for (const RocPoint& p : roc) os << p.threshold << ',' << p.far << ',' << p.frr << '\n';
    if (!os) throw DataError("write_roc_csv: write failed for " + path);
}

} // namespace atrfas
