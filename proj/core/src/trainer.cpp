#include "atrfas/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "atrfas/diffnorm.hpp"
#include "atrfas/errors.hpp"
#include "atrfas/optim.hpp"

namespace atrfas {

const char* to_string(InputScheme s) {
    switch (s) {
        case InputScheme::dn: return "dn";
        case InputScheme::no_dn: return "no_dn";
        case InputScheme::adjacent: return "adjacent";
    }
    return "?";
}

InputScheme scheme_from_string(const std::string& s) {
    if (s == "dn") return InputScheme::dn;
    if (s == "no_dn") return InputScheme::no_dn;
    if (s == "adjacent") return InputScheme::adjacent;
    throw ParamError("unknown input scheme '" + s + "'");
}

int scheme_input_frames(InputScheme s, int n0) {
    switch (s) {
        case InputScheme::dn: return 2 * (n0 - 2);
        case InputScheme::no_dn: return n0;
        case InputScheme::adjacent: return n0 - 1;
    }
    return 0;
}

nd::Tensor prepare_input(const FlashSequence& seq, InputScheme scheme, bool standardize) {
    nd::Tensor x;
    switch (scheme) {
        case InputScheme::dn:
            x = apply_diffnorm(seq.frames, build_diff_matrix(seq.n0()));
            break;
        case InputScheme::no_dn:
            x = seq.frames;
            break;
        case InputScheme::adjacent:
            x = apply_diffnorm(seq.frames, build_adjacent_diff_matrix(seq.n0()));
            break;
    }
    if (standardize) {
        auto v = x.data();
        double mean = 0.0;
        for (float f : v) mean += f;
        mean /= double(v.size());
        double var = 0.0;
        for (float f : v) var += (f - mean) * (f - mean);
        var /= double(v.size());
        const float inv = float(1.0 / (std::sqrt(var) + 1e-6));
        std::vector<float> out(v.size());
        for (size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - float(mean)) * inv;
        x = nd::Tensor::from(x.shape(), std::move(out));
    }
    return x;
}

std::string EpochLog::tsv_line() const {
    std::ostringstream os;
    os << epoch << '\t' << lr << '\t' << l_c << '\t' << l_d << '\t' << l_g << '\t' << acc << '\t'
       << val_eer;
    return os.str();
}

AtrFasModel TrainResult::restore_best() const {
    AtrFasModel model(model_config, RngStream(0));
    model.load_state(best_state);
    return model;
}

namespace {

struct Prepared {
    std::vector<nd::Tensor> inputs;        // network input per sample
    std::vector<nd::Tensor> depth_targets; // [H',W']
    std::vector<nd::Tensor> gate_targets;  // [M]
    std::vector<float> cls;                // 0/1
};

Prepared prepare_all(const Dataset& data, const TrainConfig& cfg) {
    Prepared p;
    const size_t n = data.size();
    p.inputs.reserve(n);
    p.depth_targets.reserve(n);
    p.gate_targets.reserve(n);
    p.cls.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        p.inputs.push_back(prepare_input(data.sequences[i], cfg.scheme, cfg.input_standardize));
        p.depth_targets.push_back(data.depth_labels[i]);
        p.gate_targets.push_back(
            make_gate_target(data.records[i].label, data.records[i].attack, cfg.experts));
        p.cls.push_back(float(data.records[i].cls_label));
    }
    return p;
}

} // namespace

std::pair<std::vector<int>, std::vector<int>> split_train_val_indices(const Dataset& data,
                                                                      float fraction,
                                                                      uint64_t seed) {
    std::vector<int> live, spoof;
    for (size_t i = 0; i < data.size(); ++i)
        (data.records[i].label == Label::live ? live : spoof).push_back(int(i));
    if (live.empty() || spoof.empty())
        throw ConfigError("train: dataset must contain both live and spoof samples");

    RngStream rng = RngStream(seed).split("val_split");
    std::vector<int> tr, val;
    for (std::vector<int>* bucket : {&live, &spoof}) {
        RngStream s = rng.split(bucket == &live ? "live" : "spoof");
        for (size_t i = bucket->size(); i > 1; --i)
            std::swap((*bucket)[i - 1], (*bucket)[s.below(i)]);
        const size_t take =
            std::max<size_t>(1, size_t(std::ceil(fraction * double(bucket->size()))));
        for (size_t i = 0; i < bucket->size(); ++i)
            (i < take ? val : tr).push_back((*bucket)[i]);
    }
    std::sort(tr.begin(), tr.end());
    std::sort(val.begin(), val.end());
    return {tr, val};
}

std::vector<float> score_dataset(AtrFasModel& model, const Dataset& data, InputScheme scheme,
                                 bool standardize) {
    nd::NoGradGuard ng;
    std::vector<float> scores;
    scores.reserve(data.size());
    for (const FlashSequence& seq : data.sequences)
        scores.push_back(model.forward(prepare_input(seq, scheme, standardize)).prob.item());
    return scores;
}

ScoreSet score_set_from(const std::vector<float>& scores, const Dataset& data) {
    ScoreSet s;
    s.scores = scores;
    for (const SampleRecord& r : data.records) s.labels.push_back(r.cls_label);
    return s;
}

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
    if (data.size() == 0) throw ConfigError("train: empty dataset");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(cfg.decay > 0.0f && cfg.decay <= 1.0f))
        throw ConfigError("train: decay must be in (0, 1]");
    if (cfg.n0 != data.n0)
        throw ConfigError("train: config n0 " + std::to_string(cfg.n0) +
                          " disagrees with dataset n0 " + std::to_string(data.n0));

    RngStream root(cfg.seed);
    ModelConfig mc;
    mc.input_frames = scheme_input_frames(cfg.scheme, cfg.n0);
    mc.in_channels = 1;
    mc.height = data.height;
    mc.width = data.width;
    mc.experts = cfg.experts;
    mc.stem_channels = cfg.stem_channels;
    mc.mode = cfg.mode;
    AtrFasModel model(mc, root.split("init"));

    auto [train_idx, val_idx] = split_train_val_indices(data, cfg.val_fraction, cfg.seed);
    Dataset train_data = data.subset(train_idx);
    Dataset val_data = data.subset(val_idx);
    Prepared prep = prepare_all(train_data, cfg);

    // Gate supervision only exists in the type-gated modes.
    LossWeights w = cfg.weights;
    if (!mode_uses_type_gate(cfg.mode)) w.lambda_g = 0.0f;

    Adam opt(model.parameter_tensors(), cfg.lr);
    RngStream shuffle_root = root.split("shuffle");
    RngStream rg_root = root.split("rg_logits");

    TrainResult result;
    result.model_config = mc;
    result.best_state = model.state_snapshot();

    auto eval_val = [&]() {
        std::vector<float> scores =
            score_dataset(model, val_data, cfg.scheme, cfg.input_standardize);
        return eer(score_set_from(scores, val_data));
    };
    if (cfg.epochs == 0) {
        const EerResult e0 = eval_val();
        result.best_val_eer = e0.eer;
        result.best_val_threshold = e0.threshold;
        result.best_epoch = 0;
        return result;
    }

    float lr = cfg.lr;
    const size_t ntrain = prep.inputs.size();
    std::vector<int> order(ntrain);
    for (size_t i = 0; i < ntrain; ++i) order[i] = int(i);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        opt.set_lr(lr);
        RngStream es = shuffle_root.split(uint64_t(epoch));
        for (size_t i = ntrain; i > 1; --i) std::swap(order[i - 1], order[es.below(i)]);

        double sum_lc = 0.0, sum_ld = 0.0, sum_lg = 0.0;
        int64_t correct = 0;
        int batches = 0;
        for (size_t start = 0; start < ntrain; start += size_t(cfg.batch_size)) {
            const size_t stop = std::min(ntrain, start + size_t(cfg.batch_size));
            const int bs = int(stop - start);

            // RG modes share one logit draw per batch.
            nd::Tensor rg;
            const bool random_gate = mode_uses_random_gate(cfg.mode);
            if (random_gate) {
                std::vector<float> v(size_t(cfg.experts));
                for (float& vv : v) vv = rg_root.normal();
                rg = nd::Tensor::from(nd::Shape{cfg.experts}, std::move(v));
            }

            std::vector<nd::Tensor> probs, depths, gates;
            std::vector<float> cls_batch;
            for (size_t k = start; k < stop; ++k) {
                const int idx = order[k];
                ForwardOutputs fo =
                    model.forward(prep.inputs[size_t(idx)], random_gate ? &rg : nullptr);
                probs.push_back(nd::reshape(fo.prob, nd::Shape{1}));
                const nd::Shape& ds = fo.depth.shape();
                depths.push_back(nd::reshape(fo.depth, nd::Shape{1, ds[0], ds[1]}));
                if (w.lambda_g > 0.0f)
                    gates.push_back(nd::reshape(fo.gate_logits, nd::Shape{1, cfg.experts}));
                cls_batch.push_back(prep.cls[size_t(idx)]);
                if ((fo.prob.item() >= 0.5f) == (prep.cls[size_t(idx)] == 1.0f)) ++correct;
            }

            nd::Tensor probs_b = probs.size() == 1 ? probs[0] : nd::concat(probs, 0);
            nd::Tensor depths_b = depths.size() == 1 ? depths[0] : nd::concat(depths, 0);
            nd::Tensor cls_t = nd::Tensor::from(nd::Shape{bs}, cls_batch);

            std::vector<float> dtgt;
            dtgt.reserve(size_t(bs) * size_t(data.label_h) * size_t(data.label_w));
            std::vector<float> gtgt;
            for (size_t k = start; k < stop; ++k) {
                const int idx = order[k];
                auto dv = prep.depth_targets[size_t(idx)].data();
                dtgt.insert(dtgt.end(), dv.begin(), dv.end());
                if (w.lambda_g > 0.0f) {
                    auto gv = prep.gate_targets[size_t(idx)].data();
                    gtgt.insert(gtgt.end(), gv.begin(), gv.end());
                }
            }
            nd::Tensor depth_t =
                nd::Tensor::from(nd::Shape{bs, data.label_h, data.label_w}, std::move(dtgt));

            nd::Tensor lc = cls_loss(probs_b, cls_t);
            nd::Tensor ld = cfg.depth_loss_kind == DepthLossKind::bce
                                ? depth_loss(depths_b, depth_t)
                                : depth_loss_softmax2d(depths_b, depth_t);
            nd::Tensor lg;
            if (w.lambda_g > 0.0f) {
                nd::Tensor gates_b = gates.size() == 1 ? gates[0] : nd::concat(gates, 0);
                nd::Tensor gate_t =
                    nd::Tensor::from(nd::Shape{bs, cfg.experts}, std::move(gtgt));
                lg = gate_loss(gates_b, gate_t);
            }

            nd::Tensor total = total_loss(lc, ld, lg, w);
            opt.zero_grad();
            total.backward();
            opt.step();

            sum_lc += double(lc.item());
            sum_ld += double(ld.item());
            sum_lg += lg.defined() ? double(lg.item()) : 0.0;
            ++batches;
        }

        const EerResult ve = eval_val();
        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.l_c = sum_lc / double(batches);
        log.l_d = sum_ld / double(batches);
        log.l_g = sum_lg / double(batches);
        log.acc = double(correct) / double(ntrain);
        log.val_eer = ve.eer;
        result.log.push_back(log);

        if (result.best_epoch < 0 || ve.eer < result.best_val_eer) {
            result.best_val_eer = ve.eer;
            result.best_val_threshold = ve.threshold;
            result.best_epoch = epoch;
            result.best_state = model.state_snapshot();
        }
        lr *= cfg.decay;
    }
    return result;
}

} // namespace atrfas
