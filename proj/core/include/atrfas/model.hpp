#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atrfas/ops.hpp"
#include "atrfas/rng.hpp"
#include "atrfas/tensor.hpp"

namespace atrfas {

/// Model variants. woMEMM runs a single expert; Avg/Sum/Cat replace the type
/// gate with fixed mixing; RG draws gate logits at random; TG uses the type
/// gate without attention fusion; the _ATT suffix (and DGM) enables the
/// attention-gated frame fusion. DGM = type gate + attention gate.
enum class Mode { woMEMM, Avg, Sum, Cat, woMEMM_ATT, ATT, RG, RG_ATT, TG, DGM };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);
bool mode_uses_attention(Mode m);
bool mode_uses_type_gate(Mode m);
bool mode_uses_random_gate(Mode m);
int mode_expert_count(Mode m, int m_default);

struct ModelConfig {
    int input_frames = 6; // N entering the stem
    int in_channels = 1;  // C
    int height = 64, width = 64;
    int experts = 3;       // M
    int stem_channels = 16; // C'
    Mode mode = Mode::DGM;

    int feat_h() const { return height / 4; }
    int feat_w() const { return width / 4; }
};

struct ForwardOutputs {
    nd::Tensor gate_logits;  // [M], undefined when the mode has no type gate
    nd::Tensor attention;    // [N,H',W'] frame-softmaxed maps, undefined w/o attention
    nd::Tensor frame_depths; // X' [N,H',W']
    nd::Tensor depth;        // X^ [H',W']
    nd::Tensor prob;         // scalar spoof probability in (0,1)
};

namespace layers {

struct Conv2d {
    nd::Tensor w, b;
    int stride = 1, pad = 1;
    nd::Tensor forward(const nd::Tensor& x) const { return nd::conv2d(x, w, b, stride, pad); }
};

struct Linear {
    nd::Tensor w, b;
    nd::Tensor forward(const nd::Tensor& x) const { return nd::linear(x, w, b); }
};

struct ResBlock {
    Conv2d c1, c2;
    nd::Tensor forward(const nd::Tensor& x) const;
};

/// Encoder-decoder with residual blocks, two stride-2 downsamples, two
/// nearest-neighbour upsamples and additive skips; 1-channel linear head.
struct ResUNet {
    ResBlock e0;
    Conv2d down1;
    ResBlock e1;
    Conv2d down2;
    ResBlock mid;
    Conv2d up1;
    ResBlock d1;
    Conv2d up2;
    ResBlock d2;
    Conv2d head;
    nd::Tensor forward(const nd::Tensor& x) const;
};

} // namespace layers

/// Stem + position embeddings + M expert depth networks + dual gates +
/// mixture/fusion arithmetic + classification head.
class AtrFasModel {
public:
    AtrFasModel(const ModelConfig& cfg, RngStream init);

    const ModelConfig& config() const { return cfg_; }

    /// Full pipeline on one differential-frame stack [N, C, H, W].
    /// rg_logits overrides the random-gate draw in RG modes.
    ForwardOutputs forward(const nd::Tensor& x, const nd::Tensor* rg_logits = nullptr);

    // Stage-level entry points.
    nd::Tensor stem_forward(const nd::Tensor& x) const;          // [N,C',H',W']
    nd::Tensor expert_forward(int i, const nd::Tensor& x0) const; // [N,1,H',W']
    nd::Tensor type_gate(const nd::Tensor& x) const;              // [M] logits
    nd::Tensor attention_gate(const nd::Tensor& x) const;         // [N,H',W'] raw maps
    nd::Tensor classify(const nd::Tensor& depth) const;           // scalar in (0,1)

    /// X' = sum_m softmax(g)_m * stacked[m]; stacked is [M,N,H',W'].
    static nd::Tensor mix_experts(const nd::Tensor& stacked, const nd::Tensor& gate_logits);
    /// Per-pixel softmax of raw maps over the frame axis, then contraction.
    static nd::Tensor fuse_frames(const nd::Tensor& frame_depths, const nd::Tensor& raw_maps);
    static nd::Tensor fuse_mean(const nd::Tensor& frame_depths);

    std::vector<std::pair<std::string, nd::Tensor>> parameters();
    std::vector<nd::Tensor> parameter_tensors();
    void load_state(const std::vector<std::pair<std::string, nd::Tensor>>& state);
    std::vector<std::pair<std::string, nd::Tensor>> state_snapshot() const;

    /// extra_json (an object) is embedded under "train" in the config echo;
    /// load hands it back for callers that stored run metadata there.
    void save(const std::string& path, const std::string& extra_json = "") const;
    static AtrFasModel load(const std::string& path, std::string* extra_json = nullptr);

    /// Stream that RG modes draw from when no logits are supplied.
    void reseed_random_gate(uint64_t seed) { rg_stream_ = RngStream(seed); }

private:
    ModelConfig cfg_;
    layers::Conv2d stem1_, stem2_;
    nd::Tensor pos_embed_;
    std::vector<layers::ResUNet> experts_;
    // type gate: three stride-2 convs + GAP + two linears
    layers::Conv2d tg1_, tg2_, tg3_;
    layers::Linear tg_fc1_, tg_fc2_;
    // attention gate: two stride-2 convs + reduced ResUNet
    layers::Conv2d at1_, at2_;
    layers::ResUNet at_unet_;
    // classification head: three stride-2 convs + linear
    layers::Conv2d hd1_, hd2_, hd3_;
    layers::Linear hd_fc_;
    // Cat-mode 1x1 merge over expert channels
    layers::Conv2d cat_merge_;
    RngStream rg_stream_{0};

    bool has_type_gate_ = false, has_attention_ = false, has_cat_ = false;

    friend struct ModelBuilder;
};

} // namespace atrfas
