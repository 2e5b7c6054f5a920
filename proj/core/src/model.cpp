#include "atrfas/model.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "atrfas/errors.hpp"
#include "atrfas/serialize.hpp"

using json = nlohmann::json;

namespace atrfas {

const char* to_string(Mode m) {
    switch (m) {
        case Mode::woMEMM: return "woMEMM";
        case Mode::Avg: return "Avg";
        case Mode::Sum: return "Sum";
        case Mode::Cat: return "Cat";
        case Mode::woMEMM_ATT: return "woMEMM_ATT";
        case Mode::ATT: return "ATT";
        case Mode::RG: return "RG";
        case Mode::RG_ATT: return "RG_ATT";
        case Mode::TG: return "TG";
        case Mode::DGM: return "DGM";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    for (Mode m : {Mode::woMEMM, Mode::Avg, Mode::Sum, Mode::Cat, Mode::woMEMM_ATT, Mode::ATT,
                   Mode::RG, Mode::RG_ATT, Mode::TG, Mode::DGM})
        if (s == to_string(m)) return m;
    throw ParamError("unknown mode '" + s + "'");
}

bool mode_uses_attention(Mode m) {
    return m == Mode::woMEMM_ATT || m == Mode::ATT || m == Mode::RG_ATT || m == Mode::DGM;
}

bool mode_uses_type_gate(Mode m) { return m == Mode::TG || m == Mode::DGM; }

bool mode_uses_random_gate(Mode m) { return m == Mode::RG || m == Mode::RG_ATT; }

int mode_expert_count(Mode m, int m_default) {
    return (m == Mode::woMEMM || m == Mode::woMEMM_ATT) ? 1 : m_default;
}

namespace layers {

nd::Tensor ResBlock::forward(const nd::Tensor& x) const {
    return nd::relu(nd::add(x, c2.forward(nd::relu(c1.forward(x)))));
}

nd::Tensor ResUNet::forward(const nd::Tensor& x) const {
    using namespace nd;
    Tensor s0 = e0.forward(x);
    Tensor l1 = e1.forward(relu(down1.forward(s0)));
    Tensor b = mid.forward(relu(down2.forward(l1)));
    Tensor u1v = relu(up1.forward(upsample_nearest(b, 2)));
    u1v = crop2d(u1v, int(l1.shape()[2]), int(l1.shape()[3]));
    Tensor r1 = d1.forward(add(u1v, l1));
    Tensor u2v = relu(up2.forward(upsample_nearest(r1, 2)));
    u2v = crop2d(u2v, int(s0.shape()[2]), int(s0.shape()[3]));
    Tensor r2 = d2.forward(add(u2v, s0));
    return head.forward(r2);
}

} // namespace layers

namespace {

struct ModelInit {
    RngStream stream;

    nd::Tensor he_conv(int cout, int cin, int k) {
        const float std = std::sqrt(2.0f / float(cin * k * k));
        return nd::randn(nd::Shape{cout, cin, k, k}, stream, std, /*requires_grad=*/true);
    }
    nd::Tensor xavier_linear(int fin, int fout) {
        const float limit = std::sqrt(6.0f / float(fin + fout));
        return nd::rand_uniform(nd::Shape{fin, fout}, stream, -limit, limit, true);
    }
    nd::Tensor zeros1(int n) { return nd::Tensor::zeros(nd::Shape{n}, true); }

    layers::Conv2d conv(int cin, int cout, int k, int stride, int pad) {
        return {he_conv(cout, cin, k), zeros1(cout), stride, pad};
    }
    layers::Linear fc(int fin, int fout) { return {xavier_linear(fin, fout), zeros1(fout)}; }
    layers::ResBlock block(int c) { return {conv(c, c, 3, 1, 1), conv(c, c, 3, 1, 1)}; }
    layers::ResUNet unet(int c0, int c1, int c2) {
        layers::ResUNet u;
        u.e0 = block(c0);
        u.down1 = conv(c0, c1, 3, 2, 1);
        u.e1 = block(c1);
        u.down2 = conv(c1, c2, 3, 2, 1);
        u.mid = block(c2);
        u.up1 = conv(c2, c1, 3, 1, 1);
        u.d1 = block(c1);
        u.up2 = conv(c1, c0, 3, 1, 1);
        u.d2 = block(c0);
        u.head = conv(c0, 1, 3, 1, 1);
        return u;
    }
};

int conv_out(int n) { return (n + 2 - 3) / 2 + 1; } // 3x3, stride 2, pad 1

} // namespace

AtrFasModel::AtrFasModel(const ModelConfig& cfg, RngStream init) : cfg_(cfg) {
    if (cfg.height % 4 != 0 || cfg.width % 4 != 0)
        throw ParamError("AtrFasModel: input height/width must be divisible by 4");
    if (cfg.experts < 1) throw ParamError("AtrFasModel: need at least one expert");
    if (cfg.stem_channels < 2) throw ParamError("AtrFasModel: stem_channels must be >= 2");

    ModelInit b{init.split("params")};
    rg_stream_ = init.split("random_gate");

    const int cs = cfg.stem_channels;
    stem1_ = b.conv(cfg.in_channels, cs / 2, 3, 2, 1);
    stem2_ = b.conv(cs / 2, cs, 3, 2, 1);
    pos_embed_ = nd::randn(nd::Shape{cs, cfg.feat_h(), cfg.feat_w()}, b.stream, 0.02f, true);

    const int m = mode_expert_count(cfg.mode, cfg.experts);
    for (int i = 0; i < m; ++i) experts_.push_back(b.unet(cs, cs * 2, cs * 4));

    has_type_gate_ = mode_uses_type_gate(cfg.mode);
    if (has_type_gate_) {
        tg1_ = b.conv(cfg.input_frames * cfg.in_channels, 16, 3, 2, 1);
        tg2_ = b.conv(16, 32, 3, 2, 1);
        tg3_ = b.conv(32, 64, 3, 2, 1);
        tg_fc1_ = b.fc(64, 32);
        tg_fc2_ = b.fc(32, cfg.experts);
    }

    has_attention_ = mode_uses_attention(cfg.mode);
    if (has_attention_) {
        at1_ = b.conv(cfg.in_channels, 8, 3, 2, 1);
        at2_ = b.conv(8, 8, 3, 2, 1);
        at_unet_ = b.unet(8, 16, 32);
    }

    hd1_ = b.conv(1, 16, 3, 2, 1);
    hd2_ = b.conv(16, 32, 3, 2, 1);
    hd3_ = b.conv(32, 64, 3, 2, 1);
    const int hh = conv_out(conv_out(conv_out(cfg.feat_h())));
    const int hw = conv_out(conv_out(conv_out(cfg.feat_w())));
    hd_fc_ = b.fc(64 * hh * hw, 1);

    has_cat_ = (cfg.mode == Mode::Cat);
    if (has_cat_) cat_merge_ = b.conv(cfg.experts, 1, 1, 1, 0);
}

nd::Tensor AtrFasModel::stem_forward(const nd::Tensor& x) const {
    const nd::Shape& s = x.shape();
    if (s.ndim() != 4) throw ShapeError("stem_forward: input must be [N,C,H,W]");
    if (s[2] % 4 != 0 || s[3] % 4 != 0)
        throw ShapeError("stem_forward: spatial dims must be divisible by 4, got " + s.str());
    nd::Tensor h = nd::relu(stem1_.forward(x));
    h = nd::relu(stem2_.forward(h));
    return nd::add_broadcast0(h, pos_embed_);
}

nd::Tensor AtrFasModel::expert_forward(int i, const nd::Tensor& x0) const {
    if (i < 0 || size_t(i) >= experts_.size())
        throw ParamError("expert_forward: expert index out of range");
    return nd::sigmoid(experts_[size_t(i)].forward(x0));
}

nd::Tensor AtrFasModel::type_gate(const nd::Tensor& x) const {
    if (!has_type_gate_) throw ParamError("type_gate: mode has no type gate");
    const nd::Shape& s = x.shape();
    // Frames collapse into channels: the gate sees the whole stack at once.
    nd::Tensor h = nd::reshape(x, nd::Shape{1, s[0] * s[1], s[2], s[3]});
    h = nd::relu(tg1_.forward(h));
    h = nd::relu(tg2_.forward(h));
    h = nd::relu(tg3_.forward(h));
    const std::array<int, 2> spatial{2, 3};
    h = nd::reduce_mean(h, spatial); // [1, 64]
    h = nd::relu(tg_fc1_.forward(h));
    h = tg_fc2_.forward(h);
    return nd::reshape(h, nd::Shape{cfg_.experts});
}

nd::Tensor AtrFasModel::attention_gate(const nd::Tensor& x) const {
    if (!has_attention_) throw ParamError("attention_gate: mode has no attention gate");
    nd::Tensor h = nd::relu(at1_.forward(x)); // frame axis rides along as batch
    h = nd::relu(at2_.forward(h));
    h = at_unet_.forward(h); // [N,1,H',W']
    const nd::Shape& s = h.shape();
    return nd::reshape(h, nd::Shape{s[0], s[2], s[3]});
}

nd::Tensor AtrFasModel::classify(const nd::Tensor& depth) const {
    const nd::Shape& s = depth.shape();
    if (s.ndim() != 2) throw ShapeError("classify: depth map must be [H',W']");
    nd::Tensor h = nd::reshape(depth, nd::Shape{1, 1, s[0], s[1]});
    h = nd::relu(hd1_.forward(h));
    h = nd::relu(hd2_.forward(h));
    h = nd::relu(hd3_.forward(h));
    const nd::Shape& hs = h.shape();
    h = nd::reshape(h, nd::Shape{1, hs[1] * hs[2] * hs[3]});
    h = hd_fc_.forward(h);
    return nd::sigmoid(nd::reshape(h, nd::Shape{}));
}

nd::Tensor AtrFasModel::mix_experts(const nd::Tensor& stacked, const nd::Tensor& gate_logits) {
    const nd::Shape& s = stacked.shape();
    if (s.ndim() != 4) throw ShapeError("mix_experts: stacked experts must be [M,N,H',W']");
    if (gate_logits.shape().ndim() != 1 || gate_logits.shape()[0] != s[0])
        throw ShapeError("mix_experts: gate length must match expert count");
    nd::Tensor w = nd::softmax(gate_logits, 0);
    nd::Tensor flat = nd::reshape(stacked, nd::Shape{s[0], s[1] * s[2] * s[3]});
    nd::Tensor mixed = nd::linear(nd::reshape(w, nd::Shape{1, s[0]}), flat);
    return nd::reshape(mixed, nd::Shape{s[1], s[2], s[3]});
}

nd::Tensor AtrFasModel::fuse_frames(const nd::Tensor& frame_depths, const nd::Tensor& raw_maps) {
    if (frame_depths.shape() != raw_maps.shape())
        throw ShapeError("fuse_frames: depth and attention shapes disagree, " +
                         frame_depths.shape().str() + " vs " + raw_maps.shape().str());
    nd::Tensor a = nd::softmax(raw_maps, 0); // per pixel over the frame axis
    const std::array<int, 1> frame_axis{0};
    return nd::reduce_sum(nd::mul(a, frame_depths), frame_axis);
}

nd::Tensor AtrFasModel::fuse_mean(const nd::Tensor& frame_depths) {
    const std::array<int, 1> frame_axis{0};
    return nd::reduce_mean(frame_depths, frame_axis);
}

ForwardOutputs AtrFasModel::forward(const nd::Tensor& x, const nd::Tensor* rg_logits) {
    const nd::Shape& s = x.shape();
    if (s.ndim() != 4) throw ShapeError("forward: input must be [N,C,H,W]");

    nd::Tensor x0 = stem_forward(x);
    const int m = int(experts_.size());
    std::vector<nd::Tensor> outs;
    outs.reserve(size_t(m));
    const int64_t N = x0.shape()[0];
    for (int i = 0; i < m; ++i) {
        nd::Tensor e = expert_forward(i, x0); // [N,1,H',W']
        outs.push_back(nd::reshape(e, nd::Shape{1, N, e.shape()[2], e.shape()[3]}));
    }
    nd::Tensor stacked = m == 1 ? outs[0] : nd::concat(outs, 0); // [M,N,H',W']

    ForwardOutputs out;
    nd::Tensor xprime;
    switch (cfg_.mode) {
        case Mode::woMEMM:
        case Mode::woMEMM_ATT: {
            const nd::Shape& e = stacked.shape();
            xprime = nd::reshape(stacked, nd::Shape{e[1], e[2], e[3]});
            break;
        }
        case Mode::Avg:
        case Mode::ATT: {
            const std::array<int, 1> expert_axis{0};
            xprime = nd::reduce_mean(stacked, expert_axis);
            break;
        }
        case Mode::Sum: {
            const std::array<int, 1> expert_axis{0};
            xprime = nd::reduce_sum(stacked, expert_axis);
            break;
        }
        case Mode::Cat: {
            // [M,N,H',W'] -> [N,M,H',W'] by re-slicing, then a 1x1 merge.
            std::vector<nd::Tensor> chans;
            chans.reserve(size_t(m));
            for (int i = 0; i < m; ++i) {
                const nd::Shape& e = outs[size_t(i)].shape();
                chans.push_back(nd::reshape(outs[size_t(i)], nd::Shape{e[1], 1, e[2], e[3]}));
            }
            nd::Tensor nchw = chans.size() == 1 ? chans[0] : nd::concat(chans, 1);
            nd::Tensor merged = cat_merge_.forward(nchw); // [N,1,H',W']
            const nd::Shape& e = merged.shape();
            xprime = nd::reshape(merged, nd::Shape{e[0], e[2], e[3]});
            break;
        }
        case Mode::RG:
        case Mode::RG_ATT: {
            nd::Tensor g;
            if (rg_logits) {
                g = *rg_logits;
            } else {
                std::vector<float> v(size_t(cfg_.experts));
                for (float& vv : v) vv = rg_stream_.normal();
                g = nd::Tensor::from(nd::Shape{cfg_.experts}, std::move(v));
            }
            out.gate_logits = g;
            xprime = mix_experts(stacked, g);
            break;
        }
        case Mode::TG:
        case Mode::DGM: {
            out.gate_logits = type_gate(x);
            xprime = mix_experts(stacked, out.gate_logits);
            break;
        }
    }
    out.frame_depths = xprime;

    if (mode_uses_attention(cfg_.mode)) {
        nd::Tensor raw = attention_gate(x);
        out.attention = nd::softmax(raw, 0);
        const std::array<int, 1> frame_axis{0};
        out.depth = nd::reduce_sum(nd::mul(out.attention, xprime), frame_axis);
    } else {
        out.depth = fuse_mean(xprime);
    }
    out.prob = classify(out.depth);
    return out;
}

namespace {

void collect(std::vector<std::pair<std::string, nd::Tensor>>& out, const std::string& name,
             const layers::Conv2d& c) {
    out.emplace_back(name + ".w", c.w);
    out.emplace_back(name + ".b", c.b);
}

void collect(std::vector<std::pair<std::string, nd::Tensor>>& out, const std::string& name,
             const layers::Linear& l) {
    out.emplace_back(name + ".w", l.w);
    out.emplace_back(name + ".b", l.b);
}

void collect(std::vector<std::pair<std::string, nd::Tensor>>& out, const std::string& name,
             const layers::ResBlock& r) {
    collect(out, name + ".c1", r.c1);
    collect(out, name + ".c2", r.c2);
}

void collect(std::vector<std::pair<std::string, nd::Tensor>>& out, const std::string& name,
             const layers::ResUNet& u) {
    collect(out, name + ".e0", u.e0);
    collect(out, name + ".down1", u.down1);
    collect(out, name + ".e1", u.e1);
    collect(out, name + ".down2", u.down2);
    collect(out, name + ".mid", u.mid);
    collect(out, name + ".up1", u.up1);
    collect(out, name + ".d1", u.d1);
    collect(out, name + ".up2", u.up2);
    collect(out, name + ".d2", u.d2);
    collect(out, name + ".head", u.head);
}

} // namespace

std::vector<std::pair<std::string, nd::Tensor>> AtrFasModel::parameters() {
    std::vector<std::pair<std::string, nd::Tensor>> out;
    collect(out, "stem1", stem1_);
    collect(out, "stem2", stem2_);
    out.emplace_back("pos_embed", pos_embed_);
    for (size_t i = 0; i < experts_.size(); ++i)
        collect(out, "expert" + std::to_string(i), experts_[i]);
    if (has_type_gate_) {
        collect(out, "tg1", tg1_);
        collect(out, "tg2", tg2_);
        collect(out, "tg3", tg3_);
        collect(out, "tg_fc1", tg_fc1_);
        collect(out, "tg_fc2", tg_fc2_);
    }
    if (has_attention_) {
        collect(out, "at1", at1_);
        collect(out, "at2", at2_);
        collect(out, "at_unet", at_unet_);
    }
    collect(out, "hd1", hd1_);
    collect(out, "hd2", hd2_);
    collect(out, "hd3", hd3_);
    collect(out, "hd_fc", hd_fc_);
    if (has_cat_) collect(out, "cat_merge", cat_merge_);
    return out;
}

std::vector<nd::Tensor> AtrFasModel::parameter_tensors() {
    std::vector<nd::Tensor> out;
    for (auto& [name, t] : parameters()) out.push_back(t);
    return out;
}

std::vector<std::pair<std::string, nd::Tensor>> AtrFasModel::state_snapshot() const {
    std::vector<std::pair<std::string, nd::Tensor>> out;
    for (auto& [name, t] : const_cast<AtrFasModel*>(this)->parameters())
        out.emplace_back(name, t.detached_copy());
    return out;
}

void AtrFasModel::load_state(const std::vector<std::pair<std::string, nd::Tensor>>& state) {
    auto params = parameters();
    if (params.size() != state.size())
        throw DataError("load_state: parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i].first != state[i].first)
            throw DataError("load_state: parameter name mismatch at '" + params[i].first + "'");
        if (!(params[i].second.shape() == state[i].second.shape()))
            throw DataError("load_state: shape mismatch at '" + params[i].first + "'");
        auto dst = params[i].second.mutable_data();
        auto src = state[i].second.data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

namespace {
constexpr const char* kCkptMagic = "ATRFAS-CKPT v1";
}

void AtrFasModel::save(const std::string& path, const std::string& extra_json) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("model save: cannot open " + path);
    os << kCkptMagic << '\n';
    json cfg;
    cfg["mode"] = to_string(cfg_.mode);
    cfg["experts"] = cfg_.experts;
    cfg["stem_channels"] = cfg_.stem_channels;
    cfg["input_frames"] = cfg_.input_frames;
    cfg["in_channels"] = cfg_.in_channels;
    cfg["height"] = cfg_.height;
    cfg["width"] = cfg_.width;
    if (!extra_json.empty()) {
        try {
            cfg["train"] = json::parse(extra_json);
        } catch (const json::exception& e) {
            throw DataError(std::string("model save: extra_json is not valid json: ") + e.what());
        }
    }
    os << cfg.dump() << '\n';
    auto params = const_cast<AtrFasModel*>(this)->parameters();
    os << "params " << params.size() << '\n';
    for (auto& [name, t] : params) {
        os << name << '\n';
        nd::write_tensor(os, t);
    }
    if (!os) throw DataError("model save: write failed for " + path);
}

AtrFasModel AtrFasModel::load(const std::string& path, std::string* extra_json) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("model load: cannot open " + path);
    std::string magic;
    if (!std::getline(is, magic) || magic != kCkptMagic)
        throw DataError("model load: bad magic in " + path);
    std::string cfg_line;
    if (!std::getline(is, cfg_line)) throw DataError("model load: missing config line");
    json cfg;
    try {
        cfg = json::parse(cfg_line);
    } catch (const json::exception& e) {
        throw DataError(std::string("model load: bad config json: ") + e.what());
    }
    if (extra_json) *extra_json = cfg.contains("train") ? cfg["train"].dump() : "";
    ModelConfig mc;
    mc.mode = mode_from_string(cfg.at("mode").get<std::string>());
    mc.experts = cfg.at("experts").get<int>();
    mc.stem_channels = cfg.at("stem_channels").get<int>();
    mc.input_frames = cfg.at("input_frames").get<int>();
    mc.in_channels = cfg.at("in_channels").get<int>();
    mc.height = cfg.at("height").get<int>();
    mc.width = cfg.at("width").get<int>();

    AtrFasModel model(mc, RngStream(0));
    std::string header;
    if (!std::getline(is, header)) throw DataError("model load: missing params header");
    std::istringstream hs(header);
    std::string tag;
    size_t count = 0;
    if (!(hs >> tag >> count) || tag != "params")
        throw DataError("model load: bad params header '" + header + "'");
    auto params = model.parameters();
    if (count != params.size()) throw DataError("model load: parameter count mismatch");
    for (auto& [name, t] : params) {
        std::string pname;
        if (!std::getline(is, pname) || pname != name)
            throw DataError("model load: expected parameter '" + name + "', got '" + pname + "'");
        nd::Tensor read = nd::read_tensor(is);
        if (!(read.shape() == t.shape()))
            throw DataError("model load: shape mismatch at '" + name + "'");
        auto dst = t.mutable_data();
        auto src = read.data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return model;
}

} // namespace atrfas
