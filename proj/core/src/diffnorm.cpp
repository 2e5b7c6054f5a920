#include "atrfas/diffnorm.hpp"

#include <algorithm>
#include <cmath>

#include "atrfas/errors.hpp"
#include "atrfas/ops.hpp"

namespace atrfas {

const char* to_string(Label l) { return l == Label::live ? "live" : "spoof"; }

const char* to_string(AttackType a) {
    switch (a) {
        case AttackType::none: return "none";
        case AttackType::print: return "print";
        case AttackType::replay: return "replay";
        case AttackType::mask: return "mask";
    }
    return "?";
}

Label label_from_string(const std::string& s) {
    if (s == "live") return Label::live;
    if (s == "spoof") return Label::spoof;
    throw ValueError("unknown label '" + s + "'");
}

AttackType attack_from_string(const std::string& s) {
    if (s == "none") return AttackType::none;
    if (s == "print") return AttackType::print;
    if (s == "replay") return AttackType::replay;
    if (s == "mask") return AttackType::mask;
    throw ValueError("unknown attack type '" + s + "'");
}

int attack_class_index(AttackType a) {
    switch (a) {
        case AttackType::print: return 0;
        case AttackType::replay: return 1;
        case AttackType::mask: return 2;
        case AttackType::none: break;
    }
    throw ValueError("attack_class_index: live samples have no attack class");
}

void FlashSequence::validate() const {
    if (!frames.defined() || frames.shape().ndim() != 4)
        throw ValueError("FlashSequence: frames must be [N0,C,H,W]");
    if (frames.shape()[0] != int64_t(flash_levels.size()))
        throw ValueError("FlashSequence: frames and flash_levels disagree on N0");
    for (size_t i = 1; i < flash_levels.size(); ++i)
        if (flash_levels[i] < flash_levels[i - 1])
            throw ValueError("FlashSequence: flash_levels must be ascending");
    if (!landmarks.empty() && landmarks.size() != size_t(frames.shape()[0]) * 10)
        throw ValueError("FlashSequence: landmarks must be N0*5*2 values");
    const bool is_live = (label == Label::live);
    if (is_live != (attack == AttackType::none))
        throw ValueError("FlashSequence: label/attack mismatch (live <=> none)");
}

DiffMatrix build_diff_matrix(int n0) {
    if (n0 < 3) throw ParamError("build_diff_matrix: n0 must be >= 3, got " + std::to_string(n0));
    DiffMatrix d;
    d.n0 = n0;
    d.n = 2 * (n0 - 2);
    d.entries.assign(size_t(d.n) * n0, 0.0f);
    // First block: lowest-intensity frame paired with each intermediate.
    for (int i = 0; i < n0 - 2; ++i) {
        d.entries[size_t(i) * n0 + 0] = 1.0f;
        d.entries[size_t(i) * n0 + (i + 1)] = -1.0f;
    }
    // Second block: each intermediate paired with the highest-intensity frame.
    for (int i = 0; i < n0 - 2; ++i) {
        const int r = n0 - 2 + i;
        d.entries[size_t(r) * n0 + (i + 1)] = 1.0f;
        d.entries[size_t(r) * n0 + (n0 - 1)] = -1.0f;
    }
    return d;
}

DiffMatrix build_adjacent_diff_matrix(int n0) {
    if (n0 < 2) throw ParamError("build_adjacent_diff_matrix: n0 must be >= 2");
    DiffMatrix d;
    d.n0 = n0;
    d.n = n0 - 1;
    d.entries.assign(size_t(d.n) * n0, 0.0f);
    for (int i = 0; i < d.n; ++i) {
        d.entries[size_t(i) * n0 + i] = 1.0f;
        d.entries[size_t(i) * n0 + i + 1] = -1.0f;
    }
    return d;
}

nd::Tensor apply_diffnorm(const nd::Tensor& aligned, const DiffMatrix& d) {
    const nd::Shape& s = aligned.shape();
    if (s.ndim() != 4) throw ShapeError("apply_diffnorm: frames must be [N0,C,H,W]");
    if (s[0] != d.n0)
        throw ShapeError("apply_diffnorm: matrix expects " + std::to_string(d.n0) +
                         " frames, got " + std::to_string(s[0]));
    const int64_t frame = s[1] * s[2] * s[3];
    std::vector<float> out(size_t(d.n) * frame, 0.0f);
    const float* x = aligned.data().data();
    for (int r = 0; r < d.n; ++r) {
        float* dst = out.data() + size_t(r) * frame;
        for (int j = 0; j < d.n0; ++j) {
            const float w = d.at(r, j);
            if (w == 0.0f) continue;
            const float* src = x + size_t(j) * frame;
            for (int64_t i = 0; i < frame; ++i) dst[i] += w * src[i];
        }
    }
    return nd::Tensor::from(nd::Shape{d.n, s[1], s[2], s[3]}, std::move(out));
}

SimilarityTransform SimilarityTransform::inverse() const {
    const double det = a * a + b * b;
    SimilarityTransform inv;
    inv.a = a / det;
    inv.b = -b / det;
    inv.tx = -(inv.a * tx - inv.b * ty);
    inv.ty = -(inv.b * tx + inv.a * ty);
    return inv;
}

void SimilarityTransform::apply(double x, double y, double& ox, double& oy) const {
    ox = a * x - b * y + tx;
    oy = b * x + a * y + ty;
}

double SimilarityTransform::scale() const { return std::sqrt(a * a + b * b); }

double SimilarityTransform::rotation() const { return std::atan2(b, a); }

SimilarityTransform fit_similarity(std::span<const float> src, std::span<const float> dst) {
    if (src.size() != dst.size() || src.size() < 4 || src.size() % 2 != 0)
        throw ShapeError("fit_similarity: need matching (x,y) lists of >= 2 points");
    const size_t n = src.size() / 2;

    double smx = 0, smy = 0, dmx = 0, dmy = 0;
    for (size_t i = 0; i < n; ++i) {
        smx += src[2 * i];
        smy += src[2 * i + 1];
        dmx += dst[2 * i];
        dmy += dst[2 * i + 1];
    }
    smx /= double(n);
    smy /= double(n);
    dmx /= double(n);
    dmy /= double(n);

    // Centered cross terms, plus the source scatter matrix for the
    // degeneracy test (coincident or collinear points).
    double sxx = 0, sxy = 0, den = 0;
    double cxx = 0, cxy = 0, cyy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double px = src[2 * i] - smx, py = src[2 * i + 1] - smy;
        const double qx = dst[2 * i] - dmx, qy = dst[2 * i + 1] - dmy;
        sxx += px * qx + py * qy;
        sxy += px * qy - py * qx;
        den += px * px + py * py;
        cxx += px * px;
        cxy += px * py;
        cyy += py * py;
    }
    const double tr = cxx + cyy;
    const double det = cxx * cyy - cxy * cxy;
    const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    const double lmax = 0.5 * (tr + disc);
    const double lmin = 0.5 * (tr - disc);
    if (!(den > 1e-12) || !(lmax > 0.0) || lmin / lmax < 1e-9)
        throw ValueError("fit_similarity: degenerate landmarks (coincident or collinear)");

    SimilarityTransform t;
    t.a = sxx / den;
    t.b = sxy / den;
    t.tx = dmx - (t.a * smx - t.b * smy);
    t.ty = dmy - (t.b * smx + t.a * smy);
    return t;
}

nd::Tensor warp_frames(const nd::Tensor& frames, const SimilarityTransform& map,
                       int out_h, int out_w) {
    const nd::Shape& s = frames.shape();
    if (s.ndim() != 4) throw ShapeError("warp_frames: frames must be [N,C,H,W]");
    const int N = int(s[0]), C = int(s[1]), H = int(s[2]), W = int(s[3]);
    const SimilarityTransform inv = map.inverse();
    std::vector<float> out(size_t(N) * C * out_h * out_w);
    const float* x = frames.data().data();
    for (int nc = 0; nc < N * C; ++nc) {
        const float* img = x + size_t(nc) * H * W;
        float* dst = out.data() + size_t(nc) * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            for (int ox = 0; ox < out_w; ++ox) {
                double sx, sy;
                inv.apply(double(ox), double(oy), sx, sy);
                // Edge-clamped bilinear sample.
                sx = std::clamp(sx, 0.0, double(W - 1));
                sy = std::clamp(sy, 0.0, double(H - 1));
                const int x0 = int(sx), y0 = int(sy);
                const int x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
                const double fx = sx - x0, fy = sy - y0;
                const double v = (1 - fy) * ((1 - fx) * img[y0 * W + x0] + fx * img[y0 * W + x1]) +
                                 fy * ((1 - fx) * img[y1 * W + x0] + fx * img[y1 * W + x1]);
                dst[oy * out_w + ox] = float(v);
            }
        }
    }
    return nd::Tensor::from(nd::Shape{N, C, out_h, out_w}, std::move(out));
}

nd::Tensor align_frames(const FlashSequence& seq, std::span<const float> canonical,
                        int out_h, int out_w) {
    seq.validate();
    const nd::Shape& s = seq.frames.shape();
    if (!seq.has_landmarks()) {
        if (s[2] != out_h || s[3] != out_w)
            throw ValueError("align_frames: no landmarks and frames are not at the target size");
        return seq.frames;
    }
    if (canonical.size() != 10)
        throw ShapeError("align_frames: canonical template must be 5 (x,y) pairs");

    const int N = int(s[0]), C = int(s[1]);
    std::vector<nd::Tensor> warped;
    warped.reserve(size_t(N));
    for (int f = 0; f < N; ++f) {
        std::span<const float> pts(seq.landmarks.data() + size_t(f) * 10, 10);
        const SimilarityTransform t = fit_similarity(pts, canonical);
        std::vector<float> one(seq.frames.data().begin() + size_t(f) * C * s[2] * s[3],
                               seq.frames.data().begin() + size_t(f + 1) * C * s[2] * s[3]);
        nd::Tensor frame = nd::Tensor::from(nd::Shape{1, C, s[2], s[3]}, std::move(one));
        warped.push_back(warp_frames(frame, t, out_h, out_w));
    }
    return nd::concat(warped, 0);
}

} // namespace atrfas
