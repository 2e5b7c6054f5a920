#include "atrfas/losses.hpp"

#include <cmath>

#include "atrfas/errors.hpp"
#include "atrfas/ops.hpp"
#include "atrfas/synthgen.hpp"

namespace atrfas {

namespace {
constexpr float kClampLo = 1e-6f;
constexpr float kClampHi = 1.0f - 1e-6f;
} // namespace

nd::Tensor make_gate_target(Label label, AttackType attack, int classes) {
    if (label == Label::spoof && attack == AttackType::none)
        throw ValueError("make_gate_target: spoof sample without an attack type");
    if (label == Label::live && attack != AttackType::none)
        throw ValueError("make_gate_target: live sample with an attack type");
    return nd::Tensor::from(nd::Shape{classes}, make_gate_label(label, attack, classes));
}

nd::Tensor gate_loss(const nd::Tensor& logits, const nd::Tensor& targets) {
    if (logits.shape().ndim() != 2 || targets.shape() != logits.shape())
        throw ShapeError("gate_loss: logits and targets must both be [n,M]");
    const int64_t n = logits.shape()[0], m = logits.shape()[1];
    const auto tv = targets.data();
    for (int64_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (int64_t j = 0; j < m; ++j) row += tv[size_t(i * m + j)];
        if (std::fabs(row - 1.0) > 1e-6)
            throw ValueError("gate_loss: target row " + std::to_string(i) + " sums to " +
                             std::to_string(row));
    }
    nd::Tensor weighted = nd::mul(nd::log_softmax(logits, 1), targets);
    const std::array<int, 1> class_axis{1};
    nd::Tensor per_sample = nd::reduce_sum(weighted, class_axis); // [n]
    return nd::neg(nd::mean_all(per_sample));
}

nd::Tensor depth_loss(const nd::Tensor& pred, const nd::Tensor& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("depth_loss: prediction and label shapes disagree, " +
                         pred.shape().str() + " vs " + target.shape().str());
    for (float v : target.data())
        if (!(v >= 0.0f && v <= 1.0f))
            throw ValueError("depth_loss: depth labels must lie in [0,1]");
    nd::Tensor d = nd::clamp(pred, kClampLo, kClampHi);
    nd::Tensor on = nd::mul(target, nd::log(d));
    nd::Tensor off = nd::mul(nd::sub(1.0f, target), nd::log(nd::sub(1.0f, d)));
    return nd::neg(nd::mean_all(nd::add(on, off)));
}

nd::Tensor depth_loss_softmax2d(const nd::Tensor& pred, const nd::Tensor& target) {
    if (pred.shape() != target.shape())
        throw ShapeError("depth_loss_softmax2d: shape mismatch");
    if (pred.shape().ndim() != 3)
        throw ShapeError("depth_loss_softmax2d: expects [n,H,W]");
    const nd::Shape& s = pred.shape();
    nd::Tensor flat = nd::reshape(pred, nd::Shape{s[0], s[1] * s[2]});
    nd::Tensor tflat = nd::reshape(target, nd::Shape{s[0], s[1] * s[2]});
    nd::Tensor weighted = nd::mul(nd::log_softmax(flat, 1), tflat);
    const std::array<int, 1> pixel_axis{1};
    nd::Tensor per_sample = nd::reduce_sum(weighted, pixel_axis);
    return nd::neg(nd::mean_all(per_sample));
}

nd::Tensor cls_loss(const nd::Tensor& prob, const nd::Tensor& target) {
    if (prob.shape() != target.shape())
        throw ShapeError("cls_loss: prob and target shapes disagree");
    for (float v : target.data())
        if (v != 0.0f && v != 1.0f) throw ValueError("cls_loss: labels must be 0 or 1");
    nd::Tensor c = nd::clamp(prob, kClampLo, kClampHi);
    nd::Tensor on = nd::mul(target, nd::log(c));
    nd::Tensor off = nd::mul(nd::sub(1.0f, target), nd::log(nd::sub(1.0f, c)));
    return nd::neg(nd::mean_all(nd::add(on, off)));
}

nd::Tensor total_loss(const nd::Tensor& lc, const nd::Tensor& ld, const nd::Tensor& lg,
                      const LossWeights& w) {
    if (!(w.lambda_c >= 0.0f && w.lambda_d >= 0.0f && w.lambda_g >= 0.0f))
        throw ParamError("total_loss: weights must be non-negative");
    if (w.lambda_c == 0.0f && w.lambda_d == 0.0f && w.lambda_g == 0.0f)
        throw ParamError("total_loss: at least one weight must be positive");
    nd::Tensor total = nd::Tensor::scalar(0.0f);
    if (lc.defined() && w.lambda_c > 0.0f) total = nd::add(total, nd::mul(lc, w.lambda_c));
    if (ld.defined() && w.lambda_d > 0.0f) total = nd::add(total, nd::mul(ld, w.lambda_d));
    if (lg.defined() && w.lambda_g > 0.0f) total = nd::add(total, nd::mul(lg, w.lambda_g));
    return total;
}

} // namespace atrfas
