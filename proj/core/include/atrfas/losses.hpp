#pragma once

#include "atrfas/tensor.hpp"
#include "atrfas/types.hpp"

namespace atrfas {

struct LossWeights {
    float lambda_c = 1.0f;
    float lambda_d = 1.0f;
    float lambda_g = 0.5f;
};

/// Gate target: spoof -> one-hot at the attack class, live -> uniform 1/M.
nd::Tensor make_gate_target(Label label, AttackType attack, int classes);

/// Soft-target cross entropy over gate logits [n,M] vs targets [n,M].
/// Target rows must sum to 1 within 1e-6.
nd::Tensor gate_loss(const nd::Tensor& logits, const nd::Tensor& targets);

/// Mean per-pixel binary cross entropy with soft targets in [0,1];
/// predictions are clamped to [1e-6, 1-1e-6].
nd::Tensor depth_loss(const nd::Tensor& pred, const nd::Tensor& target);

/// Per-pixel softmax alternative: target-weighted log of the spatial softmax
/// of each predicted map (pred and target are [n,H,W]).
nd::Tensor depth_loss_softmax2d(const nd::Tensor& pred, const nd::Tensor& target);

/// Binary cross entropy of spoof probabilities [n] vs labels [n] in {0,1}.
nd::Tensor cls_loss(const nd::Tensor& prob, const nd::Tensor& target);

nd::Tensor total_loss(const nd::Tensor& lc, const nd::Tensor& ld, const nd::Tensor& lg,
                      const LossWeights& w);

} // namespace atrfas
