#pragma once

#include <span>
#include <vector>

#include "atrfas/rng.hpp"
#include "atrfas/tensor.hpp"

namespace atrfas::nd {

/// 2D convolution, NCHW input, OIHW kernel (square, odd side), optional bias.
/// H' = floor((H + 2*padding - k)/stride) + 1.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride = 1, int padding = 0);

/// out = input [B,F] * weight [F,G] + bias [G]; bias may be undefined.
Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias = {});

/// Max-subtracted softmax along one axis; normalizer accumulated in float64.
Tensor softmax(const Tensor& x, int axis);
Tensor log_softmax(const Tensor& x, int axis);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
/// Natural log; any value <= 0 is a domain error.
Tensor log(const Tensor& x);
Tensor neg(const Tensor& x);
/// Saturating clamp; gradient is zero where the input was clamped.
Tensor clamp(const Tensor& x, float lo, float hi);

// Binary elementwise ops require identical shapes; the only broadcasting in
// the engine is the explicit scalar and leading-axis forms below.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, float s);
Tensor sub(const Tensor& a, float s);
Tensor sub(float s, const Tensor& a);
Tensor mul(const Tensor& a, float s);

/// x[i, ...] + p[...] for every leading index i; p.shape == x.shape minus
/// axis 0. Gradient of p sums over the leading axis.
Tensor add_broadcast0(const Tensor& x, const Tensor& p);

/// Reduction over a set of distinct axes; the reduced axes are dropped from
/// the output shape. An empty axis list is the identity. Accumulates in
/// float64.
Tensor reduce_sum(const Tensor& x, std::span<const int> axes);
Tensor reduce_mean(const Tensor& x, std::span<const int> axes);
Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

/// Nearest-neighbour upsampling of an NCHW tensor by an integer factor.
Tensor upsample_nearest(const Tensor& x, int factor);

/// Keeps the top-left h x w window of an NCHW tensor (h <= H, w <= W).
Tensor crop2d(const Tensor& x, int h, int w);

/// Same data, new extents (numel preserved).
Tensor reshape(const Tensor& x, const Shape& shape);

/// Concatenate along an existing axis; all other extents must agree.
Tensor concat(std::span<const Tensor> parts, int axis);

// Seeded initializers (leaves).
Tensor randn(const Shape& shape, RngStream& rng, float stddev = 1.0f,
             bool requires_grad = false);
Tensor rand_uniform(const Shape& shape, RngStream& rng, float lo, float hi,
                    bool requires_grad = false);

} // namespace atrfas::nd
