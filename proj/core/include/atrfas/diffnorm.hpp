#pragma once

#include <span>

#include "atrfas/tensor.hpp"
#include "atrfas/types.hpp"

namespace atrfas {

/// N x N0 differential transformation. Every row holds exactly one +1 and
/// one -1, pairing either the lowest- or the highest-intensity frame with an
/// intermediate frame, so each differential frame is a two-frame subtraction
/// that cancels the ambient term.
struct DiffMatrix {
    int n0 = 0;
    int n = 0;
    std::vector<float> entries; // n x n0 row-major

    float at(int r, int c) const { return entries[size_t(r) * n0 + c]; }
};

/// Block form [1, -I, 0; 0, I, -1]; N = 2*(n0-2). Requires n0 >= 3.
DiffMatrix build_diff_matrix(int n0);

/// Consecutive-frame differences, rows (1,-1,0,..),(0,1,-1,..),...; N = n0-1.
/// Used by the adjacent-difference ablation.
DiffMatrix build_adjacent_diff_matrix(int n0);

/// Contracts the frame axis: out[r] = sum_j D[r,j] * aligned[j].
/// aligned is [N0, C, H, W]; result is [N, C, H, W].
nd::Tensor apply_diffnorm(const nd::Tensor& aligned, const DiffMatrix& d);

/// 4-DOF similarity x' = [a -b; b a] x + (tx, ty).
struct SimilarityTransform {
    double a = 1.0, b = 0.0, tx = 0.0, ty = 0.0;

    SimilarityTransform inverse() const;
    void apply(double x, double y, double& ox, double& oy) const;
    double scale() const;
    double rotation() const; // radians
};

/// Least-squares similarity mapping src points onto dst points (x,y pairs).
/// Throws ValueError when the source points are coincident or collinear.
SimilarityTransform fit_similarity(std::span<const float> src, std::span<const float> dst);

/// Resamples every frame through the inverse of `map` (map: input -> output
/// coordinates) with bilinear interpolation and edge clamping.
nd::Tensor warp_frames(const nd::Tensor& frames, const SimilarityTransform& map,
                       int out_h, int out_w);

/// Per-frame similarity fit of seq.landmarks onto the canonical template
/// (5 x,y pairs in output pixel coordinates), then bilinear resampling to
/// out_h x out_w. Without landmarks, frames already at the target size pass
/// through unchanged.
nd::Tensor align_frames(const FlashSequence& seq, std::span<const float> canonical,
                        int out_h, int out_w);

} // namespace atrfas
