#pragma once

#include <string>
#include <vector>

#include "atrfas/rng.hpp"
#include "atrfas/tensor.hpp"
#include "atrfas/types.hpp"

namespace atrfas {

/// Analytic surface parameters. Units: depth is measured as a fraction of
/// the image width, coordinates run over [0,1] x [0,1].
struct SurfaceParams {
    // live / mask dome
    float dome_cx = 0.5f, dome_cy = 0.5f;
    float dome_rx = 0.37f, dome_ry = 0.37f;
    float dome_h = 0.45f;
    float nose_amp = 0.12f, nose_sx = 0.05f, nose_sy = 0.15f;
    // print / replay plane
    float tilt_x = 0.0f, tilt_y = 0.0f, plane_z = 0.1f;
    // replay grating (screen texture proxy)
    float grating_amp = 0.007f;
    int grating_fu = 9, grating_fv = 8;
    float grating_pu = 0.0f, grating_pv = 0.0f;
    // mask
    float mask_depth_factor = 0.6f;
    float rim_height = 0.10f, rim_sigma = 0.015f;
};

/// Draws the per-kind parameters from rng (sub-streams per component, so a
/// replay scene shares its plane with the print scene of the same seed, and
/// a mask shares its dome with the live scene of the same seed).
SurfaceParams draw_surface_params(AttackType kind, RngStream rng);

/// Analytic depth field z(u,v) for one attack kind on an H x W grid.
std::vector<float> make_surface(AttackType kind, const SurfaceParams& p, int h, int w);
std::vector<float> make_surface(AttackType kind, int h, int w, RngStream rng);

/// cos(theta) between the surface normal of z and the frontal light (0,0,1),
/// gradients by central differences. Values lie in (0, 1].
std::vector<float> cos_theta_field(const std::vector<float>& z, int h, int w);

/// Rendering description for one capture.
struct SceneSpec {
    int height = 64, width = 64;
    std::vector<float> surface;      // H*W depth field
    float k_a = 1.0f;                // ambient reflection coefficient
    float k_d = 1.0f;                // diffuse reflection coefficient
    float ambient = 0.5f;            // ambient intensity I_a
    std::vector<float> flash_levels; // N0 ascending diffuse intensities I_d
    AttackType attack = AttackType::none;
    float noise_sigma = 0.01f;
};

struct RenderResult {
    FlashSequence seq;
    int64_t clamped_pixels = 0;
    bool warned = false; // more than 1% of pixels clamped to zero
};

/// Per frame f and pixel i: I = k_a*I_a + k_d*I_d[f]*cos(theta_i) + noise.
/// Negative intensities clamp to zero and are counted.
RenderResult render_lambertian(const SceneSpec& scene, RngStream rng);

/// One dataset entry: the capture plus its supervision targets.
struct LabeledSample {
    FlashSequence sequence;
    nd::Tensor depth_label;         // [H', W'] in [0,1]; spoof = constant 0.5
    std::vector<float> gate_label;  // M entries summing to 1
    int cls_label = 0;              // 0 live, 1 spoof
};

struct GenCounts {
    int live = 0, print = 0, replay = 0, mask = 0;
    int total() const { return live + print + replay + mask; }
};

struct GenConfig {
    int height = 64, width = 64;
    int n0 = 5;
    int label_h = 16, label_w = 16;
    int gate_classes = 3;
    GenCounts train{100, 40, 40, 40};
    GenCounts test{30, 10, 10, 10};
    float ambient_lo = 0.2f, ambient_hi = 1.5f;
    float ka_lo = 0.5f, ka_hi = 1.5f;
    float kd_lo = 0.5f, kd_hi = 1.5f;
    float flash_scale_lo = 0.5f, flash_scale_hi = 1.0f;
    float noise_sigma = 0.01f;
    // Additive shift of the test split's ambient range; the synthetic stand-in
    // for changed acquisition conditions between train and test.
    float test_ambient_shift = 0.0f;
    uint64_t seed = 12345;
    int jobs = 1;
};

/// Deterministic render of sample `index` of a split; the per-sample stream
/// is split_seed x index, so generation order and parallelism cannot change
/// the output.
LabeledSample make_sample(const GenConfig& cfg, Label label, AttackType attack,
                          uint64_t split_seed, uint64_t index, bool test_split);

/// Area-average downsample of a surface to label resolution, then min-max
/// normalized to [0,1] for live samples; spoof labels are constant 0.5.
nd::Tensor depth_label_from_surface(const std::vector<float>& z, int h, int w,
                                    Label label, int out_h, int out_w);

std::vector<float> make_gate_label(Label label, AttackType attack, int classes);

/// Renders both splits and writes them under out_dir/train and out_dir/test.
/// Returns the number of samples written per split.
std::pair<int, int> generate_dataset(const GenConfig& cfg, const std::string& out_dir);

} // namespace atrfas
