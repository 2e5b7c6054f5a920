#include "atrfas/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "atrfas/dataset.hpp"
#include "atrfas/errors.hpp"

namespace atrfas {

namespace {

void add_dome(std::vector<float>& z, int h, int w, const SurfaceParams& p, float factor) {
    for (int y = 0; y < h; ++y) {
        const float v = h > 1 ? float(y) / float(h - 1) : 0.5f;
        for (int x = 0; x < w; ++x) {
            const float u = w > 1 ? float(x) / float(w - 1) : 0.5f;
            const float ru = (u - p.dome_cx) / p.dome_rx;
            const float rv = (v - p.dome_cy) / p.dome_ry;
            const float q = 1.0f - ru * ru - rv * rv;
            float zz = q > 0.0f ? p.dome_h * q : 0.0f;
            const float nu = (u - p.dome_cx) / p.nose_sx;
            const float nv = (v - (p.dome_cy + 0.05f)) / p.nose_sy;
            zz += p.nose_amp * std::exp(-0.5f * (nu * nu + nv * nv));
            z[size_t(y) * w + x] += factor * zz;
        }
    }
}

void add_plane(std::vector<float>& z, int h, int w, const SurfaceParams& p) {
    for (int y = 0; y < h; ++y) {
        const float v = h > 1 ? float(y) / float(h - 1) : 0.5f;
        for (int x = 0; x < w; ++x) {
            const float u = w > 1 ? float(x) / float(w - 1) : 0.5f;
            z[size_t(y) * w + x] += p.plane_z + p.tilt_x * (u - 0.5f) + p.tilt_y * (v - 0.5f);
        }
    }
}

void add_grating(std::vector<float>& z, int h, int w, const SurfaceParams& p) {
    // Exactly zero-mean: accumulate, then subtract the empirical mean.
    std::vector<float> g(size_t(h) * w);
    double mean = 0.0;
    constexpr float tau = 2.0f * std::numbers::pi_v<float>;
    for (int y = 0; y < h; ++y) {
        const float v = h > 1 ? float(y) / float(h - 1) : 0.5f;
        for (int x = 0; x < w; ++x) {
            const float u = w > 1 ? float(x) / float(w - 1) : 0.5f;
            const float val = p.grating_amp * (std::sin(tau * p.grating_fu * u + p.grating_pu) +
                                               std::sin(tau * p.grating_fv * v + p.grating_pv));
            g[size_t(y) * w + x] = val;
            mean += val;
        }
    }
    mean /= double(h) * double(w);
    for (size_t i = 0; i < g.size(); ++i) z[i] += g[i] - float(mean);
}

void add_rim(std::vector<float>& z, int h, int w, const SurfaceParams& p) {
    for (int y = 0; y < h; ++y) {
        const float v = h > 1 ? float(y) / float(h - 1) : 0.5f;
        for (int x = 0; x < w; ++x) {
            const float u = w > 1 ? float(x) / float(w - 1) : 0.5f;
            const float ru = (u - p.dome_cx) / p.dome_rx;
            const float rv = (v - p.dome_cy) / p.dome_ry;
            const float r = std::sqrt(ru * ru + rv * rv);
            const float d = (r - 1.0f) / p.rim_sigma;
            z[size_t(y) * w + x] += p.rim_height * std::exp(-0.5f * d * d);
        }
    }
}

} // namespace

SurfaceParams draw_surface_params(AttackType kind, RngStream rng) {
    SurfaceParams p;
    // The dome stream is shared by live and mask, the plane stream by print
    // and replay; scenes with the same seed differ only in the kind-specific
    // components.
    RngStream dome = rng.split("dome");
    p.dome_cx = dome.uniform(0.45f, 0.55f);
    p.dome_cy = dome.uniform(0.45f, 0.55f);
    p.dome_rx = dome.uniform(0.32f, 0.42f);
    p.dome_ry = dome.uniform(0.32f, 0.42f);
    p.dome_h = dome.uniform(0.35f, 0.55f);
    p.nose_amp = dome.uniform(0.08f, 0.15f);

    RngStream plane = rng.split("plane");
    p.tilt_x = plane.uniform(-0.15f, 0.15f);
    p.tilt_y = plane.uniform(-0.15f, 0.15f);
    p.plane_z = plane.uniform(0.05f, 0.15f);

    if (kind == AttackType::replay) {
        RngStream grating = rng.split("grating");
        p.grating_amp = grating.uniform(0.004f, 0.010f);
        p.grating_fu = int(6 + grating.below(7));
        p.grating_fv = int(6 + grating.below(7));
        p.grating_pu = grating.uniform(0.0f, 6.2831853f);
        p.grating_pv = grating.uniform(0.0f, 6.2831853f);
    }
    if (kind == AttackType::mask) {
        RngStream mask = rng.split("mask");
        p.rim_height = mask.uniform(0.08f, 0.12f);
    }
    return p;
}

std::vector<float> make_surface(AttackType kind, const SurfaceParams& p, int h, int w) {
    if (h < 8 || w < 8) throw ParamError("make_surface: grid must be at least 8x8");
    std::vector<float> z(size_t(h) * w, 0.0f);
    switch (kind) {
        case AttackType::none:
            add_dome(z, h, w, p, 1.0f);
            break;
        case AttackType::print:
            add_plane(z, h, w, p);
            break;
        case AttackType::replay:
            add_plane(z, h, w, p);
            add_grating(z, h, w, p);
            break;
        case AttackType::mask:
            add_dome(z, h, w, p, p.mask_depth_factor);
            add_rim(z, h, w, p);
            break;
        default:
            throw ParamError("make_surface: unknown surface kind");
    }
    return z;
}

std::vector<float> make_surface(AttackType kind, int h, int w, RngStream rng) {
    return make_surface(kind, draw_surface_params(kind, rng), h, w);
}

std::vector<float> cos_theta_field(const std::vector<float>& z, int h, int w) {
    if (z.size() != size_t(h) * w) throw ShapeError("cos_theta_field: size mismatch");
    std::vector<float> c(z.size());
    const float du = w > 1 ? 1.0f / float(w - 1) : 1.0f;
    const float dv = h > 1 ? 1.0f / float(h - 1) : 1.0f;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
            const float zu = (z[size_t(y) * w + xp] - z[size_t(y) * w + xm]) / (float(xp - xm) * du);
            const float zv = (z[size_t(yp) * w + x] - z[size_t(ym) * w + x]) / (float(yp - ym) * dv);
            c[size_t(y) * w + x] = 1.0f / std::sqrt(1.0f + zu * zu + zv * zv);
        }
    }
    return c;
}

RenderResult render_lambertian(const SceneSpec& scene, RngStream rng) {
    const int h = scene.height, w = scene.width;
    if (scene.surface.size() != size_t(h) * w)
        throw ShapeError("render_lambertian: surface size disagrees with scene dims");
    if (scene.flash_levels.size() < 2)
        throw ParamError("render_lambertian: need at least 2 flash levels");
    for (size_t i = 1; i < scene.flash_levels.size(); ++i)
        if (!(scene.flash_levels[i] >= scene.flash_levels[i - 1]))
            throw ValueError("render_lambertian: flash levels must be ascending");
    if (!(scene.k_a > 0.0f) || !(scene.k_d > 0.0f))
        throw ValueError("render_lambertian: reflection coefficients must be positive");
    if (scene.ambient < 0.0f) throw ValueError("render_lambertian: ambient must be >= 0");

    const std::vector<float> cosfield = cos_theta_field(scene.surface, h, w);
    const int n0 = int(scene.flash_levels.size());
    const int64_t px = int64_t(h) * w;
    std::vector<float> frames(size_t(n0) * px);
    RngStream noise = rng.split("pixel_noise");
    int64_t clamped = 0;
    for (int f = 0; f < n0; ++f) {
        const float base = scene.k_a * scene.ambient;
        const float gain = scene.k_d * scene.flash_levels[size_t(f)];
        float* dst = frames.data() + size_t(f) * px;
        for (int64_t i = 0; i < px; ++i) {
            float v = base + gain * cosfield[size_t(i)];
            if (scene.noise_sigma > 0.0f) v += scene.noise_sigma * noise.normal();
            if (v < 0.0f) {
                v = 0.0f;
                ++clamped;
            }
            dst[i] = v;
        }
    }
    RenderResult res;
    res.seq.frames = nd::Tensor::from(nd::Shape{n0, 1, h, w}, std::move(frames));
    res.seq.flash_levels = scene.flash_levels;
    res.seq.label = scene.attack == AttackType::none ? Label::live : Label::spoof;
    res.seq.attack = scene.attack;
    res.clamped_pixels = clamped;
    res.warned = clamped * 100 > int64_t(n0) * px;
    return res;
}

nd::Tensor depth_label_from_surface(const std::vector<float>& z, int h, int w,
                                    Label label, int out_h, int out_w) {
    if (label == Label::spoof)
        return nd::Tensor::full(nd::Shape{out_h, out_w}, 0.5f);
    if (h % out_h != 0 || w % out_w != 0)
        throw ParamError("depth_label_from_surface: label grid must divide the surface grid");
    const int fy = h / out_h, fx = w / out_w;
    std::vector<float> out(size_t(out_h) * out_w);
    for (int oy = 0; oy < out_h; ++oy) {
        for (int ox = 0; ox < out_w; ++ox) {
            double acc = 0.0;
            for (int yy = 0; yy < fy; ++yy)
                for (int xx = 0; xx < fx; ++xx)
                    acc += z[size_t(oy * fy + yy) * w + (ox * fx + xx)];
            out[size_t(oy) * out_w + ox] = float(acc / double(fy * fx));
        }
    }
    const auto [mn, mx] = std::minmax_element(out.begin(), out.end());
    const float lo = *mn, hi = *mx;
    const float range = hi - lo;
    if (range <= 0.0f) throw ValueError("depth_label_from_surface: flat live surface");
    for (float& v : out) v = (v - lo) / range;
    return nd::Tensor::from(nd::Shape{out_h, out_w}, std::move(out));
}

std::vector<float> make_gate_label(Label label, AttackType attack, int classes) {
    std::vector<float> g(size_t(classes), 0.0f);
    if (label == Label::live) {
        std::fill(g.begin(), g.end(), 1.0f / float(classes));
    } else {
        g[size_t(attack_class_index(attack))] = 1.0f;
    }
    return g;
}

LabeledSample make_sample(const GenConfig& cfg, Label label, AttackType attack,
                          uint64_t split_seed, uint64_t index, bool test_split) {
    RngStream rng = RngStream(split_seed).split(index);
    SceneSpec scene;
    scene.height = cfg.height;
    scene.width = cfg.width;
    scene.attack = attack;
    scene.noise_sigma = cfg.noise_sigma;
    scene.surface = make_surface(attack, cfg.height, cfg.width, rng.split("surface"));

    RngStream photo = rng.split("photometry");
    const float shift = test_split ? cfg.test_ambient_shift : 0.0f;
    scene.ambient = photo.uniform(cfg.ambient_lo, cfg.ambient_hi) + shift;
    scene.k_a = photo.uniform(cfg.ka_lo, cfg.ka_hi);
    scene.k_d = photo.uniform(cfg.kd_lo, cfg.kd_hi);
    const float fscale = photo.uniform(cfg.flash_scale_lo, cfg.flash_scale_hi);
    scene.flash_levels.resize(size_t(cfg.n0));
    for (int f = 0; f < cfg.n0; ++f) scene.flash_levels[size_t(f)] = float(f + 1) * fscale;

    RenderResult rendered = render_lambertian(scene, rng.split("render"));
    LabeledSample s;
    s.sequence = std::move(rendered.seq);
    s.depth_label = depth_label_from_surface(scene.surface, cfg.height, cfg.width, label,
                                             cfg.label_h, cfg.label_w);
    s.gate_label = make_gate_label(label, attack, cfg.gate_classes);
    s.cls_label = label == Label::spoof ? 1 : 0;
    return s;
}

namespace {

std::vector<std::pair<Label, AttackType>> split_plan(const GenCounts& counts) {
    std::vector<std::pair<Label, AttackType>> plan;
    for (int i = 0; i < counts.live; ++i) plan.emplace_back(Label::live, AttackType::none);
    for (int i = 0; i < counts.print; ++i) plan.emplace_back(Label::spoof, AttackType::print);
    for (int i = 0; i < counts.replay; ++i) plan.emplace_back(Label::spoof, AttackType::replay);
    for (int i = 0; i < counts.mask; ++i) plan.emplace_back(Label::spoof, AttackType::mask);
    return plan;
}

std::vector<LabeledSample> render_split(const GenConfig& cfg, const GenCounts& counts,
                                        uint64_t split_seed, bool test_split) {
    const auto plan = split_plan(counts);
    std::vector<LabeledSample> samples(plan.size());
    const int jobs = std::max(1, cfg.jobs);
    if (jobs == 1) {
        for (size_t i = 0; i < plan.size(); ++i)
            samples[i] = make_sample(cfg, plan[i].first, plan[i].second, split_seed, i, test_split);
        return samples;
    }
    // Per-sample streams are index-derived, so striped parallel rendering
    // produces the same bytes as the serial loop.
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&, t]() {
            for (size_t i = size_t(t); i < plan.size(); i += size_t(jobs))
                samples[i] = make_sample(cfg, plan[i].first, plan[i].second, split_seed, i,
                                         test_split);
        });
    }
    for (auto& th : pool) th.join();
    return samples;
}

} // namespace

std::pair<int, int> generate_dataset(const GenConfig& cfg, const std::string& out_dir) {
    if (cfg.train.total() < 1 || cfg.test.total() < 1)
        throw ParamError("generate_dataset: each split needs at least one sample");
    if (cfg.n0 < 2) throw ParamError("generate_dataset: n0 must be >= 2");
    if (cfg.height % cfg.label_h != 0 || cfg.width % cfg.label_w != 0)
        throw ParamError("generate_dataset: label grid must divide the image grid");

    RngStream root(cfg.seed);
    const uint64_t train_seed = root.split("train").seed();
    const uint64_t test_seed = root.split("test").seed();

    auto train = render_split(cfg, cfg.train, train_seed, false);
    write_dataset_split(out_dir + "/train", cfg, train);
    auto test = render_split(cfg, cfg.test, test_seed, true);
    write_dataset_split(out_dir + "/test", cfg, test);
    return {int(train.size()), int(test.size())};
}

} // namespace atrfas
