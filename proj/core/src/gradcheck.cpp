#include "atrfas/gradcheck.hpp"

#include <cmath>

#include "atrfas/errors.hpp"

namespace atrfas::nd {

float grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& build_graph,
                 const std::vector<Shape>& shapes, uint64_t seed, float eps) {
    RngStream rng(seed);
    std::vector<Tensor> inputs;
    inputs.reserve(shapes.size());
    for (size_t i = 0; i < shapes.size(); ++i) {
        RngStream s = rng.split(i);
        inputs.push_back(randn(shapes[i], s, 1.0f, /*requires_grad=*/true));
    }

    Tensor loss = build_graph(inputs);
    if (loss.numel() != 1) throw ShapeError("grad_check: graph must produce a scalar");
    loss.backward();

    std::vector<std::vector<float>> analytic;
    for (Tensor& t : inputs) {
        auto g = t.grad();
        analytic.emplace_back(g.begin(), g.end());
        if (analytic.back().empty()) analytic.back().assign(size_t(t.numel()), 0.0f);
    }

    NoGradGuard no_grad; // numeric probes do not need the tape
    float worst = 0.0f;
    for (size_t i = 0; i < inputs.size(); ++i) {
        auto data = inputs[i].mutable_data();
        for (size_t j = 0; j < data.size(); ++j) {
            const float orig = data[j];
            data[j] = orig + eps;
            const double up = build_graph(inputs).item();
            data[j] = orig - eps;
            const double down = build_graph(inputs).item();
            data[j] = orig;
            const double numeric = (up - down) / (2.0 * double(eps));
            const double a = double(analytic[i][j]);
            const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            worst = std::max(worst, float(std::fabs(a - numeric) / denom));
        }
    }
    return worst;
}

} // namespace atrfas::nd
