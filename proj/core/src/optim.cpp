#include "atrfas/optim.hpp"

#include <cmath>

#include "atrfas/errors.hpp"

namespace atrfas {

void adam_step(std::span<nd::Tensor> params, AdamState& state, float lr, float beta1,
               float beta2, float eps) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(size_t(params[i].numel()), 0.0f);
            state.v[i].assign(size_t(params[i].numel()), 0.0f);
        }
    }
    if (state.m.size() != params.size())
        throw ParamError("adam_step: state was initialized for a different parameter list");

    ++state.t;
    const double bc1 = 1.0 - std::pow(double(beta1), double(state.t));
    const double bc2 = 1.0 - std::pow(double(beta2), double(state.t));

    for (size_t i = 0; i < params.size(); ++i) {
        auto g = params[i].grad();
        auto p = params[i].mutable_data();
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.size() != p.size())
            throw ParamError("adam_step: parameter size changed under the optimizer");
        for (size_t j = 0; j < p.size(); ++j) {
            const float gj = g.empty() ? 0.0f : g[j];
            m[j] = beta1 * m[j] + (1.0f - beta1) * gj;
            v[j] = beta2 * v[j] + (1.0f - beta2) * gj * gj;
            const double mhat = double(m[j]) / bc1;
            const double vhat = double(v[j]) / bc2;
            p[j] -= float(double(lr) * mhat / (std::sqrt(vhat) + double(eps)));
        }
    }
}

} // namespace atrfas
