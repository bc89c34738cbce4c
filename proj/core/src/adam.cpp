#include "tbp/adam.hpp"

#include <cmath>

#include "tbp/errors.hpp"

namespace tbp {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               std::size_t t, std::size_t offset, const AdamParams& hyper) {
    if (params.size() != grads.size()) throw LengthMismatch("adam: param/grad size mismatch");
    if (offset + params.size() > state.m.size()) throw LengthMismatch("adam: state too small");
    if (t == 0) throw Error("adam: step index starts at 1");

    const double b1 = hyper.beta1;
    const double b2 = hyper.beta2;
    const double m_corr = 1.0 - std::pow(b1, static_cast<double>(t));
    const double v_corr = 1.0 - std::pow(b2, static_cast<double>(t));

    for (std::size_t i = 0; i < params.size(); ++i) {
        double& m = state.m[offset + i];
        double& v = state.v[offset + i];
        const double g = grads[i];
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double m_hat = m / m_corr;
        const double v_hat = v / v_corr;
        params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
}

AdamState make_adam_state(const RnnModel& model) {
    return AdamState::for_size(parameter_count(model));
}

void adam_update_model(AdamState& state, RnnModel& model, const ModelGrads& grads,
                       const AdamParams& hyper) {
    // Collect grad segments first so model and grads walk in lockstep.
    std::vector<std::span<const double>> grad_spans;
    for_each_grad(grads, [&grad_spans](std::span<const double> g) { grad_spans.push_back(g); });

    state.t += 1;
    std::size_t offset = 0;
    std::size_t which = 0;
    for_each_param(model, [&](std::span<double> p) {
        adam_step(state, p, grad_spans[which], state.t, offset, hyper);
        offset += p.size();
        ++which;
    });
}

}  // namespace tbp
