#pragma once

// ADAM with bias correction (beta1 0.9, beta2 0.999, eps 1e-8). The core
// update works on raw parameter/gradient spans so the same code drives
// models and scalar reference problems alike.

#include <cstddef>
#include <span>
#include <vector>

#include "tbp/rnn.hpp"

namespace tbp {

struct AdamParams {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<double> m;  // first moment, flat over the canonical param order
    std::vector<double> v;  // second moment
    std::size_t t = 0;      // completed steps

    static AdamState for_size(std::size_t n) { return {std::vector<double>(n, 0.0),
                                                       std::vector<double>(n, 0.0), 0}; }
};

// One bias-corrected update at step index t (t >= 1). Moments and params are
// parallel flat arrays; `offset` selects the segment for this tensor.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads,
               std::size_t t, std::size_t offset, const AdamParams& hyper);

// Convenience for a whole model: advances state.t and applies the update to
// every parameter tensor in canonical order.
void adam_update_model(AdamState& state, RnnModel& model, const ModelGrads& grads,
                       const AdamParams& hyper);

AdamState make_adam_state(const RnnModel& model);

}  // namespace tbp
