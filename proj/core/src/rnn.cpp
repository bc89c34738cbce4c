#include "tbp/rnn.hpp"

#include <algorithm>
#include <cmath>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_step_shapes(const CellParams& params, std::span<const double> x,
                       const CellState& state, CellType cell) {
    if (params.gates.size() != gate_count(cell)) {
        throw ShapeMismatch("cell has " + std::to_string(params.gates.size()) + " gates, " +
                            to_string(cell) + " needs " + std::to_string(gate_count(cell)));
    }
    const std::size_t n = params.hidden();
    const std::size_t d = params.input();
    for (const GateParams& g : params.gates) {
        if (g.w.rows != n || g.w.cols != d || g.u.rows != n || g.u.cols != n ||
            g.b.size() != n) {
            throw ShapeMismatch("gate parameter shapes disagree");
        }
    }
    if (x.size() != d) throw ShapeMismatch("input has " + std::to_string(x.size()) +
                                           " entries, cell expects " + std::to_string(d));
    if (state.h.size() != n) throw ShapeMismatch("hidden state size mismatch");
    if (cell == CellType::Lstm && state.c.size() != n) {
        throw ShapeMismatch("cell state size mismatch");
    }
}

// a = W x + U h + b
Vector gate_preactivation(const GateParams& g, std::span<const double> x,
                          std::span<const double> h) {
    Vector a = g.b;
    matvec_add(g.w, x, a);
    matvec_add(g.u, h, a);
    return a;
}

// Like above but U is applied to a substitute recurrent input (GRU candidate).
Vector gate_preactivation_on(const GateParams& g, std::span<const double> x,
                             std::span<const double> recur) {
    Vector a = g.b;
    matvec_add(g.w, x, a);
    matvec_add(g.u, recur, a);
    return a;
}

void apply_sigmoid(Vector& v) {
    for (double& x : v) x = sigmoid(x);
}

void apply_tanh(Vector& v) {
    for (double& x : v) x = std::tanh(x);
}

}  // namespace

const char* to_string(CellType cell) {
    switch (cell) {
        case CellType::Srnn: return "srnn";
        case CellType::Lstm: return "lstm";
        case CellType::Gru: return "gru";
    }
    return "?";
}

CellType cell_type_from_string(const std::string& name) {
    if (name == "srnn") return CellType::Srnn;
    if (name == "lstm") return CellType::Lstm;
    if (name == "gru") return CellType::Gru;
    throw ConfigError("unknown cell type: '" + name + "' (expected srnn|lstm|gru)");
}

std::size_t gate_count(CellType cell) {
    switch (cell) {
        case CellType::Srnn: return 1;
        case CellType::Lstm: return 4;
        case CellType::Gru: return 3;
    }
    return 0;
}

CellState CellState::zeros(CellType cell, std::size_t n) {
    CellState s;
    s.h.assign(n, 0.0);
    if (cell == CellType::Lstm) s.c.assign(n, 0.0);
    return s;
}

void NetworkConfig::validate() const {
    if (hidden.empty()) throw ConfigError("network needs at least one layer");
    for (std::size_t n : hidden) {
        if (n == 0) throw ConfigError("hidden layer width must be positive");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout rate must lie in [0, 1)");
    }
    if (seq_len == 0) throw ConfigError("sequence length must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

RnnModel make_model(const NetworkConfig& config, std::size_t input_dim) {
    config.validate();
    if (input_dim == 0) throw ConfigError("input dimension must be positive");

    Rng rng(derive_stream(config.seed, "init"));
    auto init_matrix = [&rng](Matrix& m, std::size_t fan_in, std::size_t fan_out) {
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : m.data) v = rng.uniform(-limit, limit);
    };

    RnnModel model;
    model.config = config;
    model.input_dim = input_dim;
    std::size_t d = input_dim;
    for (std::size_t layer = 0; layer < config.layer_count(); ++layer) {
        const std::size_t n = config.hidden[layer];
        CellParams cell;
        cell.gates.resize(gate_count(config.cell));
        for (std::size_t g = 0; g < cell.gates.size(); ++g) {
            GateParams& gate = cell.gates[g];
            gate.w = Matrix(n, d);
            gate.u = Matrix(n, n);
            gate.b.assign(n, 0.0);
            init_matrix(gate.w, d, n);
            init_matrix(gate.u, n, n);
            if (config.cell == CellType::Lstm && g == 0) {
                // Forget gate opens biased toward remembering.
                gate.b.assign(n, 1.0);
            }
        }
        model.layers.push_back(std::move(cell));
        d = n;
    }
    model.head_w.assign(d, 0.0);
    {
        const double limit = std::sqrt(6.0 / static_cast<double>(d + 1));
        for (double& v : model.head_w) v = rng.uniform(-limit, limit);
    }
    model.head_b = 0.0;
    return model;
}

void for_each_param(RnnModel& model, const std::function<void(std::span<double>)>& fn) {
    for (CellParams& cell : model.layers) {
        for (GateParams& gate : cell.gates) {
            fn(gate.w.data);
            fn(gate.u.data);
            fn(gate.b);
        }
    }
    fn(model.head_w);
    fn(std::span<double>(&model.head_b, 1));
}

void for_each_param(const RnnModel& model,
                    const std::function<void(std::span<const double>)>& fn) {
    for (const CellParams& cell : model.layers) {
        for (const GateParams& gate : cell.gates) {
            fn(gate.w.data);
            fn(gate.u.data);
            fn(gate.b);
        }
    }
    fn(model.head_w);
    fn(std::span<const double>(&model.head_b, 1));
}

void for_each_grad(const ModelGrads& grads,
                   const std::function<void(std::span<const double>)>& fn) {
    for (const CellParams& cell : grads.layers) {
        for (const GateParams& gate : cell.gates) {
            fn(gate.w.data);
            fn(gate.u.data);
            fn(gate.b);
        }
    }
    fn(grads.head_w);
    fn(std::span<const double>(&grads.head_b, 1));
}

std::size_t parameter_count(const RnnModel& model) {
    std::size_t count = 0;
    for_each_param(model, [&count](std::span<const double> p) { count += p.size(); });
    return count;
}

ModelGrads zero_grads(const RnnModel& model) {
    ModelGrads grads;
    grads.layers.reserve(model.layers.size());
    for (const CellParams& cell : model.layers) {
        CellParams zero;
        zero.gates.reserve(cell.gates.size());
        for (const GateParams& gate : cell.gates) {
            GateParams zg;
            zg.w = Matrix(gate.w.rows, gate.w.cols);
            zg.u = Matrix(gate.u.rows, gate.u.cols);
            zg.b.assign(gate.b.size(), 0.0);
            zero.gates.push_back(std::move(zg));
        }
        grads.layers.push_back(std::move(zero));
    }
    grads.head_w.assign(model.head_w.size(), 0.0);
    grads.head_b = 0.0;
    return grads;
}

// ---------------------------------------------------------------------------
// Cell steps
// ---------------------------------------------------------------------------

namespace {

enum : std::size_t { kF = 0, kI = 1, kC = 2, kO = 3 };  // LSTM gate order
enum : std::size_t { kZ = 0, kR = 1, kH = 2 };          // GRU gate order

LayerStepCache lstm_step_cached(const CellParams& p, std::span<const double> x,
                                const CellState& state) {
    const std::size_t n = p.hidden();
    LayerStepCache c;
    c.x.assign(x.begin(), x.end());
    c.h_prev = state.h;
    c.c_prev = state.c;

    c.g0 = gate_preactivation(p.gates[kF], x, state.h);
    apply_sigmoid(c.g0);
    c.g1 = gate_preactivation(p.gates[kI], x, state.h);
    apply_sigmoid(c.g1);
    c.g2 = gate_preactivation(p.gates[kC], x, state.h);
    apply_tanh(c.g2);
    c.g3 = gate_preactivation(p.gates[kO], x, state.h);
    apply_sigmoid(c.g3);

    c.c.resize(n);
    c.tanh_c.resize(n);
    c.h.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.c[k] = c.g1[k] * c.g2[k] + c.g0[k] * state.c[k];
        c.tanh_c[k] = std::tanh(c.c[k]);
        c.h[k] = c.g3[k] * c.tanh_c[k];
    }
    return c;
}

LayerStepCache gru_step_cached(const CellParams& p, std::span<const double> x,
                               const CellState& state) {
    const std::size_t n = p.hidden();
    LayerStepCache c;
    c.x.assign(x.begin(), x.end());
    c.h_prev = state.h;

    c.g0 = gate_preactivation(p.gates[kZ], x, state.h);
    apply_sigmoid(c.g0);
    c.g1 = gate_preactivation(p.gates[kR], x, state.h);
    apply_sigmoid(c.g1);

    c.aux.resize(n);
    for (std::size_t k = 0; k < n; ++k) c.aux[k] = c.g1[k] * state.h[k];
    c.g2 = gate_preactivation_on(p.gates[kH], x, c.aux);
    apply_tanh(c.g2);

    c.h.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        c.h[k] = c.g0[k] * state.h[k] + (1.0 - c.g0[k]) * c.g2[k];
    }
    return c;
}

LayerStepCache srnn_step_cached(const CellParams& p, std::span<const double> x,
                                const CellState& state) {
    LayerStepCache c;
    c.x.assign(x.begin(), x.end());
    c.h_prev = state.h;
    c.h = gate_preactivation(p.gates[0], x, state.h);
    apply_tanh(c.h);
    return c;
}

LayerStepCache step_cached(CellType cell, const CellParams& p, std::span<const double> x,
                           const CellState& state) {
    switch (cell) {
        case CellType::Lstm: return lstm_step_cached(p, x, state);
        case CellType::Gru: return gru_step_cached(p, x, state);
        case CellType::Srnn: return srnn_step_cached(p, x, state);
    }
    throw ShapeMismatch("unknown cell type");
}

}  // namespace

CellState lstm_step(const CellParams& params, std::span<const double> x,
                    const CellState& state) {
    check_step_shapes(params, x, state, CellType::Lstm);
    LayerStepCache c = lstm_step_cached(params, x, state);
    CellState next;
    next.h = std::move(c.h);
    next.c = std::move(c.c);
    return next;
}

CellState gru_step(const CellParams& params, std::span<const double> x, const CellState& state) {
    check_step_shapes(params, x, state, CellType::Gru);
    LayerStepCache c = gru_step_cached(params, x, state);
    CellState next;
    next.h = std::move(c.h);
    return next;
}

CellState srnn_step(const CellParams& params, std::span<const double> x,
                    const CellState& state) {
    check_step_shapes(params, x, state, CellType::Srnn);
    LayerStepCache c = srnn_step_cached(params, x, state);
    CellState next;
    next.h = std::move(c.h);
    return next;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

namespace {

void check_sample_shape(const RnnModel& model, const SequenceSample& sample) {
    if (sample.dim != model.input_dim) {
        throw ShapeMismatch("sample width " + std::to_string(sample.dim) +
                            " != model input " + std::to_string(model.input_dim));
    }
    if (sample.steps != model.config.seq_len) {
        throw ShapeMismatch("sample has " + std::to_string(sample.steps) + " steps, model expects " +
                            std::to_string(model.config.seq_len));
    }
    if (sample.inputs.size() != sample.steps * sample.dim) {
        throw ShapeMismatch("sample buffer size inconsistent");
    }
}

}  // namespace

double predict(const RnnModel& model, const SequenceSample& sample) {
    check_sample_shape(model, sample);
    const std::size_t T = sample.steps;
    const CellType cell = model.config.cell;

    std::vector<CellState> states;
    states.reserve(model.layers.size());
    for (const CellParams& layer : model.layers) {
        states.push_back(CellState::zeros(cell, layer.hidden()));
    }

    Vector carry;
    for (std::size_t t = 0; t < T; ++t) {
        std::span<const double> x = sample.step(t);
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            CellState next;
            switch (cell) {
                case CellType::Lstm: next = lstm_step(model.layers[l], x, states[l]); break;
                case CellType::Gru: next = gru_step(model.layers[l], x, states[l]); break;
                case CellType::Srnn: next = srnn_step(model.layers[l], x, states[l]); break;
            }
            states[l] = std::move(next);
            carry = states[l].h;
            x = std::span<const double>(carry);
        }
    }
    return dot(model.head_w, states.back().h) + model.head_b;
}

SampleCache forward_cached(const RnnModel& model, const SequenceSample& sample, RunMode mode,
                           Rng* dropout_rng) {
    check_sample_shape(model, sample);
    const std::size_t T = sample.steps;
    const std::size_t L = model.layers.size();
    const CellType cell = model.config.cell;

    SampleCache out;
    out.steps.resize(L);

    std::vector<CellState> states;
    states.reserve(L);
    for (const CellParams& layer : model.layers) {
        states.push_back(CellState::zeros(cell, layer.hidden()));
        out.steps[&layer - model.layers.data()].reserve(T);
    }

    for (std::size_t t = 0; t < T; ++t) {
        std::span<const double> x = sample.step(t);
        for (std::size_t l = 0; l < L; ++l) {
            check_step_shapes(model.layers[l], x, states[l], cell);
            LayerStepCache step = step_cached(cell, model.layers[l], x, states[l]);
            states[l].h = step.h;
            if (cell == CellType::Lstm) states[l].c = step.c;
            out.steps[l].push_back(std::move(step));
            x = std::span<const double>(states[l].h);
        }
    }

    const std::size_t n_last = model.layers.back().hidden();
    out.dropout_scale.assign(n_last, 1.0);
    const double rate = model.config.dropout_rate;
    if (mode == RunMode::Train && rate > 0.0) {
        if (dropout_rng == nullptr) {
            throw ShapeMismatch("train-mode forward needs a dropout rng");
        }
        const double keep = 1.0 - rate;
        for (double& s : out.dropout_scale) {
            s = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
        }
    }

    out.final_hidden.resize(n_last);
    const Vector& h_final = states.back().h;
    for (std::size_t k = 0; k < n_last; ++k) {
        out.final_hidden[k] = h_final[k] * out.dropout_scale[k];
    }
    out.prediction = dot(model.head_w, out.final_hidden) + model.head_b;
    return out;
}

BatchCache forward_batch(const RnnModel& model, std::span<const SequenceSample> batch,
                         RunMode mode, Rng* dropout_rng) {
    BatchCache cache;
    cache.samples.reserve(batch.size());
    for (const SequenceSample& sample : batch) {
        cache.samples.push_back(forward_cached(model, sample, mode, dropout_rng));
    }
    cache.batch_hash = hash_batch(batch);
    return cache;
}

std::uint64_t hash_batch(std::span<const SequenceSample> batch) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const SequenceSample& s : batch) {
        mix(&s.steps, sizeof(s.steps));
        mix(&s.dim, sizeof(s.dim));
        mix(s.inputs.data(), s.inputs.size() * sizeof(double));
        mix(&s.target, sizeof(s.target));
    }
    return h;
}

// ---------------------------------------------------------------------------
// Loss + backward
// ---------------------------------------------------------------------------

double quadratic_loss(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) {
        throw LengthMismatch("loss: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(targets.size()) + " targets");
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r = targets[i] - predictions[i];
        loss += 0.5 * r * r;
    }
    return loss;
}

namespace {

// Backward through one layer of one sample; `d_ext[t]` carries the gradient
// arriving at h_t from above (head or upper layer). Returns d_x per step.
std::vector<Vector> backward_layer(CellType cell, const CellParams& p,
                                   const std::vector<LayerStepCache>& steps,
                                   const std::vector<Vector>& d_ext, CellParams& grads) {
    const std::size_t T = steps.size();
    const std::size_t n = p.hidden();
    const std::size_t d = p.input();

    std::vector<Vector> d_x(T, Vector(d, 0.0));
    Vector dh_carry(n, 0.0);
    Vector dc_carry(n, 0.0);

    Vector dh(n), da0(n), da1(n), da2(n), da3(n), dc(n), du(n);

    for (std::size_t ti = T; ti-- > 0;) {
        const LayerStepCache& s = steps[ti];
        for (std::size_t k = 0; k < n; ++k) dh[k] = d_ext[ti][k] + dh_carry[k];

        switch (cell) {
            case CellType::Lstm: {
                const Vector& f = s.g0;
                const Vector& i = s.g1;
                const Vector& ct = s.g2;
                const Vector& o = s.g3;
                for (std::size_t k = 0; k < n; ++k) {
                    da3[k] = dh[k] * s.tanh_c[k] * o[k] * (1.0 - o[k]);
                    dc[k] = dc_carry[k] + dh[k] * o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]);
                    da0[k] = dc[k] * s.c_prev[k] * f[k] * (1.0 - f[k]);
                    da1[k] = dc[k] * ct[k] * i[k] * (1.0 - i[k]);
                    da2[k] = dc[k] * i[k] * (1.0 - ct[k] * ct[k]);
                    dc_carry[k] = dc[k] * f[k];
                }
                std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
                const std::array<const Vector*, 4> das = {&da0, &da1, &da2, &da3};
                for (std::size_t g = 0; g < 4; ++g) {
                    outer_add(grads.gates[g].w, *das[g], s.x);
                    outer_add(grads.gates[g].u, *das[g], s.h_prev);
                    for (std::size_t k = 0; k < n; ++k) grads.gates[g].b[k] += (*das[g])[k];
                    matvec_transposed_add(p.gates[g].u, *das[g], dh_carry);
                    matvec_transposed_add(p.gates[g].w, *das[g], d_x[ti]);
                }
                break;
            }
            case CellType::Gru: {
                const Vector& z = s.g0;
                const Vector& r = s.g1;
                const Vector& cand = s.g2;
                for (std::size_t k = 0; k < n; ++k) {
                    da0[k] = dh[k] * (s.h_prev[k] - cand[k]) * z[k] * (1.0 - z[k]);
                    da2[k] = dh[k] * (1.0 - z[k]) * (1.0 - cand[k] * cand[k]);
                }
                std::fill(du.begin(), du.end(), 0.0);
                matvec_transposed_add(p.gates[kH].u, da2, du);
                for (std::size_t k = 0; k < n; ++k) {
                    da1[k] = du[k] * s.h_prev[k] * r[k] * (1.0 - r[k]);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    dh_carry[k] = dh[k] * z[k] + du[k] * r[k];
                }
                matvec_transposed_add(p.gates[kZ].u, da0, dh_carry);
                matvec_transposed_add(p.gates[kR].u, da1, dh_carry);

                outer_add(grads.gates[kZ].w, da0, s.x);
                outer_add(grads.gates[kZ].u, da0, s.h_prev);
                outer_add(grads.gates[kR].w, da1, s.x);
                outer_add(grads.gates[kR].u, da1, s.h_prev);
                outer_add(grads.gates[kH].w, da2, s.x);
                outer_add(grads.gates[kH].u, da2, s.aux);
                for (std::size_t k = 0; k < n; ++k) {
                    grads.gates[kZ].b[k] += da0[k];
                    grads.gates[kR].b[k] += da1[k];
                    grads.gates[kH].b[k] += da2[k];
                }
                matvec_transposed_add(p.gates[kZ].w, da0, d_x[ti]);
                matvec_transposed_add(p.gates[kR].w, da1, d_x[ti]);
                matvec_transposed_add(p.gates[kH].w, da2, d_x[ti]);
                break;
            }
            case CellType::Srnn: {
                for (std::size_t k = 0; k < n; ++k) {
                    da0[k] = dh[k] * (1.0 - s.h[k] * s.h[k]);
                }
                outer_add(grads.gates[0].w, da0, s.x);
                outer_add(grads.gates[0].u, da0, s.h_prev);
                for (std::size_t k = 0; k < n; ++k) grads.gates[0].b[k] += da0[k];
                std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
                matvec_transposed_add(p.gates[0].u, da0, dh_carry);
                matvec_transposed_add(p.gates[0].w, da0, d_x[ti]);
                break;
            }
        }
    }
    return d_x;
}

}  // namespace

ModelGrads backward(const RnnModel& model, std::span<const SequenceSample> batch,
                    const BatchCache& cache) {
    if (cache.samples.size() != batch.size() || cache.batch_hash != hash_batch(batch)) {
        throw StaleCache("forward cache does not match the batch handed to backward");
    }

    ModelGrads grads = zero_grads(model);
    const std::size_t L = model.layers.size();
    const std::size_t T = model.config.seq_len;
    const CellType cell = model.config.cell;

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const SampleCache& sc = cache.samples[b];
        const double residual = sc.prediction - batch[b].target;  // dL/dpred

        grads.head_b += residual;
        const std::size_t n_last = model.head_w.size();
        Vector dh_final(n_last);
        for (std::size_t k = 0; k < n_last; ++k) {
            grads.head_w[k] += residual * sc.final_hidden[k];
            // Through inverted dropout: final_hidden = h (.) scale.
            dh_final[k] = residual * model.head_w[k] * sc.dropout_scale[k];
        }

        // External gradient per timestep for the layer being processed.
        std::vector<Vector> d_ext(T);
        for (std::size_t t = 0; t < T; ++t) d_ext[t].assign(n_last, 0.0);
        d_ext[T - 1] = dh_final;

        for (std::size_t l = L; l-- > 0;) {
            std::vector<Vector> d_x =
                backward_layer(cell, model.layers[l], sc.steps[l], d_ext, grads.layers[l]);
            if (l > 0) d_ext = std::move(d_x);
        }
    }
    return grads;
}

}  // namespace tbp
