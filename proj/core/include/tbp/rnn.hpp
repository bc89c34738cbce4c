#pragma once

// Recurrent cells (S-RNN, LSTM, GRU) with forward pass, exact
// backpropagation through time over the full input window, and inverted
// dropout on the final hidden state. Many-to-one: one scalar prediction per
// window from a linear head.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tbp/matrix.hpp"
#include "tbp/rng.hpp"
#include "tbp/sample.hpp"

namespace tbp {

enum class CellType { Srnn, Lstm, Gru };

const char* to_string(CellType cell);
CellType cell_type_from_string(const std::string& name);
std::size_t gate_count(CellType cell);  // S-RNN 1, GRU 3, LSTM 4

// One (W, U, b) triple: W maps the input, U the previous hidden state.
struct GateParams {
    Matrix w;  // n x d
    Matrix u;  // n x n
    Vector b;  // n
};

// Gate order is fixed and is the checkpoint / gradient enumeration order:
// LSTM {f, i, c, o}; GRU {z, r, h}; S-RNN the single triple.
struct CellParams {
    std::vector<GateParams> gates;

    std::size_t hidden() const { return gates.empty() ? 0 : gates[0].b.size(); }
    std::size_t input() const { return gates.empty() ? 0 : gates[0].w.cols; }
};

struct CellState {
    Vector h;
    Vector c;  // LSTM only; empty otherwise

    static CellState zeros(CellType cell, std::size_t n);
};

struct NetworkConfig {
    CellType cell = CellType::Lstm;
    std::vector<std::size_t> hidden = {36};  // per layer; size() == layer count
    double dropout_rate = 0.5;               // [0, 1); applied after the last recurrent layer
    std::size_t seq_len = 36;
    double learning_rate = 0.001;
    std::size_t batch_size = 20;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    std::uint64_t seed = 0;

    std::size_t layer_count() const { return hidden.size(); }
    void validate() const;  // throws ConfigError
};

struct RnnModel {
    NetworkConfig config;
    std::size_t input_dim = 0;
    std::vector<CellParams> layers;
    Vector head_w;        // 1 x n_last
    double head_b = 0.0;
};

// Gradients share the parameter shape tree.
struct ModelGrads {
    std::vector<CellParams> layers;
    Vector head_w;
    double head_b = 0.0;
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

// Weights ~ uniform(-l, l), l = sqrt(6 / (fan_in + fan_out)); biases zero
// except the LSTM forget-gate bias at +1. All draws come from the
// (seed, "init") stream.
RnnModel make_model(const NetworkConfig& config, std::size_t input_dim);

std::size_t parameter_count(const RnnModel& model);

// Enumerates every parameter buffer in canonical order (layer-major, gate
// order, W then U then b, then head weights, then head bias).
void for_each_param(RnnModel& model, const std::function<void(std::span<double>)>& fn);
void for_each_param(const RnnModel& model,
                    const std::function<void(std::span<const double>)>& fn);
void for_each_grad(const ModelGrads& grads,
                   const std::function<void(std::span<const double>)>& fn);

ModelGrads zero_grads(const RnnModel& model);

// ---------------------------------------------------------------------------
// Single-cell steps (state in, state out)
// ---------------------------------------------------------------------------

CellState lstm_step(const CellParams& params, std::span<const double> x, const CellState& state);
CellState gru_step(const CellParams& params, std::span<const double> x, const CellState& state);
CellState srnn_step(const CellParams& params, std::span<const double> x, const CellState& state);

// ---------------------------------------------------------------------------
// Forward / backward over a window
// ---------------------------------------------------------------------------

enum class RunMode { Train, Infer };

// Everything backward needs from one layer step.
struct LayerStepCache {
    Vector x;       // input to this layer at t
    Vector h_prev;
    Vector c_prev;  // LSTM
    Vector g0, g1, g2, g3;  // LSTM f,i,c~,o; GRU z,r,candidate; S-RNN unused
    Vector aux;     // GRU: r (.) h_prev
    Vector h;
    Vector c;       // LSTM
    Vector tanh_c;  // LSTM
};

struct SampleCache {
    std::vector<std::vector<LayerStepCache>> steps;  // [layer][t]
    Vector dropout_scale;  // per-element mask/keep factor on the final hidden state
    Vector final_hidden;   // after dropout scaling
    double prediction = 0.0;
};

struct BatchCache {
    std::vector<SampleCache> samples;
    std::uint64_t batch_hash = 0;  // guards backward against a stale cache
};

// Inference-mode prediction; no cache, no dropout.
double predict(const RnnModel& model, const SequenceSample& sample);

// Train mode draws one dropout mask per sample from `dropout_rng`
// (inverted dropout: kept elements scaled by 1/keep). Infer mode ignores it.
SampleCache forward_cached(const RnnModel& model, const SequenceSample& sample, RunMode mode,
                           Rng* dropout_rng);

BatchCache forward_batch(const RnnModel& model, std::span<const SequenceSample> batch,
                         RunMode mode, Rng* dropout_rng);

// Quadratic loss L = 1/2 sum_b (target_b - pred_b)^2 (batch sum).
double quadratic_loss(std::span<const double> predictions, std::span<const double> targets);

// Exact full-window BPTT gradients of the batch-sum quadratic loss.
// The cache must come from forward_batch on the same batch (StaleCache).
ModelGrads backward(const RnnModel& model, std::span<const SequenceSample> batch,
                    const BatchCache& cache);

std::uint64_t hash_batch(std::span<const SequenceSample> batch);

}  // namespace tbp
