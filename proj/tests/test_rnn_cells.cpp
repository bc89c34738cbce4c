#include <doctest.h>

#include <cmath>

#include "tbp/errors.hpp"
#include "tbp/rnn.hpp"
#include "test_support.hpp"

using namespace tbp;

namespace {

CellParams zero_cell(CellType cell, std::size_t n, std::size_t d) {
    CellParams p;
    p.gates.resize(gate_count(cell));
    for (auto& g : p.gates) {
        g.w = Matrix(n, d);
        g.u = Matrix(n, n);
        g.b.assign(n, 0.0);
    }
    return p;
}

}  // namespace

TEST_CASE("lstm_step: zero params, zero state") {
    const std::size_t n = 3;
    const auto p = zero_cell(CellType::Lstm, n, 2);
    const std::vector<double> x = {0.5, -0.5};
    const auto next = lstm_step(p, x, CellState::zeros(CellType::Lstm, n));
    // Gates sit at sigmoid(0) = 0.5, the candidate at tanh(0) = 0, so both
    // the cell state and the output stay exactly zero.
    for (double h : next.h) CHECK(h == 0.0);
    for (double c : next.c) CHECK(c == 0.0);
}

TEST_CASE("lstm_step: zero params, prior cell state 2 -> h = 0.5*tanh(1)") {
    const std::size_t n = 3;
    const auto p = zero_cell(CellType::Lstm, n, 2);
    CellState state = CellState::zeros(CellType::Lstm, n);
    state.c.assign(n, 2.0);
    const std::vector<double> x = {0.1, 0.2};
    const auto next = lstm_step(p, x, state);
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(next.c[k] == doctest::Approx(1.0).epsilon(1e-15));  // f*C = 0.5*2
        CHECK(next.h[k] == doctest::Approx(0.5 * std::tanh(1.0)).epsilon(1e-12));
        CHECK(next.h[k] == doctest::Approx(0.380797).epsilon(1e-5));
    }
}

TEST_CASE("lstm_step: shape mismatch is rejected") {
    const auto p = zero_cell(CellType::Lstm, 3, 2);
    const std::vector<double> wrong_x = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(lstm_step(p, wrong_x, CellState::zeros(CellType::Lstm, 3)), ShapeMismatch);
}

TEST_CASE("gru_step: zero params halve the carried state") {
    const std::size_t n = 4;
    const auto p = zero_cell(CellType::Gru, n, 3);
    CellState state = CellState::zeros(CellType::Gru, n);
    const std::vector<double> v = {0.3, -1.2, 0.8, 2.0};
    state.h = v;
    const std::vector<double> x = {0.1, 0.0, -0.4};
    const auto next = gru_step(p, x, state);
    // z = 0.5 and the candidate vanishes, so h' = 0.5 v.
    for (std::size_t k = 0; k < n; ++k) {
        CHECK(next.h[k] == doctest::Approx(0.5 * v[k]).epsilon(1e-15));
    }
}

TEST_CASE("gru_step: zero params, zero state stays zero") {
    const auto p = zero_cell(CellType::Gru, 4, 3);
    const std::vector<double> x = {1.0, -2.0, 0.5};
    const auto next = gru_step(p, x, CellState::zeros(CellType::Gru, 4));
    for (double h : next.h) CHECK(h == 0.0);
}

TEST_CASE("srnn_step: zero params give zero state") {
    const auto p = zero_cell(CellType::Srnn, 3, 2);
    const std::vector<double> x = {2.0, -3.0};
    const auto next = srnn_step(p, x, CellState::zeros(CellType::Srnn, 3));
    for (double h : next.h) CHECK(h == 0.0);
}

TEST_CASE("srnn_step: U = 0 makes the step stateless") {
    auto p = testsup::random_cell(CellType::Srnn, 3, 2, 51);
    p.gates[0].u.fill(0.0);
    const std::vector<double> x = {0.4, -0.7};
    CellState a = CellState::zeros(CellType::Srnn, 3);
    CellState b = CellState::zeros(CellType::Srnn, 3);
    b.h = {0.9, -0.9, 0.3};
    CHECK(srnn_step(p, x, a).h == srnn_step(p, x, b).h);
}

TEST_CASE("cell steps match the scalar reference over 5 steps") {
    const std::size_t n = 3;
    const std::size_t d = 2;
    const auto xs = testsup::random_inputs(5, d, 1234);

    for (CellType cell : {CellType::Lstm, CellType::Gru, CellType::Srnn}) {
        CAPTURE(to_string(cell));
        const auto p = testsup::random_cell(cell, n, d, 777);
        const auto ref = testsup::ref_sequence(cell, p, xs);

        CellState s = CellState::zeros(cell, n);
        for (std::size_t t = 0; t < xs.size(); ++t) {
            switch (cell) {
                case CellType::Lstm: s = lstm_step(p, xs[t], s); break;
                case CellType::Gru: s = gru_step(p, xs[t], s); break;
                case CellType::Srnn: s = srnn_step(p, xs[t], s); break;
            }
            for (std::size_t k = 0; k < n; ++k) {
                CHECK(std::abs(s.h[k] - ref[t][k]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("property: LSTM gate ranges on random inputs") {
    const std::size_t n = 5;
    const auto p = testsup::random_cell(CellType::Lstm, n, 4, 31);
    Rng rng(32);
    CellState s = CellState::zeros(CellType::Lstm, n);
    SequenceSample sample = testsup::random_sample(8, 4, 33);

    NetworkConfig cfg;
    cfg.cell = CellType::Lstm;
    cfg.hidden = {n};
    cfg.dropout_rate = 0.0;
    cfg.seq_len = 8;
    RnnModel model;
    model.config = cfg;
    model.input_dim = 4;
    model.layers = {p};
    model.head_w.assign(n, 0.1);

    const SampleCache cache = forward_cached(model, sample, RunMode::Infer, nullptr);
    for (const LayerStepCache& step : cache.steps[0]) {
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(step.g0[k] > 0.0);  // f
            CHECK(step.g0[k] < 1.0);
            CHECK(step.g1[k] > 0.0);  // i
            CHECK(step.g1[k] < 1.0);
            CHECK(step.g3[k] > 0.0);  // o
            CHECK(step.g3[k] < 1.0);
            CHECK(step.g2[k] > -1.0);  // candidate
            CHECK(step.g2[k] < 1.0);
        }
    }
}

TEST_CASE("property: GRU gate ranges on random inputs") {
    const std::size_t n = 5;
    NetworkConfig cfg;
    cfg.cell = CellType::Gru;
    cfg.hidden = {n};
    cfg.dropout_rate = 0.0;
    cfg.seq_len = 8;
    RnnModel model;
    model.config = cfg;
    model.input_dim = 4;
    model.layers = {testsup::random_cell(CellType::Gru, n, 4, 41)};
    model.head_w.assign(n, 0.1);

    const SampleCache cache =
        forward_cached(model, testsup::random_sample(8, 4, 42), RunMode::Infer, nullptr);
    for (const LayerStepCache& step : cache.steps[0]) {
        for (std::size_t k = 0; k < n; ++k) {
            CHECK(step.g0[k] > 0.0);  // z
            CHECK(step.g0[k] < 1.0);
            CHECK(step.g1[k] > 0.0);  // r
            CHECK(step.g1[k] < 1.0);
        }
    }
}

TEST_CASE("parameter counts follow the closed forms") {
    const std::size_t d = 5;
    for (std::size_t n : {4u, 36u}) {
        NetworkConfig cfg;
        cfg.hidden = {n};
        cfg.seq_len = 36;
        cfg.seed = 1;

        cfg.cell = CellType::Lstm;
        CHECK(parameter_count(make_model(cfg, d)) == 4 * (n * d + n * n + n) + n + 1);
        cfg.cell = CellType::Gru;
        CHECK(parameter_count(make_model(cfg, d)) == 3 * (n * d + n * n + n) + n + 1);
        cfg.cell = CellType::Srnn;
        CHECK(parameter_count(make_model(cfg, d)) == (n * d + n * n + n) + n + 1);
    }
    // Stacked: second layer's W maps n -> n.
    NetworkConfig cfg;
    cfg.cell = CellType::Lstm;
    cfg.hidden = {8, 8};
    cfg.seq_len = 36;
    cfg.seed = 1;
    const std::size_t n = 8;
    CHECK(parameter_count(make_model(cfg, d)) ==
          4 * (n * d + n * n + n) + 4 * (n * n + n * n + n) + n + 1);
}

TEST_CASE("make_model: LSTM forget bias starts at +1, others at 0") {
    NetworkConfig cfg;
    cfg.cell = CellType::Lstm;
    cfg.hidden = {6};
    cfg.seed = 9;
    const RnnModel model = make_model(cfg, 5);
    for (double b : model.layers[0].gates[0].b) CHECK(b == 1.0);
    for (std::size_t g = 1; g < 4; ++g) {
        for (double b : model.layers[0].gates[g].b) CHECK(b == 0.0);
    }
    CHECK(model.head_b == 0.0);
}

TEST_CASE("forward: zero parameters predict exactly the head bias") {
    NetworkConfig cfg;
    cfg.cell = CellType::Lstm;
    cfg.hidden = {4};
    cfg.seq_len = 6;
    cfg.seed = 3;
    RnnModel model = make_model(cfg, 3);
    for_each_param(model, [](std::span<double> p) {
        for (double& v : p) v = 0.0;
    });
    CHECK(predict(model, testsup::random_sample(6, 3, 8)) == 0.0);
}

TEST_CASE("forward: infer mode is bit-deterministic") {
    NetworkConfig cfg;
    cfg.cell = CellType::Gru;
    cfg.hidden = {7};
    cfg.seq_len = 12;
    cfg.seed = 21;
    const RnnModel model = make_model(cfg, 5);
    const auto sample = testsup::random_sample(12, 5, 22);
    const double a = predict(model, sample);
    const double b = predict(model, sample);
    CHECK(a == b);
    const auto cache = forward_cached(model, sample, RunMode::Infer, nullptr);
    CHECK(cache.prediction == a);
}

TEST_CASE("forward: train mode with the same mask seed is bit-deterministic") {
    NetworkConfig cfg;
    cfg.cell = CellType::Lstm;
    cfg.hidden = {6};
    cfg.seq_len = 10;
    cfg.dropout_rate = 0.5;
    cfg.seed = 77;
    const RnnModel model = make_model(cfg, 4);
    const auto sample = testsup::random_sample(10, 4, 78);

    Rng rng_a(123);
    Rng rng_b(123);
    const auto a = forward_cached(model, sample, RunMode::Train, &rng_a);
    const auto b = forward_cached(model, sample, RunMode::Train, &rng_b);
    CHECK(a.prediction == b.prediction);
    CHECK(a.dropout_scale == b.dropout_scale);
}

TEST_CASE("property: inverted dropout is unbiased on the linear head") {
    NetworkConfig cfg;
    cfg.cell = CellType::Srnn;
    cfg.hidden = {8};
    cfg.seq_len = 6;
    cfg.dropout_rate = 0.5;
    cfg.seed = 5;
    const RnnModel model = make_model(cfg, 3);
    const auto sample = testsup::random_sample(6, 3, 6);

    const double infer = predict(model, sample);
    const std::size_t trials = 10000;
    Rng rng(991);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        const auto cache = forward_cached(model, sample, RunMode::Train, &rng);
        const double gap = cache.prediction - infer;
        sum += gap;
        sum_sq += gap * gap;
    }
    const double mean = sum / trials;
    const double var = sum_sq / trials - mean * mean;
    const double stderr_mean = std::sqrt(var / trials);
    CHECK(std::abs(mean) <= 3.0 * stderr_mean + 1e-12);
}

TEST_CASE("loss: spec examples") {
    const std::vector<double> a = {1.0, -2.0, 0.5};
    CHECK(quadratic_loss(a, a) == 0.0);
    CHECK(quadratic_loss(std::vector<double>{0.0}, std::vector<double>{2.0}) == 2.0);

    // Random pair against the written-out formula.
    Rng rng(64);
    std::vector<double> preds(9), targets(9);
    for (std::size_t i = 0; i < 9; ++i) {
        preds[i] = rng.uniform(-1, 1);
        targets[i] = rng.uniform(-1, 1);
    }
    double expected = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
        expected += 0.5 * (targets[i] - preds[i]) * (targets[i] - preds[i]);
    }
    CHECK(quadratic_loss(preds, targets) == doctest::Approx(expected).epsilon(1e-15));

    CHECK_THROWS_AS(quadratic_loss(a, std::vector<double>{1.0}), LengthMismatch);
}
