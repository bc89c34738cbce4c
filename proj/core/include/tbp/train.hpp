#pragma once

// Training loop (seeded shuffling, mini-batches, ADAM, best-validation
// early stopping) plus hyperparameter grid search.

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "tbp/adam.hpp"
#include "tbp/rnn.hpp"
#include "tbp/sample.hpp"

namespace tbp {

struct EpochStats {
    std::size_t epoch = 0;   // 1-based
    double train_loss = 0.0;  // mean per-sample 1/2 (r - r_hat)^2
    double val_loss = 0.0;
};

struct TrainResult {
    RnnModel model;          // best-validation parameters
    std::vector<EpochStats> history;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
};

// Epoch loop: shuffle with the (seed, "shuffle", epoch) stream, mini-batches
// of config.batch_size (last partial batch kept), ADAM updates, validation in
// infer mode, keep best-validation parameters, stop after `patience` epochs
// without improvement or at max_epochs. Throws EmptyTrainSet /
// TrainingDiverged. An empty validation set falls back to the train loss as
// the selection criterion.
TrainResult train(RnnModel model, std::span<const SequenceSample> train_samples,
                  std::span<const SequenceSample> val_samples);

double mean_loss(const RnnModel& model, std::span<const SequenceSample> samples);

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history);

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridEntry {
    NetworkConfig config;
    double val_loss = 0.0;
    std::size_t epochs_run = 0;
};

struct GridSearchResult {
    std::size_t best_index = 0;
    TrainResult best;        // retraining not needed: best run is kept
    std::vector<GridEntry> entries;
};

// Every config trains on the same data with a per-config seed derived from
// the *content* of the config, so duplicates tie exactly. Winner = lowest
// validation loss; ties broken by fewer layers, then fewer units, then
// dropout enabled, then grid order.
GridSearchResult grid_search(std::span<const NetworkConfig> grid, std::size_t input_dim,
                             std::span<const SequenceSample> train_samples,
                             std::span<const SequenceSample> val_samples);

// The default sweep: layers {1,2,3} x units {8,16,32,64,128} x dropout
// {0.5, none} on top of `base` (30 configs).
std::vector<NetworkConfig> default_grid(const NetworkConfig& base);

std::uint64_t config_content_seed(const NetworkConfig& config);

}  // namespace tbp
