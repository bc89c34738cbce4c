#include "tbp/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

double mean_loss(const RnnModel& model, std::span<const SequenceSample> samples) {
    if (samples.empty()) return 0.0;
    double sum = 0.0;
    for (const SequenceSample& s : samples) {
        const double r = s.target - predict(model, s);
        sum += 0.5 * r * r;
    }
    return sum / static_cast<double>(samples.size());
}

TrainResult train(RnnModel model, std::span<const SequenceSample> train_samples,
                  std::span<const SequenceSample> val_samples) {
    if (train_samples.empty()) throw EmptyTrainSet("no training samples");
    model.config.validate();

    const NetworkConfig& cfg = model.config;
    AdamParams hyper;
    hyper.learning_rate = cfg.learning_rate;
    AdamState opt = make_adam_state(model);

    TrainResult result;
    result.model = model;
    double best = std::numeric_limits<double>::infinity();
    std::size_t bad_epochs = 0;

    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<SequenceSample> batch;
    std::vector<double> preds;
    std::vector<double> targets;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng shuffle_rng(derive_stream(cfg.seed, "shuffle", epoch));
        Rng dropout_rng(derive_stream(cfg.seed, "dropout", epoch));
        shuffle_rng.shuffle(order);

        double epoch_loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) batch.push_back(train_samples[order[i]]);

            BatchCache cache = forward_batch(model, batch, RunMode::Train, &dropout_rng);
            preds.clear();
            targets.clear();
            for (std::size_t i = 0; i < batch.size(); ++i) {
                preds.push_back(cache.samples[i].prediction);
                targets.push_back(batch[i].target);
            }
            const double batch_loss = quadratic_loss(preds, targets);
            if (!std::isfinite(batch_loss)) {
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_loss_sum += batch_loss;

            ModelGrads grads = backward(model, batch, cache);
            adam_update_model(opt, model, grads, hyper);
        }

        const double train_loss = epoch_loss_sum / static_cast<double>(train_samples.size());
        const double val_loss =
            val_samples.empty() ? train_loss : mean_loss(model, val_samples);
        if (!std::isfinite(val_loss)) {
            throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(epoch));
        }
        result.history.push_back({epoch, train_loss, val_loss});
        result.epochs_run = epoch;

        if (val_loss < best) {
            best = val_loss;
            result.model = model;
            result.best_epoch = epoch;
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs > cfg.patience) break;
        }
    }

    result.best_val_loss = best;
    return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochStats>& history) {
    out << "epoch,train_loss,val_loss\n";
    for (const EpochStats& e : history) {
        out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss)
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

std::uint64_t config_content_seed(const NetworkConfig& config) {
    std::ostringstream key;
    key << to_string(config.cell) << '|';
    for (std::size_t n : config.hidden) key << n << ',';
    key << '|' << format_double17(config.dropout_rate) << '|' << config.seq_len << '|'
        << format_double17(config.learning_rate) << '|' << config.batch_size << '|'
        << config.max_epochs << '|' << config.patience;
    const std::string text = key.str();
    std::uint64_t h = fnv1a64(text.data(), text.size());
    std::uint64_t state = config.seed ^ h;
    return splitmix64(state);
}

namespace {

std::size_t total_units(const NetworkConfig& c) {
    std::size_t sum = 0;
    for (std::size_t n : c.hidden) sum += n;
    return sum;
}

// Lexicographic preference: lower val loss, fewer layers, fewer units,
// dropout enabled, earlier grid position.
bool better_than(const GridEntry& a, std::size_t ia, const GridEntry& b, std::size_t ib) {
    if (a.val_loss != b.val_loss) return a.val_loss < b.val_loss;
    if (a.config.layer_count() != b.config.layer_count()) {
        return a.config.layer_count() < b.config.layer_count();
    }
    if (total_units(a.config) != total_units(b.config)) {
        return total_units(a.config) < total_units(b.config);
    }
    const bool a_drop = a.config.dropout_rate > 0.0;
    const bool b_drop = b.config.dropout_rate > 0.0;
    if (a_drop != b_drop) return a_drop;
    return ia < ib;
}

}  // namespace

GridSearchResult grid_search(std::span<const NetworkConfig> grid, std::size_t input_dim,
                             std::span<const SequenceSample> train_samples,
                             std::span<const SequenceSample> val_samples) {
    if (grid.empty()) throw ConfigError("grid search needs at least one config");

    GridSearchResult result;
    bool have_best = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        NetworkConfig cfg = grid[i];
        cfg.seed = config_content_seed(cfg);
        TrainResult run = train(make_model(cfg, input_dim), train_samples, val_samples);

        GridEntry entry;
        entry.config = cfg;
        entry.val_loss = run.best_val_loss;
        entry.epochs_run = run.epochs_run;
        result.entries.push_back(entry);

        if (!have_best ||
            better_than(result.entries[i], i, result.entries[result.best_index],
                        result.best_index)) {
            result.best_index = i;
            result.best = std::move(run);
            have_best = true;
        }
    }
    return result;
}

std::vector<NetworkConfig> default_grid(const NetworkConfig& base) {
    std::vector<NetworkConfig> grid;
    for (std::size_t layers : {1u, 2u, 3u}) {
        for (std::size_t units : {8u, 16u, 32u, 64u, 128u}) {
            for (double dropout : {0.5, 0.0}) {
                NetworkConfig cfg = base;
                cfg.hidden.assign(layers, units);
                cfg.dropout_rate = dropout;
                grid.push_back(cfg);
            }
        }
    }
    return grid;
}

}  // namespace tbp
