#pragma once

// Glue between the data panel and a trained predictor: sliding-window
// predictions over an anchor range, shaped both as per-record rows (metrics)
// and as month-by-asset tables (backtests).

#include <span>
#include <vector>

#include "tbp/evaluation.hpp"
#include "tbp/market_data.hpp"
#include "tbp/portfolio.hpp"
#include "tbp/rnn.hpp"

namespace tbp {

struct PredictionTable {
    ReturnPanel predicted;
    ReturnPanel realized;
    std::vector<PredictionRecord> records;  // asset-major, months ascending
};

// Inference-mode predictions for every (asset, anchor) in `range` with full
// window history and a defined target. All assets share the anchor axis.
PredictionTable predict_range(const RnnModel& model, const MonthlyFeaturePanel& panel,
                              IndexRange range);

// Realized next-month returns only (for EWP / per-asset baselines).
ReturnPanel realized_panel(const MonthlyFeaturePanel& panel, IndexRange range,
                           std::size_t window);

std::vector<SequenceSample> extract_sequences(std::span<const WindowedSample> windows);

}  // namespace tbp
