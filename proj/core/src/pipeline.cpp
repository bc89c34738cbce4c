#include "tbp/pipeline.hpp"

#include <algorithm>

#include "tbp/errors.hpp"

namespace tbp {

namespace {

// Anchor axis shared by all assets: enough history and a defined target.
IndexRange anchor_range(const MonthlyFeaturePanel& panel, IndexRange range, std::size_t window) {
    if (panel.month_count() == 0) return {0, 0};
    const std::size_t first = std::max(range.begin, window - 1);
    const std::size_t last = std::min(range.end, panel.month_count() - 1);
    if (first >= last) return {0, 0};
    return {first, last};
}

}  // namespace

ReturnPanel realized_panel(const MonthlyFeaturePanel& panel, IndexRange range,
                           std::size_t window) {
    const IndexRange anchors = anchor_range(panel, range, window);
    ReturnPanel out;
    out.assets = panel.assets;
    out.values = Matrix(anchors.size(), panel.asset_count());
    for (std::size_t t = anchors.begin; t < anchors.end; ++t) {
        out.months.push_back(panel.months[t]);
        for (std::size_t a = 0; a < panel.asset_count(); ++a) {
            out.values(t - anchors.begin, a) = panel.targets[a][t];
        }
    }
    return out;
}

PredictionTable predict_range(const RnnModel& model, const MonthlyFeaturePanel& panel,
                              IndexRange range) {
    if (panel.asset_count() == 0) throw MisalignedPredictions("panel has no assets");
    if (model.input_dim != MonthlyFeaturePanel::kAttributes) {
        throw ShapeMismatch("model input width " + std::to_string(model.input_dim) +
                            " does not match panel features");
    }
    const std::size_t window = model.config.seq_len;
    const IndexRange anchors = anchor_range(panel, range, window);
    if (anchors.empty()) {
        throw MisalignedPredictions("no anchors with full history and targets in range");
    }

    PredictionTable table;
    table.predicted.assets = panel.assets;
    table.realized.assets = panel.assets;
    table.predicted.values = Matrix(anchors.size(), panel.asset_count());
    table.realized.values = Matrix(anchors.size(), panel.asset_count());
    for (std::size_t t = anchors.begin; t < anchors.end; ++t) {
        table.predicted.months.push_back(panel.months[t]);
        table.realized.months.push_back(panel.months[t]);
    }

    SequenceSample sample;
    sample.steps = window;
    sample.dim = MonthlyFeaturePanel::kAttributes;
    for (std::size_t a = 0; a < panel.asset_count(); ++a) {
        for (std::size_t t = anchors.begin; t < anchors.end; ++t) {
            sample.inputs.clear();
            for (std::size_t s = t + 1 - window; s <= t; ++s) {
                const auto& f = panel.features[a][s];
                sample.inputs.insert(sample.inputs.end(), f.begin(), f.end());
            }
            const double predicted = predict(model, sample);
            const double realized = panel.targets[a][t];
            table.predicted.values(t - anchors.begin, a) = predicted;
            table.realized.values(t - anchors.begin, a) = realized;
            table.records.push_back(
                {panel.assets[a], panel.months[t], predicted, realized});
        }
    }
    return table;
}

std::vector<SequenceSample> extract_sequences(std::span<const WindowedSample> windows) {
    std::vector<SequenceSample> out;
    out.reserve(windows.size());
    for (const WindowedSample& w : windows) out.push_back(w.sample);
    return out;
}

}  // namespace tbp
