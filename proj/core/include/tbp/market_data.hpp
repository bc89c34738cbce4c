#pragma once

// Daily OHLCV ingestion, monthly aggregation, percent-change features, and
// chronological train/validation/test bookkeeping.

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tbp/calendar.hpp"
#include "tbp/sample.hpp"

namespace tbp {

// One trading day. `adj_close` is the dividend/split-adjusted close and is
// the only close the engine trades on; it may legitimately sit outside the
// raw [low, high] range.
struct DailyBar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double adj_close = 0.0;
    double volume = 0.0;  // >= 0; zero is a legal halted day
};

enum class Aggregation { Last, Mean, Max, Min };

const char* to_string(Aggregation a);
Aggregation aggregation_from_string(const std::string& name);

struct MonthlyBar {
    YearMonth month;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;  // aggregated adj_close
    double volume = 0.0;
    Aggregation aggregation = Aggregation::Last;
};

// Per-asset monthly percent-change features plus next-month close targets.
//
// features[a][t][k] = (x_t - x_{t-1}) / x_{t-1} for attribute k, where t
// indexes `months` (the first raw month is consumed by the differencing and
// dropped). targets[a][t] = features[a][t+1][kClose]; defined for every
// month except the last, so targets[a].size() == months.size() - 1.
struct MonthlyFeaturePanel {
    static constexpr std::size_t kAttributes = 5;
    static constexpr std::size_t kClose = 3;  // open, high, low, close, volume

    std::vector<std::string> assets;
    std::vector<YearMonth> months;
    std::vector<std::vector<std::array<double, kAttributes>>> features;  // [asset][month]
    std::vector<std::vector<double>> targets;                            // [asset][month]

    std::size_t asset_count() const { return assets.size(); }
    std::size_t month_count() const { return months.size(); }
    std::size_t target_count() const { return months.empty() ? 0 : months.size() - 1; }
};

// Chronological, contiguous, disjoint month-index ranges with
// train < validation < test.
struct DatasetSplit {
    IndexRange train;
    IndexRange validation;
    IndexRange test;
};

// A 36-step (by default) input window anchored at `anchor_month` with the
// next month's return as target. Inputs may reach back before a split
// boundary; the anchor decides split membership.
struct WindowedSample {
    std::string asset;
    std::size_t asset_index = 0;
    YearMonth anchor_month;
    SequenceSample sample;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Yahoo-Finance export schema: `Date,Open,High,Low,Close,Adj Close,Volume`.
// `Close` is read and discarded; `Adj Close` feeds the engine. Rows are
// sorted by date on return.
std::vector<DailyBar> parse_daily_csv(const std::filesystem::path& path);
std::vector<DailyBar> parse_daily_csv_text(const std::string& text, const std::string& name);

std::vector<MonthlyBar> aggregate_monthly(const std::vector<DailyBar>& bars, Aggregation method);

// All assets must cover the identical month range; misalignment is rejected
// rather than imputed.
MonthlyFeaturePanel build_panel(const std::vector<std::string>& assets,
                                const std::vector<std::vector<MonthlyBar>>& monthly);

// test = floor((1-train_frac) * months); validation = floor(val_frac_of_train
// * remaining); the remainder goes to train.
DatasetSplit split_panel(const MonthlyFeaturePanel& panel, double train_frac = 0.7,
                         double val_frac_of_train = 0.3, std::size_t window = 36);

// One sample per (asset, anchor) where the anchor lies in `range`, has
// `window` months of history, and has a defined target.
std::vector<WindowedSample> make_windows(const MonthlyFeaturePanel& panel, IndexRange range,
                                         std::size_t window = 36);

struct AttributeStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
    double min = 0.0;
    double max = 0.0;
};

struct AssetFeatureStats {
    std::string asset;
    std::array<AttributeStats, MonthlyFeaturePanel::kAttributes> per_attribute;
};

std::vector<AssetFeatureStats> summarize_split(const MonthlyFeaturePanel& panel,
                                               IndexRange range);

// ---------------------------------------------------------------------------
// Panel serialization: `asset,month,f_open,f_high,f_low,f_close,f_volume,target`
// (target empty on each asset's final month).
// ---------------------------------------------------------------------------

void write_panel_csv(std::ostream& out, const MonthlyFeaturePanel& panel);
MonthlyFeaturePanel read_panel_csv(std::istream& in);

void write_stats_csv(std::ostream& out, const std::vector<AssetFeatureStats>& stats);

extern const std::array<const char*, MonthlyFeaturePanel::kAttributes> kAttributeNames;

}  // namespace tbp
