#pragma once

// Directional-accuracy metrics over (prediction, realization) pairs: per-asset
// hit ratios, their cross-asset summary, and threshold-conditional accuracy.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbp/calendar.hpp"

namespace tbp {

struct PredictionRecord {
    std::string asset;
    YearMonth month;       // anchor month: prediction made at its last business day
    double predicted = 0;  // one-month-ahead return forecast
    double realized = 0;   // the return that then materialized
};

// Fraction of records whose prediction and realization share a strict sign
// (product > 0; an exact zero never scores). Throws EmptyRecords.
double hit_ratio(std::span<const PredictionRecord> records);

struct HitSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

HitSummary hit_ratio_summary(std::span<const double> per_asset_ratios);

// Paper-table style "0.604, 0.042" rendering (three decimals).
std::string format_hit_summary(const HitSummary& summary);

struct ThresholdRow {
    double theta = 0.0;
    long n_total = 0;    // records with predicted >= theta
    long n_correct = 0;  // of those, realized > 0
    std::optional<double> accuracy;  // empty when n_total == 0
};

// One row per theta; the grid must be sorted ascending.
std::vector<ThresholdRow> threshold_accuracy(std::span<const PredictionRecord> records,
                                             std::span<const double> thetas);

void write_hit_ratios_csv(std::ostream& out, std::span<const std::string> assets,
                          std::span<const double> ratios, const HitSummary& summary);
void write_threshold_table_csv(std::ostream& out, std::span<const ThresholdRow> rows);

}  // namespace tbp
