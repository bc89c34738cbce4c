#include "tbp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

double hit_ratio(std::span<const PredictionRecord> records) {
    if (records.empty()) throw EmptyRecords("hit_ratio over zero records");
    long hits = 0;
    for (const PredictionRecord& r : records) {
        if (r.predicted * r.realized > 0.0) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

HitSummary hit_ratio_summary(std::span<const double> per_asset_ratios) {
    HitSummary s;
    if (per_asset_ratios.empty()) return s;
    double sum = 0.0;
    for (double r : per_asset_ratios) sum += r;
    s.mean = sum / static_cast<double>(per_asset_ratios.size());
    double ss = 0.0;
    for (double r : per_asset_ratios) ss += (r - s.mean) * (r - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(per_asset_ratios.size()));
    return s;
}

std::string format_hit_summary(const HitSummary& summary) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f, %.3f", summary.mean, summary.stddev);
    return buf;
}

std::vector<ThresholdRow> threshold_accuracy(std::span<const PredictionRecord> records,
                                             std::span<const double> thetas) {
    if (!std::is_sorted(thetas.begin(), thetas.end())) {
        throw GridMismatch("threshold grid must be sorted ascending");
    }
    std::vector<ThresholdRow> rows;
    rows.reserve(thetas.size());
    for (double theta : thetas) {
        ThresholdRow row;
        row.theta = theta;
        for (const PredictionRecord& r : records) {
            if (r.predicted >= theta) {
                ++row.n_total;
                if (r.realized > 0.0) ++row.n_correct;
            }
        }
        if (row.n_total > 0) {
            row.accuracy = static_cast<double>(row.n_correct) / static_cast<double>(row.n_total);
        }
        rows.push_back(row);
    }
    return rows;
}

void write_hit_ratios_csv(std::ostream& out, std::span<const std::string> assets,
                          std::span<const double> ratios, const HitSummary& summary) {
    out << "asset,hit_ratio\n";
    for (std::size_t i = 0; i < assets.size(); ++i) {
        out << assets[i] << ',' << format_double(ratios[i]) << '\n';
    }
    out << "mean," << format_double(summary.mean) << '\n';
    out << "sd," << format_double(summary.stddev) << '\n';
}

void write_threshold_table_csv(std::ostream& out, std::span<const ThresholdRow> rows) {
    out << "theta,n_correct,n_total,accuracy\n";
    for (const ThresholdRow& r : rows) {
        out << format_double(r.theta) << ',' << r.n_correct << ',' << r.n_total << ',';
        if (r.accuracy) out << format_double(*r.accuracy);
        out << '\n';
    }
}

}  // namespace tbp
