#pragma once

// Threshold-based portfolio selection, equal-weight monthly rebalancing,
// cumulative-wealth accounting, and summary statistics. Frictionless: no
// costs, slippage, or borrow fees; an empty selection parks in cash at zero
// return for the month.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tbp/calendar.hpp"
#include "tbp/matrix.hpp"

namespace tbp {

enum class TbpMode { LongOnly, ShortOnly, LongShort };

const char* to_string(TbpMode mode);
TbpMode tbp_mode_from_string(const std::string& name);

struct TbpConfig {
    TbpMode mode = TbpMode::LongOnly;
    double theta_plus = 0.0;   // long entry: prediction >= theta_plus
    double theta_minus = 0.0;  // short entry: prediction < -theta_minus
};

struct Position {
    std::size_t asset = 0;
    int sign = +1;  // +1 long, -1 short
};

std::vector<Position> select_tbp(std::span<const double> predictions, const TbpConfig& config);

// |w_i| = 1/P with the position's sign; empty selection -> 100% cash.
struct PortfolioSnapshot {
    YearMonth month;  // decision month: weights chosen at its last business day
    std::vector<std::pair<std::size_t, double>> weights;  // (asset, signed weight)
    double cash_weight = 1.0;
};

PortfolioSnapshot assign_weights(std::span<const Position> members, YearMonth month);

// Sum of w_i * realized_i; cash earns zero. NaN or out-of-range asset ->
// MissingReturn.
double portfolio_return(const PortfolioSnapshot& snapshot, std::span<const double> realized,
                        std::span<const std::string> asset_names);

// Month-by-asset return table shared by predictions and realizations.
struct ReturnPanel {
    std::vector<std::string> assets;
    std::vector<YearMonth> months;
    Matrix values;  // months x assets

    std::span<const double> row(std::size_t t) const {
        return {values.data.data() + t * values.cols, values.cols};
    }
};

struct PerformanceStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
    std::optional<double> mean_over_sd;  // empty when stddev == 0
    double average_members = 0.0;
};

struct BacktestResult {
    std::vector<PortfolioSnapshot> snapshots;
    std::vector<double> returns;  // realized portfolio return per month
    std::vector<double> wealth;   // cumulative, W_0 = 1
    PerformanceStats stats;
};

// For each month t: select from predictions[t], hold one month, book the
// realized equal-weight return. Predictions and realizations must share the
// same month/asset axes (MisalignedPredictions).
BacktestResult backtest(const ReturnPanel& predictions, const ReturnPanel& realized,
                        const TbpConfig& config);

// The reference portfolio: every asset long at 1/n each month.
BacktestResult backtest_ewp(const ReturnPanel& realized);

// Buy-and-hold path of one asset over the panel months.
BacktestResult backtest_single_asset(const ReturnPanel& realized, std::size_t asset);

// R_t = prod (1 + r_i); empty -> 1.0. Throws ReturnBelowMinusOne for r < -1.
double cumulative_return(std::span<const double> returns);
std::vector<double> wealth_path(std::span<const double> returns);

PerformanceStats performance_stats(std::span<const double> returns,
                                   std::span<const PortfolioSnapshot> snapshots);

void write_backtest_csv(std::ostream& out, const BacktestResult& result,
                        std::span<const std::string> asset_names);
void write_stats_row_csv(std::ostream& out, const std::string& label,
                         const PerformanceStats& stats);

}  // namespace tbp
