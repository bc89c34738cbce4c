#include "tbp/portfolio.hpp"

#include <cmath>
#include <functional>
#include <ostream>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

const char* to_string(TbpMode mode) {
    switch (mode) {
        case TbpMode::LongOnly: return "long";
        case TbpMode::ShortOnly: return "short";
        case TbpMode::LongShort: return "longshort";
    }
    return "?";
}

TbpMode tbp_mode_from_string(const std::string& name) {
    if (name == "long") return TbpMode::LongOnly;
    if (name == "short") return TbpMode::ShortOnly;
    if (name == "longshort") return TbpMode::LongShort;
    throw ConfigError("unknown TBP mode: '" + name + "' (expected long|short|longshort)");
}

std::vector<Position> select_tbp(std::span<const double> predictions, const TbpConfig& config) {
    std::vector<Position> members;
    const bool take_long = config.mode != TbpMode::ShortOnly;
    const bool take_short = config.mode != TbpMode::LongOnly;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double r_hat = predictions[i];
        if (take_long && r_hat >= config.theta_plus) {
            members.push_back({i, +1});
        } else if (take_short && r_hat < -config.theta_minus) {
            members.push_back({i, -1});
        }
    }
    return members;
}

PortfolioSnapshot assign_weights(std::span<const Position> members, YearMonth month) {
    PortfolioSnapshot snap;
    snap.month = month;
    if (members.empty()) {
        snap.cash_weight = 1.0;
        return snap;
    }
    const double w = 1.0 / static_cast<double>(members.size());
    snap.weights.reserve(members.size());
    for (const Position& p : members) {
        snap.weights.emplace_back(p.asset, p.sign >= 0 ? w : -w);
    }
    snap.cash_weight = 0.0;
    return snap;
}

double portfolio_return(const PortfolioSnapshot& snapshot, std::span<const double> realized,
                        std::span<const std::string> asset_names) {
    double total = 0.0;
    for (const auto& [asset, weight] : snapshot.weights) {
        if (asset >= realized.size() || std::isnan(realized[asset])) {
            throw MissingReturn(asset < asset_names.size() ? asset_names[asset]
                                                           : std::to_string(asset));
        }
        total += weight * realized[asset];
    }
    return total;  // cash contributes zero
}

double cumulative_return(std::span<const double> returns) {
    double r_cum = 1.0;
    for (double r : returns) {
        if (r < -1.0) {
            throw ReturnBelowMinusOne("monthly return " + format_double(r) + " below -1");
        }
        r_cum *= 1.0 + r;
    }
    return r_cum;
}

std::vector<double> wealth_path(std::span<const double> returns) {
    std::vector<double> path;
    path.reserve(returns.size());
    double w = 1.0;
    for (double r : returns) {
        if (r < -1.0) {
            throw ReturnBelowMinusOne("monthly return " + format_double(r) + " below -1");
        }
        w *= 1.0 + r;
        path.push_back(w);
    }
    return path;
}

PerformanceStats performance_stats(std::span<const double> returns,
                                   std::span<const PortfolioSnapshot> snapshots) {
    PerformanceStats stats;
    if (returns.empty()) return stats;
    double sum = 0.0;
    for (double r : returns) sum += r;
    stats.mean = sum / static_cast<double>(returns.size());
    double ss = 0.0;
    for (double r : returns) ss += (r - stats.mean) * (r - stats.mean);
    stats.stddev = std::sqrt(ss / static_cast<double>(returns.size()));
    if (stats.stddev > 0.0) stats.mean_over_sd = stats.mean / stats.stddev;

    double members = 0.0;
    for (const PortfolioSnapshot& s : snapshots) {
        members += static_cast<double>(s.weights.size());
    }
    if (!snapshots.empty()) {
        stats.average_members = members / static_cast<double>(snapshots.size());
    }
    return stats;
}

namespace {

void check_aligned(const ReturnPanel& predictions, const ReturnPanel& realized) {
    if (predictions.assets != realized.assets || predictions.months != realized.months) {
        throw MisalignedPredictions("prediction and realization tables disagree on axes");
    }
    if (predictions.values.rows != predictions.months.size() ||
        predictions.values.cols != predictions.assets.size() ||
        realized.values.rows != realized.months.size() ||
        realized.values.cols != realized.assets.size()) {
        throw MisalignedPredictions("return table shape inconsistent");
    }
}

BacktestResult run_backtest(const ReturnPanel& realized,
                            const std::function<std::vector<Position>(std::size_t)>& select) {
    BacktestResult result;
    const std::size_t months = realized.months.size();
    result.snapshots.reserve(months);
    result.returns.reserve(months);
    for (std::size_t t = 0; t < months; ++t) {
        PortfolioSnapshot snap = assign_weights(select(t), realized.months[t]);
        result.returns.push_back(portfolio_return(snap, realized.row(t), realized.assets));
        result.snapshots.push_back(std::move(snap));
    }
    result.wealth = wealth_path(result.returns);
    result.stats = performance_stats(result.returns, result.snapshots);
    return result;
}

}  // namespace

BacktestResult backtest(const ReturnPanel& predictions, const ReturnPanel& realized,
                        const TbpConfig& config) {
    check_aligned(predictions, realized);
    return run_backtest(realized, [&](std::size_t t) {
        return select_tbp(predictions.row(t), config);
    });
}

BacktestResult backtest_ewp(const ReturnPanel& realized) {
    return run_backtest(realized, [&](std::size_t) {
        std::vector<Position> all;
        all.reserve(realized.assets.size());
        for (std::size_t i = 0; i < realized.assets.size(); ++i) all.push_back({i, +1});
        return all;
    });
}

BacktestResult backtest_single_asset(const ReturnPanel& realized, std::size_t asset) {
    return run_backtest(realized, [asset](std::size_t) {
        return std::vector<Position>{{asset, +1}};
    });
}

void write_backtest_csv(std::ostream& out, const BacktestResult& result,
                        std::span<const std::string> asset_names) {
    out << "month,members,cash_weight,return,wealth\n";
    for (std::size_t t = 0; t < result.returns.size(); ++t) {
        const PortfolioSnapshot& snap = result.snapshots[t];
        out << snap.month.to_string() << ',';
        for (std::size_t i = 0; i < snap.weights.size(); ++i) {
            if (i > 0) out << ';';
            const auto& [asset, weight] = snap.weights[i];
            out << asset_names[asset] << (weight < 0 ? "-" : "+");
        }
        out << ',' << format_double(snap.cash_weight) << ',' << format_double(result.returns[t])
            << ',' << format_double(result.wealth[t]) << '\n';
    }
}

void write_stats_row_csv(std::ostream& out, const std::string& label,
                         const PerformanceStats& stats) {
    out << label << ',' << format_double(stats.mean) << ',' << format_double(stats.stddev) << ',';
    if (stats.mean_over_sd) out << format_double(*stats.mean_over_sd);
    out << ',' << format_double(stats.average_members) << '\n';
}

}  // namespace tbp
