#pragma once

// TBP frontiers: realized (risk, return) per threshold over a trailing
// window, cubic least-squares fit, inverse threshold lookup, and estimation
// risk between decision-time and realized frontiers.

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "tbp/calendar.hpp"
#include "tbp/portfolio.hpp"

namespace tbp {

struct FrontierPoint {
    double theta = 0.0;
    double risk = 0.0;  // population SD of monthly returns in the window
    double ret = 0.0;   // mean monthly return in the window
    YearMonth window_start;
    YearMonth window_end;
};

// ret = c0 + c1 x + c2 x^2 + c3 x^3 with x = risk, reported in raw x.
// Solved on centered/scaled x via 4x4 normal equations with partial
// pivoting.
struct CubicFit {
    std::array<double, 4> coeff{};
    double domain_lo = 0.0;
    double domain_hi = 0.0;
    double residual_rms = 0.0;

    double operator()(double x) const {
        return coeff[0] + x * (coeff[1] + x * (coeff[2] + x * coeff[3]));
    }
};

struct FrontierModel {
    std::vector<FrontierPoint> points;  // sorted by theta
    CubicFit fit;
};

enum class TargetAxis { Risk, Return };

struct LookupResult {
    double theta_hat = 0.0;
    double risk = 0.0;  // achieved pair read off the cubic fit
    double ret = 0.0;
};

// One point per theta from the trailing `window` months of its backtest.
// Throws WindowTooShort (< 2 months or backtest shorter than window) and
// GridMismatch (theta/backtest count disagree).
std::vector<FrontierPoint> build_frontier(std::span<const double> thetas,
                                          std::span<const BacktestResult> backtests,
                                          std::size_t window);

// Least squares; needs >= 4 points with >= 4 distinct risks (RankDeficient).
CubicFit fit_cubic(std::span<const FrontierPoint> points);

// Grid lookup with linear interpolation between the two adjacent grid points
// bracketing the target on the chosen axis. Exactly one bracket -> unique
// theta_hat; none -> TargetOutOfRange (carries the nearest point); several
// (axis locally non-monotone there) -> NonBracketable with all candidate
// thetas.
LookupResult lookup_theta(const FrontierModel& model, TargetAxis axis, double target);

// Mean absolute gap per axis between matched-theta frontiers.
std::pair<double, double> estimation_risk(std::span<const FrontierPoint> expected,
                                          std::span<const FrontierPoint> realized);

// Multi-period aggregation: averages over every (period, grid point) pair.
std::pair<double, double> estimation_risk(
    std::span<const std::pair<std::vector<FrontierPoint>, std::vector<FrontierPoint>>> periods);

// ---------------------------------------------------------------------------
// Management step: backtest the grid, draw the frontier, fit, look up the
// target, and select next month's TBP from the newest predictions.
// ---------------------------------------------------------------------------

struct Recommendation {
    double theta_hat = 0.0;
    double expected_risk = 0.0;
    double expected_return = 0.0;
    YearMonth decision_month;
    std::vector<Position> members;   // next month's TBP at theta_hat
    double member_weight = 0.0;      // |w_i| = 1/P (0 when empty)
    FrontierModel frontier;
};

FrontierModel frontier_from_predictions(const ReturnPanel& predictions,
                                        const ReturnPanel& realized,
                                        std::span<const double> thetas, std::size_t window,
                                        TbpMode mode);

Recommendation manage_step(const ReturnPanel& predictions, const ReturnPanel& realized,
                           std::span<const double> thetas, std::size_t window, TargetAxis axis,
                           double target, TbpMode mode);

void write_frontier_csv(std::ostream& out, std::span<const FrontierPoint> points);
void write_fit_csv(std::ostream& out, const CubicFit& fit);

// "lo:hi:step" -> ascending grid, endpoints inclusive within 1e-12 slack.
std::vector<double> parse_theta_grid(const std::string& spec);

}  // namespace tbp
