#include "tbp/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

// ---------------------------------------------------------------------------
// build_frontier
// ---------------------------------------------------------------------------

std::vector<FrontierPoint> build_frontier(std::span<const double> thetas,
                                          std::span<const BacktestResult> backtests,
                                          std::size_t window) {
    if (thetas.size() != backtests.size()) {
        throw GridMismatch("theta grid and backtest count disagree");
    }
    if (window < 2) throw WindowTooShort("frontier window must span at least 2 months");

    std::vector<FrontierPoint> points;
    points.reserve(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        const BacktestResult& bt = backtests[i];
        if (bt.returns.size() < window) {
            throw WindowTooShort("backtest covers " + std::to_string(bt.returns.size()) +
                                 " months, window needs " + std::to_string(window));
        }
        const std::size_t start = bt.returns.size() - window;
        double sum = 0.0;
        for (std::size_t t = start; t < bt.returns.size(); ++t) sum += bt.returns[t];
        const double mean = sum / static_cast<double>(window);
        double ss = 0.0;
        for (std::size_t t = start; t < bt.returns.size(); ++t) {
            ss += (bt.returns[t] - mean) * (bt.returns[t] - mean);
        }
        FrontierPoint p;
        p.theta = thetas[i];
        p.ret = mean;
        p.risk = std::sqrt(ss / static_cast<double>(window));
        p.window_start = bt.snapshots[start].month;
        p.window_end = bt.snapshots.back().month;
        points.push_back(p);
    }
    std::sort(points.begin(), points.end(),
              [](const FrontierPoint& a, const FrontierPoint& b) { return a.theta < b.theta; });
    return points;
}

// ---------------------------------------------------------------------------
// fit_cubic
// ---------------------------------------------------------------------------

namespace {

// Solve M a = rhs (4x4) in place with partial pivoting.
std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> m, std::array<double, 4> rhs) {
    for (std::size_t col = 0; col < 4; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < 4; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
        }
        if (std::abs(m[pivot][col]) < 1e-12) {
            throw RankDeficient("normal equations singular");
        }
        std::swap(m[col], m[pivot]);
        std::swap(rhs[col], rhs[pivot]);
        for (std::size_t r = col + 1; r < 4; ++r) {
            const double factor = m[r][col] / m[col][col];
            for (std::size_t c = col; c < 4; ++c) m[r][c] -= factor * m[col][c];
            rhs[r] -= factor * rhs[col];
        }
    }
    std::array<double, 4> a{};
    for (std::size_t row = 4; row-- > 0;) {
        double acc = rhs[row];
        for (std::size_t c = row + 1; c < 4; ++c) acc -= m[row][c] * a[c];
        a[row] = acc / m[row][row];
    }
    return a;
}

}  // namespace

CubicFit fit_cubic(std::span<const FrontierPoint> points) {
    if (points.size() < 4) {
        throw RankDeficient("cubic fit needs at least 4 points, got " +
                            std::to_string(points.size()));
    }
    std::vector<double> xs;
    xs.reserve(points.size());
    for (const FrontierPoint& p : points) xs.push_back(p.risk);
    {
        std::vector<double> sorted = xs;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t distinct =
            static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
        if (distinct < 4) {
            throw RankDeficient("cubic fit needs 4 distinct risks, got " +
                                std::to_string(distinct));
        }
    }

    // Center and scale x for conditioning; coefficients are mapped back below.
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double scale = std::sqrt(var / n);

    std::array<std::array<double, 4>, 4> m{};
    std::array<double, 4> rhs{};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double u = (xs[i] - mean) / scale;
        std::array<double, 4> pow_u = {1.0, u, u * u, u * u * u};
        for (std::size_t j = 0; j < 4; ++j) {
            rhs[j] += points[i].ret * pow_u[j];
            for (std::size_t k = 0; k < 4; ++k) m[j][k] += pow_u[j] * pow_u[k];
        }
    }
    const std::array<double, 4> a = solve4(m, rhs);

    // y = sum_k a_k ((x - mean)/scale)^k  ->  raw coefficients by expanding
    // powers of the linear map q(x) = x/scale - mean/scale.
    CubicFit fit;
    std::array<double, 4> q_pow = {1.0, 0.0, 0.0, 0.0};  // q^0
    const double q0 = -mean / scale;
    const double q1 = 1.0 / scale;
    for (std::size_t k = 0; k < 4; ++k) {
        for (std::size_t j = 0; j < 4; ++j) fit.coeff[j] += a[k] * q_pow[j];
        // q_pow <- q_pow * q
        std::array<double, 4> next{};
        for (std::size_t j = 0; j < 3; ++j) {
            next[j] += q_pow[j] * q0;
            next[j + 1] += q_pow[j] * q1;
        }
        next[3] += q_pow[3] * q0;
        q_pow = next;
    }

    fit.domain_lo = *std::min_element(xs.begin(), xs.end());
    fit.domain_hi = *std::max_element(xs.begin(), xs.end());
    double ss = 0.0;
    for (const FrontierPoint& p : points) {
        const double r = p.ret - fit(p.risk);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / n);
    return fit;
}

// ---------------------------------------------------------------------------
// lookup_theta
// ---------------------------------------------------------------------------

namespace {

double axis_value(const FrontierPoint& p, TargetAxis axis) {
    return axis == TargetAxis::Risk ? p.risk : p.ret;
}

}  // namespace

LookupResult lookup_theta(const FrontierModel& model, TargetAxis axis, double target) {
    const auto& pts = model.points;
    if (pts.empty()) throw GridMismatch("frontier has no points");

    struct Candidate {
        double theta;
        double risk;
    };
    std::vector<Candidate> candidates;

    for (const FrontierPoint& p : pts) {
        if (axis_value(p, axis) == target) candidates.push_back({p.theta, p.risk});
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = axis_value(pts[i], axis);
        const double b = axis_value(pts[i + 1], axis);
        if ((target - a) * (target - b) < 0.0) {  // strictly inside the segment
            const double frac = (target - a) / (b - a);
            const double theta = pts[i].theta + frac * (pts[i + 1].theta - pts[i].theta);
            const double risk = axis == TargetAxis::Risk
                                    ? target
                                    : pts[i].risk + frac * (pts[i + 1].risk - pts[i].risk);
            candidates.push_back({theta, risk});
        }
    }

    if (candidates.empty()) {
        const FrontierPoint* nearest = &pts.front();
        double best = std::abs(axis_value(*nearest, axis) - target);
        for (const FrontierPoint& p : pts) {
            const double d = std::abs(axis_value(p, axis) - target);
            if (d < best) {
                best = d;
                nearest = &p;
            }
        }
        throw TargetOutOfRange("target " + format_double(target) +
                                   " lies outside the sampled frontier; nearest point: theta=" +
                                   format_double(nearest->theta) + " risk=" +
                                   format_double(nearest->risk) + " return=" +
                                   format_double(nearest->ret),
                               nearest->theta, nearest->risk, nearest->ret);
    }
    if (candidates.size() > 1) {
        std::vector<double> thetas;
        thetas.reserve(candidates.size());
        std::string msg = "frontier is not monotone at the target; candidate thetas:";
        for (const Candidate& c : candidates) {
            thetas.push_back(c.theta);
            msg += ' ' + format_double(c.theta);
        }
        throw NonBracketable(msg, std::move(thetas));
    }

    LookupResult out;
    out.theta_hat = candidates[0].theta;
    out.risk = candidates[0].risk;
    out.ret = model.fit(out.risk);
    return out;
}

// ---------------------------------------------------------------------------
// estimation_risk
// ---------------------------------------------------------------------------

std::pair<double, double> estimation_risk(std::span<const FrontierPoint> expected,
                                          std::span<const FrontierPoint> realized) {
    if (expected.size() != realized.size() || expected.empty()) {
        throw GridMismatch("estimation risk needs matched, nonempty frontiers");
    }
    double d_ret = 0.0;
    double d_risk = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (expected[i].theta != realized[i].theta) {
            throw GridMismatch("theta grids differ at index " + std::to_string(i));
        }
        d_ret += std::abs(realized[i].ret - expected[i].ret);
        d_risk += std::abs(realized[i].risk - expected[i].risk);
    }
    const double n = static_cast<double>(expected.size());
    return {d_ret / n, d_risk / n};
}

std::pair<double, double> estimation_risk(
    std::span<const std::pair<std::vector<FrontierPoint>, std::vector<FrontierPoint>>> periods) {
    if (periods.empty()) throw GridMismatch("estimation risk needs at least one period");
    double d_ret = 0.0;
    double d_risk = 0.0;
    std::size_t count = 0;
    for (const auto& [expected, realized] : periods) {
        if (expected.size() != realized.size() || expected.empty()) {
            throw GridMismatch("estimation risk needs matched, nonempty frontiers");
        }
        for (std::size_t i = 0; i < expected.size(); ++i) {
            if (expected[i].theta != realized[i].theta) {
                throw GridMismatch("theta grids differ at index " + std::to_string(i));
            }
            d_ret += std::abs(realized[i].ret - expected[i].ret);
            d_risk += std::abs(realized[i].risk - expected[i].risk);
            ++count;
        }
    }
    return {d_ret / static_cast<double>(count), d_risk / static_cast<double>(count)};
}

// ---------------------------------------------------------------------------
// Management step
// ---------------------------------------------------------------------------

FrontierModel frontier_from_predictions(const ReturnPanel& predictions,
                                        const ReturnPanel& realized,
                                        std::span<const double> thetas, std::size_t window,
                                        TbpMode mode) {
    std::vector<BacktestResult> backtests;
    backtests.reserve(thetas.size());
    for (double theta : thetas) {
        TbpConfig cfg;
        cfg.mode = mode;
        cfg.theta_plus = theta;
        cfg.theta_minus = theta;
        backtests.push_back(backtest(predictions, realized, cfg));
    }
    FrontierModel model;
    model.points = build_frontier(thetas, backtests, window);
    model.fit = fit_cubic(model.points);
    return model;
}

Recommendation manage_step(const ReturnPanel& predictions, const ReturnPanel& realized,
                           std::span<const double> thetas, std::size_t window, TargetAxis axis,
                           double target, TbpMode mode) {
    Recommendation rec;
    rec.frontier = frontier_from_predictions(predictions, realized, thetas, window, mode);
    const LookupResult hit = lookup_theta(rec.frontier, axis, target);
    rec.theta_hat = hit.theta_hat;
    rec.expected_risk = hit.risk;
    rec.expected_return = hit.ret;

    if (predictions.months.empty()) throw MisalignedPredictions("no prediction months");
    const std::size_t last = predictions.months.size() - 1;
    rec.decision_month = predictions.months[last];

    TbpConfig cfg;
    cfg.mode = mode;
    cfg.theta_plus = rec.theta_hat;
    cfg.theta_minus = rec.theta_hat;
    rec.members = select_tbp(predictions.row(last), cfg);
    rec.member_weight =
        rec.members.empty() ? 0.0 : 1.0 / static_cast<double>(rec.members.size());
    return rec;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

void write_frontier_csv(std::ostream& out, std::span<const FrontierPoint> points) {
    out << "theta,risk,return,window_start,window_end\n";
    for (const FrontierPoint& p : points) {
        out << format_double(p.theta) << ',' << format_double(p.risk) << ','
            << format_double(p.ret) << ',' << p.window_start.to_string() << ','
            << p.window_end.to_string() << '\n';
    }
}

void write_fit_csv(std::ostream& out, const CubicFit& fit) {
    out << "c0,c1,c2,c3,residual_rms,domain_lo,domain_hi\n";
    out << format_double(fit.coeff[0]) << ',' << format_double(fit.coeff[1]) << ','
        << format_double(fit.coeff[2]) << ',' << format_double(fit.coeff[3]) << ','
        << format_double(fit.residual_rms) << ',' << format_double(fit.domain_lo) << ','
        << format_double(fit.domain_hi) << '\n';
}

std::vector<double> parse_theta_grid(const std::string& spec) {
    const std::size_t c1 = spec.find(':');
    const std::size_t c2 = spec.find(':', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        // A single value is a one-point grid.
        return {parse_double(spec)};
    }
    const double lo = parse_double(spec.substr(0, c1));
    const double hi = parse_double(spec.substr(c1 + 1, c2 - c1 - 1));
    const double step = parse_double(spec.substr(c2 + 1));
    if (!(step > 0.0) || hi < lo) {
        throw ConfigError("bad theta grid '" + spec + "' (want lo:hi:step with step > 0)");
    }
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    grid.reserve(count);
    for (std::size_t i = 0; i < count; ++i) grid.push_back(lo + static_cast<double>(i) * step);
    return grid;
}

}  // namespace tbp
