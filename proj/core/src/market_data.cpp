#include "tbp/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

const std::array<const char*, MonthlyFeaturePanel::kAttributes> kAttributeNames = {
    "open", "high", "low", "close", "volume"};

const char* to_string(Aggregation a) {
    switch (a) {
        case Aggregation::Last: return "last";
        case Aggregation::Mean: return "mean";
        case Aggregation::Max: return "max";
        case Aggregation::Min: return "min";
    }
    return "?";
}

Aggregation aggregation_from_string(const std::string& name) {
    if (name == "last") return Aggregation::Last;
    if (name == "mean") return Aggregation::Mean;
    if (name == "max") return Aggregation::Max;
    if (name == "min") return Aggregation::Min;
    throw ConfigError("unknown aggregation: '" + name + "' (expected last|mean|max|min)");
}

// ---------------------------------------------------------------------------
// parse_daily_csv
// ---------------------------------------------------------------------------

namespace {

double parse_row_double(const std::string& token, std::size_t line) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw UnparsableRow(line, "bad number '" + token + "'");
    }
    return value;
}

}  // namespace

std::vector<DailyBar> parse_daily_csv_text(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw Error("empty file: " + name);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_csv_line(line);
    const std::array<const char*, 7> required = {"Date",      "Open", "High", "Low",
                                                 "Close",     "Adj Close", "Volume"};
    std::array<std::size_t, 7> col{};
    for (std::size_t i = 0; i < required.size(); ++i) {
        auto it = std::find(header.begin(), header.end(), required[i]);
        if (it == header.end()) throw MissingColumn(required[i]);
        col[i] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<DailyBar> bars;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw UnparsableRow(line_no, "expected " + std::to_string(header.size()) +
                                             " fields, got " + std::to_string(fields.size()));
        }
        DailyBar bar;
        try {
            bar.date = Date::parse(fields[col[0]]);
        } catch (const Error& e) {
            throw UnparsableRow(line_no, e.what());
        }
        bar.open = parse_row_double(fields[col[1]], line_no);
        bar.high = parse_row_double(fields[col[2]], line_no);
        bar.low = parse_row_double(fields[col[3]], line_no);
        parse_row_double(fields[col[4]], line_no);  // raw Close: validated, ignored
        bar.adj_close = parse_row_double(fields[col[5]], line_no);
        bar.volume = parse_row_double(fields[col[6]], line_no);

        if (bar.open <= 0.0 || bar.high <= 0.0 || bar.low <= 0.0 || bar.adj_close <= 0.0) {
            throw NonPositivePrice(line_no);
        }
        if (bar.volume < 0.0) {
            throw UnparsableRow(line_no, "negative volume");
        }
        bars.push_back(bar);
    }

    std::stable_sort(bars.begin(), bars.end(),
                     [](const DailyBar& a, const DailyBar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < bars.size(); ++i) {
        if (bars[i].date == bars[i - 1].date) throw DuplicateDate(bars[i].date.to_string());
    }
    return bars;
}

std::vector<DailyBar> parse_daily_csv(const std::filesystem::path& path) {
    return parse_daily_csv_text(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// aggregate_monthly
// ---------------------------------------------------------------------------

std::vector<MonthlyBar> aggregate_monthly(const std::vector<DailyBar>& bars,
                                          Aggregation method) {
    std::vector<MonthlyBar> monthly;
    std::size_t i = 0;
    while (i < bars.size()) {
        const YearMonth month = YearMonth::of(bars[i].date);
        std::size_t j = i;
        while (j < bars.size() && YearMonth::of(bars[j].date) == month) ++j;

        MonthlyBar out;
        out.month = month;
        out.aggregation = method;
        auto apply = [&](auto attribute) {
            switch (method) {
                case Aggregation::Last:
                    return attribute(bars[j - 1]);
                case Aggregation::Mean: {
                    double sum = 0.0;
                    for (std::size_t k = i; k < j; ++k) sum += attribute(bars[k]);
                    return sum / static_cast<double>(j - i);
                }
                case Aggregation::Max: {
                    double best = attribute(bars[i]);
                    for (std::size_t k = i + 1; k < j; ++k)
                        best = std::max(best, attribute(bars[k]));
                    return best;
                }
                case Aggregation::Min: {
                    double best = attribute(bars[i]);
                    for (std::size_t k = i + 1; k < j; ++k)
                        best = std::min(best, attribute(bars[k]));
                    return best;
                }
            }
            return 0.0;
        };
        out.open = apply([](const DailyBar& b) { return b.open; });
        out.high = apply([](const DailyBar& b) { return b.high; });
        out.low = apply([](const DailyBar& b) { return b.low; });
        out.close = apply([](const DailyBar& b) { return b.adj_close; });
        out.volume = apply([](const DailyBar& b) { return b.volume; });
        monthly.push_back(out);
        i = j;
    }
    return monthly;
}

// ---------------------------------------------------------------------------
// build_panel
// ---------------------------------------------------------------------------

namespace {

double percent_change(double prev, double cur) {
    return (cur - prev) / prev;
}

}  // namespace

MonthlyFeaturePanel build_panel(const std::vector<std::string>& assets,
                                const std::vector<std::vector<MonthlyBar>>& monthly) {
    if (assets.size() != monthly.size()) {
        throw Error("build_panel: asset/series count mismatch");
    }
    MonthlyFeaturePanel panel;
    panel.assets = assets;
    if (assets.empty()) return panel;

    const std::vector<MonthlyBar>& reference = monthly[0];
    for (std::size_t a = 1; a < monthly.size(); ++a) {
        if (monthly[a].size() != reference.size()) throw MisalignedCalendars(assets[a]);
        for (std::size_t t = 0; t < reference.size(); ++t) {
            if (monthly[a][t].month != reference[t].month) throw MisalignedCalendars(assets[a]);
        }
    }

    if (reference.size() < 2) {
        // Differencing consumes the first month; nothing to emit.
        panel.features.resize(assets.size());
        panel.targets.resize(assets.size());
        return panel;
    }

    for (std::size_t t = 1; t < reference.size(); ++t) panel.months.push_back(reference[t].month);

    panel.features.resize(assets.size());
    panel.targets.resize(assets.size());
    for (std::size_t a = 0; a < assets.size(); ++a) {
        const auto& series = monthly[a];
        auto& feats = panel.features[a];
        feats.reserve(series.size() - 1);
        for (std::size_t t = 1; t < series.size(); ++t) {
            feats.push_back({percent_change(series[t - 1].open, series[t].open),
                             percent_change(series[t - 1].high, series[t].high),
                             percent_change(series[t - 1].low, series[t].low),
                             percent_change(series[t - 1].close, series[t].close),
                             percent_change(series[t - 1].volume, series[t].volume)});
        }
        auto& targets = panel.targets[a];
        targets.reserve(feats.size() - 1);
        for (std::size_t t = 0; t + 1 < feats.size(); ++t) {
            targets.push_back(feats[t + 1][MonthlyFeaturePanel::kClose]);
        }
    }
    return panel;
}

// ---------------------------------------------------------------------------
// split_panel
// ---------------------------------------------------------------------------

DatasetSplit split_panel(const MonthlyFeaturePanel& panel, double train_frac,
                         double val_frac_of_train, std::size_t window) {
    const std::size_t months = panel.month_count();
    if (months < window + 3) {
        throw TooFewMonths("panel has " + std::to_string(months) + " months, need at least " +
                           std::to_string(window + 3));
    }
    const auto total = static_cast<double>(months);
    const auto test_size = static_cast<std::size_t>(std::floor((1.0 - train_frac) * total));
    const std::size_t pre_test = months - test_size;
    const auto val_size =
        static_cast<std::size_t>(std::floor(val_frac_of_train * static_cast<double>(pre_test)));
    const std::size_t train_size = pre_test - val_size;

    DatasetSplit split;
    split.train = {0, train_size};
    split.validation = {train_size, train_size + val_size};
    split.test = {train_size + val_size, months};
    return split;
}

// ---------------------------------------------------------------------------
// make_windows
// ---------------------------------------------------------------------------

std::vector<WindowedSample> make_windows(const MonthlyFeaturePanel& panel, IndexRange range,
                                         std::size_t window) {
    std::vector<WindowedSample> samples;
    if (panel.month_count() == 0 || window == 0) return samples;

    const std::size_t first_anchor = std::max(range.begin, window - 1);
    // Anchors need a defined target, i.e. a following month.
    const std::size_t last_anchor_end = std::min(range.end, panel.month_count() - 1);

    for (std::size_t a = 0; a < panel.asset_count(); ++a) {
        for (std::size_t t = first_anchor; t < last_anchor_end; ++t) {
            WindowedSample ws;
            ws.asset = panel.assets[a];
            ws.asset_index = a;
            ws.anchor_month = panel.months[t];
            ws.sample.steps = window;
            ws.sample.dim = MonthlyFeaturePanel::kAttributes;
            ws.sample.inputs.reserve(window * MonthlyFeaturePanel::kAttributes);
            for (std::size_t s = t + 1 - window; s <= t; ++s) {
                const auto& f = panel.features[a][s];
                ws.sample.inputs.insert(ws.sample.inputs.end(), f.begin(), f.end());
            }
            ws.sample.target = panel.targets[a][t];
            samples.push_back(std::move(ws));
        }
    }
    return samples;
}

// ---------------------------------------------------------------------------
// summarize_split
// ---------------------------------------------------------------------------

std::vector<AssetFeatureStats> summarize_split(const MonthlyFeaturePanel& panel,
                                               IndexRange range) {
    std::vector<AssetFeatureStats> all;
    all.reserve(panel.asset_count());
    const std::size_t end = std::min<std::size_t>(range.end, panel.month_count());
    for (std::size_t a = 0; a < panel.asset_count(); ++a) {
        AssetFeatureStats stats;
        stats.asset = panel.assets[a];
        for (std::size_t k = 0; k < MonthlyFeaturePanel::kAttributes; ++k) {
            double sum = 0.0;
            double lo = std::numeric_limits<double>::infinity();
            double hi = -std::numeric_limits<double>::infinity();
            std::size_t n = 0;
            for (std::size_t t = range.begin; t < end; ++t) {
                const double v = panel.features[a][t][k];
                sum += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
                ++n;
            }
            AttributeStats& s = stats.per_attribute[k];
            if (n == 0) continue;
            s.mean = sum / static_cast<double>(n);
            double ss = 0.0;
            for (std::size_t t = range.begin; t < end; ++t) {
                const double d = panel.features[a][t][k] - s.mean;
                ss += d * d;
            }
            s.stddev = std::sqrt(ss / static_cast<double>(n));
            s.min = lo;
            s.max = hi;
        }
        all.push_back(std::move(stats));
    }
    return all;
}

// ---------------------------------------------------------------------------
// Panel CSV
// ---------------------------------------------------------------------------

void write_panel_csv(std::ostream& out, const MonthlyFeaturePanel& panel) {
    out << "asset,month,f_open,f_high,f_low,f_close,f_volume,target\n";
    for (std::size_t a = 0; a < panel.asset_count(); ++a) {
        for (std::size_t t = 0; t < panel.month_count(); ++t) {
            out << panel.assets[a] << ',' << panel.months[t].to_string();
            for (double v : panel.features[a][t]) out << ',' << format_double(v);
            out << ',';
            if (t + 1 < panel.month_count()) out << format_double(panel.targets[a][t]);
            out << '\n';
        }
    }
}

MonthlyFeaturePanel read_panel_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CorruptFile("panel csv: empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "asset,month,f_open,f_high,f_low,f_close,f_volume,target") {
        throw CorruptFile("panel csv: unexpected header '" + line + "'");
    }

    MonthlyFeaturePanel panel;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 8) {
            throw CorruptFile("panel csv line " + std::to_string(line_no) + ": bad field count");
        }
        const std::string& asset = f[0];
        if (panel.assets.empty() || panel.assets.back() != asset) {
            // Rows are grouped by asset; a revisit means the file is shuffled.
            if (std::find(panel.assets.begin(), panel.assets.end(), asset) != panel.assets.end()) {
                throw CorruptFile("panel csv: asset rows not contiguous: " + asset);
            }
            panel.assets.push_back(asset);
            panel.features.emplace_back();
            panel.targets.emplace_back();
        }
        const std::size_t a = panel.assets.size() - 1;
        const YearMonth month = YearMonth::parse(f[1]);
        if (a == 0) {
            panel.months.push_back(month);
        } else {
            const std::size_t t = panel.features[a].size();
            if (t >= panel.months.size() || panel.months[t] != month) {
                throw MisalignedCalendars(asset);
            }
        }
        std::array<double, MonthlyFeaturePanel::kAttributes> feats{};
        for (std::size_t k = 0; k < feats.size(); ++k) feats[k] = parse_double(f[2 + k]);
        panel.features[a].push_back(feats);
        if (!f[7].empty()) panel.targets[a].push_back(parse_double(f[7]));
    }

    for (std::size_t a = 0; a < panel.asset_count(); ++a) {
        if (panel.features[a].size() != panel.month_count()) {
            throw MisalignedCalendars(panel.assets[a]);
        }
        if (panel.targets[a].size() != panel.target_count()) {
            throw CorruptFile("panel csv: target column inconsistent for " + panel.assets[a]);
        }
        // The stored target column must be the shifted close feature.
        for (std::size_t t = 0; t < panel.targets[a].size(); ++t) {
            if (panel.targets[a][t] != panel.features[a][t + 1][MonthlyFeaturePanel::kClose]) {
                throw CorruptFile("panel csv: target mismatch for " + panel.assets[a] +
                                  " at month " + panel.months[t].to_string());
            }
        }
    }
    return panel;
}

void write_stats_csv(std::ostream& out, const std::vector<AssetFeatureStats>& stats) {
    out << "asset,attribute,mean,std,min,max\n";
    for (const auto& s : stats) {
        for (std::size_t k = 0; k < MonthlyFeaturePanel::kAttributes; ++k) {
            const AttributeStats& a = s.per_attribute[k];
            out << s.asset << ',' << kAttributeNames[k] << ',' << format_double(a.mean) << ','
                << format_double(a.stddev) << ',' << format_double(a.min) << ','
                << format_double(a.max) << '\n';
        }
    }
}

}  // namespace tbp
