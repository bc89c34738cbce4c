#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tbp/errors.hpp"
#include "tbp/market_data.hpp"
#include "tbp/rng.hpp"
#include "test_support.hpp"

using namespace tbp;

namespace {

std::vector<DailyBar> parse_text(const std::string& body) {
    return parse_daily_csv_text("Date,Open,High,Low,Close,Adj Close,Volume\n" + body, "test");
}

// One asset, one bar per month, closes given; other attributes tied to close.
std::vector<MonthlyBar> monthly_from_closes(const std::vector<double>& closes,
                                            YearMonth start = {2000, 1}) {
    std::vector<MonthlyBar> bars;
    YearMonth m = start;
    for (double c : closes) {
        MonthlyBar b;
        b.month = m;
        b.open = c;
        b.high = c * 1.1;
        b.low = c * 0.9;
        b.close = c;
        b.volume = 1000.0;
        bars.push_back(b);
        m = m.next();
    }
    return bars;
}

}  // namespace

TEST_CASE("parse_daily_csv: two valid rows in date order") {
    const auto bars = parse_text(
        "2020-01-02,10,11,9,10.5,10,100\n"
        "2020-01-03,10.5,12,10,11,11,200\n");
    REQUIRE(bars.size() == 2);
    CHECK(bars[0].date == Date{2020, 1, 2});
    CHECK(bars[1].adj_close == 11.0);
    CHECK(bars[0].volume == 100.0);
}

TEST_CASE("parse_daily_csv: header only gives empty list") {
    CHECK(parse_text("").empty());
}

TEST_CASE("parse_daily_csv: unsorted rows come back sorted") {
    const auto bars = parse_text(
        "2020-01-03,10.5,12,10,11,11,200\n"
        "2020-01-02,10,11,9,10.5,10,100\n");
    REQUIRE(bars.size() == 2);
    CHECK(bars[0].date < bars[1].date);
}

TEST_CASE("parse_daily_csv: negative volume is an unparsable row, zero is fine") {
    CHECK_THROWS_AS(parse_text("2020-01-02,10,11,9,10.5,10,-5\n"), UnparsableRow);
    const auto bars = parse_text("2020-01-02,10,11,9,10.5,10,0\n");
    CHECK(bars[0].volume == 0.0);
}

TEST_CASE("parse_daily_csv: error paths carry the offender") {
    // Missing Adj Close column.
    CHECK_THROWS_WITH_AS(
        parse_daily_csv_text("Date,Open,High,Low,Close,Volume\n", "x"),
        "missing column: Adj Close", MissingColumn);

    try {
        parse_text("2020-01-02,10,11,9,10.5,0,100\n");
        FAIL("expected NonPositivePrice");
    } catch (const NonPositivePrice& e) {
        CHECK(e.line == 2);
    }

    try {
        parse_text(
            "2020-01-02,10,11,9,10.5,10,100\n"
            "2020-01-03,junk,12,10,11,11,200\n");
        FAIL("expected UnparsableRow");
    } catch (const UnparsableRow& e) {
        CHECK(e.line == 3);
    }

    CHECK_THROWS_AS(parse_text("2020-01-02,10,11,9,10.5,10,100\n"
                               "2020-01-02,10,11,9,10.5,10,100\n"),
                    DuplicateDate);
}

TEST_CASE("aggregate_monthly: single day month equals that day for every method") {
    const auto bars = parse_text("2020-01-02,10,11,9,10.5,10,100\n");
    for (Aggregation agg :
         {Aggregation::Last, Aggregation::Mean, Aggregation::Max, Aggregation::Min}) {
        const auto monthly = aggregate_monthly(bars, agg);
        REQUIRE(monthly.size() == 1);
        CHECK(monthly[0].open == 10.0);
        CHECK(monthly[0].high == 11.0);
        CHECK(monthly[0].low == 9.0);
        CHECK(monthly[0].close == 10.0);
        CHECK(monthly[0].volume == 100.0);
    }
}

TEST_CASE("aggregate_monthly: closes 10/20/30 give mean 20, max 30, min 10, last 30") {
    const auto bars = parse_text(
        "2020-01-02,10,10,10,10,10,100\n"
        "2020-01-03,20,20,20,20,20,100\n"
        "2020-01-06,30,30,30,30,30,100\n");
    CHECK(aggregate_monthly(bars, Aggregation::Mean)[0].close == 20.0);
    CHECK(aggregate_monthly(bars, Aggregation::Max)[0].close == 30.0);
    CHECK(aggregate_monthly(bars, Aggregation::Min)[0].close == 10.0);
    CHECK(aggregate_monthly(bars, Aggregation::Last)[0].close == 30.0);
}

TEST_CASE("aggregate_monthly: two months give two ordered bars") {
    const auto bars = parse_text(
        "2020-01-02,10,10,10,10,10,100\n"
        "2020-02-03,20,20,20,20,20,100\n");
    const auto monthly = aggregate_monthly(bars, Aggregation::Last);
    REQUIRE(monthly.size() == 2);
    CHECK(monthly[0].month == YearMonth{2020, 1});
    CHECK(monthly[1].month == YearMonth{2020, 2});
}

TEST_CASE("build_panel: percent change and target bookkeeping") {
    const auto panel =
        build_panel({"A"}, {monthly_from_closes({100.0, 110.0, 121.0})});
    REQUIRE(panel.month_count() == 2);
    CHECK(panel.features[0][0][MonthlyFeaturePanel::kClose] == doctest::Approx(0.10).epsilon(1e-15));
    CHECK(panel.features[0][1][MonthlyFeaturePanel::kClose] == doctest::Approx(0.10).epsilon(1e-15));
    REQUIRE(panel.target_count() == 1);
    CHECK(panel.targets[0][0] == panel.features[0][1][MonthlyFeaturePanel::kClose]);
}

TEST_CASE("build_panel: constant series has all-zero features") {
    const auto panel = build_panel({"A"}, {monthly_from_closes({50, 50, 50, 50})});
    for (const auto& month : panel.features[0]) {
        for (double f : month) CHECK(f == 0.0);
    }
}

TEST_CASE("build_panel: 10 assets x 240 months -> 239 feature months, 238 targets") {
    std::vector<std::string> assets;
    std::vector<std::vector<MonthlyBar>> monthly;
    Rng rng(99);
    for (int a = 0; a < 10; ++a) {
        assets.push_back("A" + std::to_string(a));
        std::vector<double> closes;
        double c = 100.0;
        for (int m = 0; m < 240; ++m) {
            c *= 1.0 + rng.uniform(-0.05, 0.06);
            closes.push_back(c);
        }
        monthly.push_back(monthly_from_closes(closes));
    }
    const auto panel = build_panel(assets, monthly);
    CHECK(panel.month_count() == 239);
    CHECK(panel.target_count() == 238);
    for (int a = 0; a < 10; ++a) {
        CHECK(panel.features[a].size() == 239);
        CHECK(panel.targets[a].size() == 238);
    }
}

TEST_CASE("build_panel: misaligned calendars are rejected with the asset named") {
    auto shifted = monthly_from_closes({100, 110, 121}, {2000, 2});
    try {
        build_panel({"A", "B"}, {monthly_from_closes({100, 110, 121}), shifted});
        FAIL("expected MisalignedCalendars");
    } catch (const MisalignedCalendars& e) {
        CHECK(e.asset == "B");
    }
}

TEST_CASE("split_panel: 100 months -> train 49, val 21, test 30") {
    const auto panel = build_panel({"A"}, {monthly_from_closes(std::vector<double>(101, 100.0))});
    REQUIRE(panel.month_count() == 100);
    const auto split = split_panel(panel, 0.7, 0.3, 36);
    CHECK(split.train.size() == 49);
    CHECK(split.validation.size() == 21);
    CHECK(split.test.size() == 30);
    // Chronological, contiguous, disjoint.
    CHECK(split.train.begin == 0);
    CHECK(split.train.end == split.validation.begin);
    CHECK(split.validation.end == split.test.begin);
    CHECK(split.test.end == 100);
}

TEST_CASE("split_panel: too few months for the window") {
    const auto panel = build_panel({"A"}, {monthly_from_closes(std::vector<double>(11, 100.0))});
    CHECK_THROWS_AS(split_panel(panel, 0.7, 0.3, 36), TooFewMonths);
}

TEST_CASE("split_panel: fractions (1.0, 0.0) put everything in train") {
    const auto panel = build_panel({"A"}, {monthly_from_closes(std::vector<double>(61, 100.0))});
    const auto split = split_panel(panel, 1.0, 0.0, 36);
    CHECK(split.train.size() == panel.month_count());
    CHECK(split.validation.empty());
    CHECK(split.test.empty());
}

TEST_CASE("make_windows: one anchor month, 10 assets -> 10 samples") {
    std::vector<std::string> assets;
    std::vector<std::vector<MonthlyBar>> monthly;
    for (int a = 0; a < 10; ++a) {
        assets.push_back("A" + std::to_string(a));
        monthly.push_back(monthly_from_closes(std::vector<double>(60, 100.0)));
    }
    const auto panel = build_panel(assets, monthly);
    const auto windows = make_windows(panel, {40, 41}, 36);
    CHECK(windows.size() == 10);
    for (const auto& w : windows) CHECK(w.anchor_month == panel.months[40]);
}

TEST_CASE("make_windows: anchor 35 consumes months 0..35; anchor 10 is skipped") {
    std::vector<double> closes(60);
    double c = 100.0;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        c *= 1.01;
        closes[i] = c;
    }
    const auto panel = build_panel({"A"}, {monthly_from_closes(closes)});

    const auto at35 = make_windows(panel, {35, 36}, 36);
    REQUIRE(at35.size() == 1);
    CHECK(at35[0].sample.steps == 36);
    // First input step is panel month 0, last is month 35.
    for (std::size_t k = 0; k < MonthlyFeaturePanel::kAttributes; ++k) {
        CHECK(at35[0].sample.step(0)[k] == panel.features[0][0][k]);
        CHECK(at35[0].sample.step(35)[k] == panel.features[0][35][k]);
    }
    CHECK(at35[0].sample.target == panel.targets[0][35]);

    CHECK(make_windows(panel, {10, 11}, 36).empty());
}

TEST_CASE("make_windows: anchors at the panel tail have no target and are skipped") {
    const auto panel = build_panel({"A"}, {monthly_from_closes(std::vector<double>(40, 100.0))});
    // Last feature month (index 38) has no next-month target.
    const auto windows = make_windows(panel, {36, 39}, 36);
    CHECK(windows.size() == 2);
}

TEST_CASE("summarize_split: constant features have zero stddev") {
    const auto panel = build_panel({"A"}, {monthly_from_closes(std::vector<double>(10, 100.0))});
    const auto stats = summarize_split(panel, {0, panel.month_count()});
    for (const auto& attr : stats[0].per_attribute) {
        CHECK(attr.stddev == 0.0);
        CHECK(attr.mean == 0.0);
    }
}

TEST_CASE("summarize_split: features {-1, 1} give mean 0, population std 1") {
    MonthlyFeaturePanel panel;
    panel.assets = {"A"};
    panel.months = {{2000, 1}, {2000, 2}};
    panel.features = {{{-1, -1, -1, -1, -1}, {1, 1, 1, 1, 1}}};
    panel.targets = {{1.0}};
    const auto stats = summarize_split(panel, {0, 2});
    for (const auto& attr : stats[0].per_attribute) {
        CHECK(attr.mean == 0.0);
        CHECK(attr.stddev == 1.0);
        CHECK(attr.min == -1.0);
        CHECK(attr.max == 1.0);
    }
}

TEST_CASE("summarize_split: bundled mini fixture matches spreadsheet values") {
    const std::filesystem::path dir = TBP_TEST_DATA_DIR;
    const auto bars1 = parse_daily_csv(dir / "mini/AST1.csv");
    const auto bars2 = parse_daily_csv(dir / "mini/AST2.csv");
    const auto panel = build_panel(
        {"AST1", "AST2"}, {aggregate_monthly(bars1, Aggregation::Last),
                           aggregate_monthly(bars2, Aggregation::Last)});
    REQUIRE(panel.month_count() == 2);
    const auto stats = summarize_split(panel, {0, 2});

    // Frozen from an independent spreadsheet computation on the same files.
    const double ast1_expected[5][4] = {
        {0.04669312169312169, 0.01812169312169305, 0.02857142857142864, 0.06481481481481474},
        {0.08012820512820512, 0.0032051282051282007, 0.07692307692307693, 0.08333333333333333},
        {0.058301886792452795, 0.001698113207547168, 0.05660377358490563, 0.05999999999999996},
        {0.08712121212121213, 0.0037878787878787915, 0.08333333333333333, 0.09090909090909091},
        {-0.175, 0.425, -0.6, 0.25}};
    const double ast2_expected[5][4] = {
        {-0.022619047619047615, 0.07261904761904761, -0.09523809523809523, 0.05},
        {0.046536796536796536, 0.0010822510822510803, 0.045454545454545456,
         0.047619047619047616},
        {-0.023684210526315794, 0.07631578947368421, -0.1, 0.05263157894736842},
        {0.04880952380952381, 0.0011904761904761932, 0.047619047619047616, 0.05},
        {-0.04090909090909091, 0.14090909090909093, -0.18181818181818182, 0.1}};

    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(stats[0].per_attribute[k].mean == doctest::Approx(ast1_expected[k][0]).epsilon(1e-14));
        CHECK(stats[0].per_attribute[k].stddev ==
              doctest::Approx(ast1_expected[k][1]).epsilon(1e-14));
        CHECK(stats[0].per_attribute[k].min == doctest::Approx(ast1_expected[k][2]).epsilon(1e-14));
        CHECK(stats[0].per_attribute[k].max == doctest::Approx(ast1_expected[k][3]).epsilon(1e-14));
        CHECK(stats[1].per_attribute[k].mean == doctest::Approx(ast2_expected[k][0]).epsilon(1e-14));
        CHECK(stats[1].per_attribute[k].stddev ==
              doctest::Approx(ast2_expected[k][1]).epsilon(1e-14));
        CHECK(stats[1].per_attribute[k].min == doctest::Approx(ast2_expected[k][2]).epsilon(1e-14));
        CHECK(stats[1].per_attribute[k].max == doctest::Approx(ast2_expected[k][3]).epsilon(1e-14));
    }
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST_CASE("property: monthly Last aggregation of one-bar months is the identity") {
    Rng rng(4242);
    std::vector<DailyBar> days;
    YearMonth m{2001, 1};
    for (int i = 0; i < 24; ++i) {
        DailyBar b;
        b.date = {m.year, m.month, 15};
        b.open = rng.uniform(1.0, 50.0);
        b.high = b.open * (1.0 + rng.next_double());
        b.low = b.open * (1.0 - 0.5 * rng.next_double());
        b.adj_close = rng.uniform(1.0, 50.0);
        b.volume = std::floor(rng.uniform(0.0, 1e6));
        days.push_back(b);
        m = m.next();
    }
    const auto monthly = aggregate_monthly(days, Aggregation::Last);
    REQUIRE(monthly.size() == days.size());
    for (std::size_t i = 0; i < days.size(); ++i) {
        CHECK(monthly[i].open == days[i].open);
        CHECK(monthly[i].high == days[i].high);
        CHECK(monthly[i].low == days[i].low);
        CHECK(monthly[i].close == days[i].adj_close);
        CHECK(monthly[i].volume == days[i].volume);
    }
}

TEST_CASE("property: no look-ahead in any window") {
    Rng rng(7);
    std::vector<double> closes;
    double c = 100.0;
    for (int i = 0; i < 80; ++i) {
        c *= 1.0 + rng.uniform(-0.04, 0.05);
        closes.push_back(c);
    }
    const auto panel = build_panel({"A"}, {monthly_from_closes(closes)});
    const auto windows = make_windows(panel, {0, panel.month_count()}, 36);
    CHECK(!windows.empty());
    for (const auto& w : windows) {
        // The anchor is the max input month; the target is the next month's
        // close change, so every input month < target month by construction.
        const auto anchor_index =
            static_cast<std::size_t>(std::find(panel.months.begin(), panel.months.end(),
                                               w.anchor_month) -
                                     panel.months.begin());
        REQUIRE(anchor_index + 1 < panel.month_count());
        CHECK(w.sample.target ==
              panel.features[0][anchor_index + 1][MonthlyFeaturePanel::kClose]);
        for (std::size_t k = 0; k < MonthlyFeaturePanel::kAttributes; ++k) {
            CHECK(w.sample.step(w.sample.steps - 1)[k] == panel.features[0][anchor_index][k]);
        }
    }
}

TEST_CASE("property: price reconstruction from percent changes") {
    Rng rng(11);
    std::vector<double> closes;
    double c = 73.0;
    for (int i = 0; i < 50; ++i) {
        c *= 1.0 + rng.uniform(-0.08, 0.09);
        closes.push_back(c);
    }
    const auto panel = build_panel({"A"}, {monthly_from_closes(closes)});
    double rebuilt = closes[0];
    for (std::size_t t = 0; t < panel.month_count(); ++t) {
        rebuilt *= 1.0 + panel.features[0][t][MonthlyFeaturePanel::kClose];
        CHECK(rebuilt == doctest::Approx(closes[t + 1]).epsilon(1e-12));
    }
}

TEST_CASE("panel csv round trip") {
    Rng rng(5);
    std::vector<std::string> assets = {"AA", "BB", "CC"};
    std::vector<std::vector<MonthlyBar>> monthly;
    for (std::size_t a = 0; a < assets.size(); ++a) {
        std::vector<double> closes;
        double c = 10.0 + static_cast<double>(a);
        for (int i = 0; i < 50; ++i) {
            c *= 1.0 + rng.uniform(-0.05, 0.05);
            closes.push_back(c);
        }
        monthly.push_back(monthly_from_closes(closes));
    }
    const auto panel = build_panel(assets, monthly);

    std::ostringstream out;
    write_panel_csv(out, panel);
    std::istringstream in(out.str());
    const auto rebuilt = read_panel_csv(in);

    REQUIRE(rebuilt.assets == panel.assets);
    REQUIRE(rebuilt.months == panel.months);
    for (std::size_t a = 0; a < assets.size(); ++a) {
        for (std::size_t t = 0; t < panel.month_count(); ++t) {
            for (std::size_t k = 0; k < MonthlyFeaturePanel::kAttributes; ++k) {
                CHECK(rebuilt.features[a][t][k] == panel.features[a][t][k]);
            }
        }
        CHECK(rebuilt.targets[a] == panel.targets[a]);
    }
}
