// tbp — threshold-based portfolio engine.
//
// Subcommands: fixture, ingest, train, evaluate, backtest, frontier, manage.
// Exit codes: 0 success, 2 input/config error, 3 numerical failure,
// 4 target unreachable.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "tbp/checkpoint.hpp"
#include "tbp/errors.hpp"
#include "tbp/evaluation.hpp"
#include "tbp/frontier.hpp"
#include "tbp/io.hpp"
#include "tbp/market_data.hpp"
#include "tbp/pipeline.hpp"
#include "tbp/portfolio.hpp"
#include "tbp/rnn.hpp"
#include "tbp/synthetic.hpp"
#include "tbp/train.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUnreachable = 4;

// ---------------------------------------------------------------------------
// Run configuration: defaults < config file < command-line flags.
// ---------------------------------------------------------------------------

struct RunConfig {
    std::string data_dir;
    std::string aggregation = "last";
    double train_frac = 0.7;
    double val_frac = 0.3;

    std::string cell = "lstm";
    std::size_t layers = 1;
    std::size_t hidden = 36;
    double dropout = 0.5;
    std::size_t seq_len = 36;
    double lr = 0.001;
    std::size_t batch = 20;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;

    std::string mode = "long";
    double theta_plus = 0.0;
    double theta_minus = 0.0;

    std::string thetas = "0:0.025:0.0025";
    std::size_t window = 10;

    std::uint64_t seed = 42;
    std::string out_dir = "out";
};

std::uint64_t parse_u64_or_throw(const std::string& token) {
    try {
        const long v = tbp::parse_long(token);
        if (v < 0) throw tbp::ConfigError("seed must be non-negative");
        return static_cast<std::uint64_t>(v);
    } catch (const tbp::ConfigError&) {
        throw;
    } catch (const tbp::Error&) {
        throw tbp::ConfigError("bad integer: '" + token + "'");
    }
}

std::size_t parse_count(const std::string& token, const char* what) {
    const long v = tbp::parse_long(token);
    if (v <= 0) throw tbp::ConfigError(std::string(what) + " must be positive");
    return static_cast<std::size_t>(v);
}

// Flat `key=value` file with `[section]` headers; unknown keys rejected.
void apply_config_file(RunConfig& rc, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw tbp::ConfigError("cannot open config file: " + path.string());

    using Setter = std::function<void(RunConfig&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"data.dir", [](RunConfig& c, const std::string& v) { c.data_dir = v; }},
        {"data.aggregation", [](RunConfig& c, const std::string& v) { c.aggregation = v; }},
        {"data.train_frac",
         [](RunConfig& c, const std::string& v) { c.train_frac = tbp::parse_double(v); }},
        {"data.val_frac",
         [](RunConfig& c, const std::string& v) { c.val_frac = tbp::parse_double(v); }},
        {"model.cell", [](RunConfig& c, const std::string& v) { c.cell = v; }},
        {"model.layers",
         [](RunConfig& c, const std::string& v) { c.layers = parse_count(v, "layers"); }},
        {"model.hidden",
         [](RunConfig& c, const std::string& v) { c.hidden = parse_count(v, "hidden"); }},
        {"model.dropout",
         [](RunConfig& c, const std::string& v) { c.dropout = tbp::parse_double(v); }},
        {"model.seq_len",
         [](RunConfig& c, const std::string& v) { c.seq_len = parse_count(v, "seq_len"); }},
        {"model.lr", [](RunConfig& c, const std::string& v) { c.lr = tbp::parse_double(v); }},
        {"model.batch",
         [](RunConfig& c, const std::string& v) { c.batch = parse_count(v, "batch"); }},
        {"model.max_epochs",
         [](RunConfig& c, const std::string& v) { c.max_epochs = parse_count(v, "max_epochs"); }},
        {"model.patience",
         [](RunConfig& c, const std::string& v) {
             const long p = tbp::parse_long(v);
             if (p < 0) throw tbp::ConfigError("patience must be >= 0");
             c.patience = static_cast<std::size_t>(p);
         }},
        {"portfolio.mode", [](RunConfig& c, const std::string& v) { c.mode = v; }},
        {"portfolio.theta_plus",
         [](RunConfig& c, const std::string& v) { c.theta_plus = tbp::parse_double(v); }},
        {"portfolio.theta_minus",
         [](RunConfig& c, const std::string& v) { c.theta_minus = tbp::parse_double(v); }},
        {"frontier.thetas", [](RunConfig& c, const std::string& v) { c.thetas = v; }},
        {"frontier.window",
         [](RunConfig& c, const std::string& v) { c.window = parse_count(v, "window"); }},
        {"run.seed",
         [](RunConfig& c, const std::string& v) { c.seed = parse_u64_or_throw(v); }},
        {"run.out", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
    };

    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        if (line[first] == '#') continue;
        if (line[first] == '[') {
            const std::size_t close = line.find(']', first);
            if (close == std::string::npos) {
                throw tbp::ConfigError("config line " + std::to_string(line_no) +
                                       ": unterminated section header");
            }
            section = line.substr(first + 1, close - first - 1);
            continue;
        }
        const std::size_t eq = line.find('=', first);
        if (eq == std::string::npos) {
            throw tbp::ConfigError("config line " + std::to_string(line_no) +
                                   ": expected key=value");
        }
        std::string key = line.substr(first, eq - first);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        const std::size_t vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? std::string() : value.substr(vstart);

        const std::string full = section.empty() ? key : section + "." + key;
        auto it = setters.find(full);
        if (it == setters.end()) {
            throw tbp::ConfigError("config line " + std::to_string(line_no) +
                                   ": unknown key '" + full + "'");
        }
        it->second(rc, value);
    }
}

ordered_json config_json(const RunConfig& rc) {
    ordered_json j;
    j["data_dir"] = rc.data_dir;
    j["aggregation"] = rc.aggregation;
    j["train_frac"] = rc.train_frac;
    j["val_frac"] = rc.val_frac;
    j["cell"] = rc.cell;
    j["layers"] = rc.layers;
    j["hidden"] = rc.hidden;
    j["dropout"] = rc.dropout;
    j["seq_len"] = rc.seq_len;
    j["lr"] = rc.lr;
    j["batch"] = rc.batch;
    j["max_epochs"] = rc.max_epochs;
    j["patience"] = rc.patience;
    j["mode"] = rc.mode;
    j["theta_plus"] = rc.theta_plus;
    j["theta_minus"] = rc.theta_minus;
    j["thetas"] = rc.thetas;
    j["window"] = rc.window;
    j["seed"] = rc.seed;
    return j;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
    tbp::atomic_write_file(path, text);
}

// Digests keyed by basename only, so identical runs in different directories
// produce identical manifests.
void write_manifest(const fs::path& out_dir, const std::string& command, const RunConfig& rc,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    ordered_json j;
    j["schema_version"] = 1;
    j["command"] = command;
    j["seed"] = rc.seed;
    j["config"] = config_json(rc);
    ordered_json in_j = ordered_json::object();
    for (const fs::path& p : inputs) in_j[p.filename().string()] = tbp::file_digest(p);
    j["inputs"] = in_j;
    ordered_json out_j = ordered_json::object();
    for (const fs::path& p : outputs) out_j[p.filename().string()] = tbp::file_digest(p);
    j["outputs"] = out_j;
    write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

tbp::NetworkConfig network_config(const RunConfig& rc) {
    tbp::NetworkConfig cfg;
    cfg.cell = tbp::cell_type_from_string(rc.cell);
    cfg.hidden.assign(rc.layers, rc.hidden);
    cfg.dropout_rate = rc.dropout;
    cfg.seq_len = rc.seq_len;
    cfg.learning_rate = rc.lr;
    cfg.batch_size = rc.batch;
    cfg.max_epochs = rc.max_epochs;
    cfg.patience = rc.patience;
    cfg.seed = rc.seed;
    return cfg;
}

// ---------------------------------------------------------------------------
// Ingest-directory round trip (panel.csv + split.json)
// ---------------------------------------------------------------------------

void write_split_json(const fs::path& path, const tbp::DatasetSplit& split, std::size_t months,
                      std::size_t window) {
    ordered_json j;
    j["schema_version"] = 1;
    j["months"] = months;
    j["window"] = window;
    auto range_json = [](const tbp::IndexRange& r) {
        ordered_json o;
        o["begin"] = r.begin;
        o["end"] = r.end;
        return o;
    };
    j["train"] = range_json(split.train);
    j["validation"] = range_json(split.validation);
    j["test"] = range_json(split.test);
    write_text(path, j.dump(2) + "\n");
}

std::pair<tbp::DatasetSplit, std::size_t> read_split_json(const fs::path& path) {
    ordered_json j = ordered_json::parse(tbp::read_file(path));
    if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1) {
        throw tbp::SchemaMismatch("split manifest schema not supported: " + path.string());
    }
    auto range = [&j](const char* key) {
        return tbp::IndexRange{j[key]["begin"].get<std::size_t>(),
                               j[key]["end"].get<std::size_t>()};
    };
    tbp::DatasetSplit split{range("train"), range("validation"), range("test")};
    return {split, j["window"].get<std::size_t>()};
}

tbp::MonthlyFeaturePanel load_panel(const fs::path& dir) {
    std::ifstream in(dir / "panel.csv");
    if (!in) throw tbp::ConfigError("no panel.csv under " + dir.string() + " (run ingest first)");
    return tbp::read_panel_csv(in);
}

tbp::IndexRange split_range(const tbp::DatasetSplit& split, const std::string& name) {
    if (name == "train") return split.train;
    if (name == "validation") return split.validation;
    if (name == "test") return split.test;
    throw tbp::ConfigError("unknown split: '" + name + "' (expected train|validation|test)");
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_fixture(const RunConfig& rc, std::size_t assets, std::size_t months) {
    tbp::SyntheticSpec spec;
    spec.assets = assets;
    spec.months = months;
    spec.seed = rc.seed;
    const fs::path out_dir = rc.out_dir;
    fs::create_directories(out_dir);
    const auto paths = tbp::write_synthetic_universe(out_dir, spec);
    write_manifest(out_dir, "fixture", rc, {}, paths);
    std::cout << "wrote " << paths.size() << " synthetic assets, " << months << " months -> "
              << out_dir.string() << '\n';
    return kExitOk;
}

int cmd_ingest(const RunConfig& rc) {
    if (rc.data_dir.empty()) throw tbp::ConfigError("ingest needs --data-dir");
    const fs::path data_dir = rc.data_dir;
    if (!fs::is_directory(data_dir)) {
        throw tbp::ConfigError("not a directory: " + data_dir.string());
    }

    std::vector<fs::path> csvs;
    for (const auto& entry : fs::directory_iterator(data_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") {
            csvs.push_back(entry.path());
        }
    }
    std::sort(csvs.begin(), csvs.end());
    if (csvs.empty()) throw tbp::ConfigError("no .csv files under " + data_dir.string());

    const tbp::Aggregation agg = tbp::aggregation_from_string(rc.aggregation);
    std::vector<std::string> assets;
    std::vector<std::vector<tbp::MonthlyBar>> monthly;
    for (const fs::path& p : csvs) {
        assets.push_back(p.stem().string());
        monthly.push_back(tbp::aggregate_monthly(tbp::parse_daily_csv(p), agg));
    }

    const tbp::MonthlyFeaturePanel panel = tbp::build_panel(assets, monthly);
    const tbp::DatasetSplit split =
        tbp::split_panel(panel, rc.train_frac, rc.val_frac, rc.seq_len);

    const fs::path out_dir = rc.out_dir;
    fs::create_directories(out_dir);

    std::ostringstream panel_csv;
    tbp::write_panel_csv(panel_csv, panel);
    write_text(out_dir / "panel.csv", panel_csv.str());
    write_split_json(out_dir / "split.json", split, panel.month_count(), rc.seq_len);

    const std::array<std::pair<const char*, tbp::IndexRange>, 3> splits = {
        std::pair{"train", split.train}, std::pair{"validation", split.validation},
        std::pair{"test", split.test}};
    std::vector<fs::path> outputs = {out_dir / "panel.csv", out_dir / "split.json"};
    for (const auto& [name, range] : splits) {
        std::ostringstream stats_csv;
        tbp::write_stats_csv(stats_csv, tbp::summarize_split(panel, range));
        const fs::path path = out_dir / (std::string("stats_") + name + ".csv");
        write_text(path, stats_csv.str());
        outputs.push_back(path);
    }
    write_manifest(out_dir, "ingest", rc, csvs, outputs);

    std::cout << "panel: " << panel.asset_count() << " assets, " << panel.month_count()
              << " months (train " << split.train.size() << ", validation "
              << split.validation.size() << ", test " << split.test.size() << ") -> "
              << (out_dir / "panel.csv").string() << '\n';
    return kExitOk;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(parse_count(tok, what));
    if (out.empty()) throw tbp::ConfigError(std::string("empty list for ") + what);
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(tbp::parse_double(tok));
    if (out.empty()) throw tbp::ConfigError("empty list");
    return out;
}

int cmd_train(const RunConfig& rc, const fs::path& in_dir, bool grid,
              const std::string& grid_layers, const std::string& grid_units,
              const std::string& grid_dropout) {
    const tbp::MonthlyFeaturePanel panel = load_panel(in_dir);
    const auto [split, window_hint] = read_split_json(in_dir / "split.json");
    (void)window_hint;

    const auto train_windows = tbp::make_windows(panel, split.train, rc.seq_len);
    const auto val_windows = tbp::make_windows(panel, split.validation, rc.seq_len);
    const auto train_samples = tbp::extract_sequences(train_windows);
    const auto val_samples = tbp::extract_sequences(val_windows);

    const fs::path out_dir = rc.out_dir;
    fs::create_directories(out_dir);
    std::vector<fs::path> outputs;

    tbp::TrainResult result;
    if (grid) {
        tbp::NetworkConfig base = network_config(rc);
        std::vector<tbp::NetworkConfig> configs;
        if (grid_layers.empty() && grid_units.empty() && grid_dropout.empty()) {
            configs = tbp::default_grid(base);
        } else {
            const auto layer_list = grid_layers.empty()
                                        ? std::vector<std::size_t>{1, 2, 3}
                                        : parse_size_list(grid_layers, "layers");
            const auto unit_list = grid_units.empty()
                                       ? std::vector<std::size_t>{8, 16, 32, 64, 128}
                                       : parse_size_list(grid_units, "units");
            const auto dropout_list = grid_dropout.empty()
                                          ? std::vector<double>{0.5, 0.0}
                                          : parse_double_list(grid_dropout);
            for (std::size_t layers : layer_list) {
                for (std::size_t units : unit_list) {
                    for (double dropout : dropout_list) {
                        tbp::NetworkConfig cfg = base;
                        cfg.hidden.assign(layers, units);
                        cfg.dropout_rate = dropout;
                        configs.push_back(cfg);
                    }
                }
            }
        }

        tbp::GridSearchResult gs = tbp::grid_search(
            configs, tbp::MonthlyFeaturePanel::kAttributes, train_samples, val_samples);

        std::ostringstream grid_csv;
        grid_csv << "index,cell,layers,hidden,dropout,val_loss,epochs,best\n";
        for (std::size_t i = 0; i < gs.entries.size(); ++i) {
            const tbp::GridEntry& e = gs.entries[i];
            grid_csv << i << ',' << tbp::to_string(e.config.cell) << ','
                     << e.config.layer_count() << ',' << e.config.hidden[0] << ','
                     << tbp::format_double(e.config.dropout_rate) << ','
                     << tbp::format_double(e.val_loss) << ',' << e.epochs_run << ','
                     << (i == gs.best_index ? 1 : 0) << '\n';
        }
        write_text(out_dir / "grid_results.csv", grid_csv.str());
        outputs.push_back(out_dir / "grid_results.csv");

        const tbp::NetworkConfig& best_cfg = gs.entries[gs.best_index].config;
        std::ostringstream marker;
        marker << "index=" << gs.best_index << "\ncell=" << tbp::to_string(best_cfg.cell)
               << "\nlayers=" << best_cfg.layer_count() << "\nhidden=" << best_cfg.hidden[0]
               << "\ndropout=" << tbp::format_double(best_cfg.dropout_rate)
               << "\nval_loss=" << tbp::format_double(gs.entries[gs.best_index].val_loss)
               << '\n';
        write_text(out_dir / "best_config.txt", marker.str());
        outputs.push_back(out_dir / "best_config.txt");

        result = std::move(gs.best);
    } else {
        tbp::RnnModel model =
            tbp::make_model(network_config(rc), tbp::MonthlyFeaturePanel::kAttributes);
        result = tbp::train(std::move(model), train_samples, val_samples);
    }

    tbp::TrainingMeta meta{result.epochs_run, result.best_epoch, result.best_val_loss};
    std::ostringstream ckpt;
    tbp::write_checkpoint(ckpt, result.model, meta);
    write_text(out_dir / "checkpoint.txt", ckpt.str());
    outputs.insert(outputs.begin(), out_dir / "checkpoint.txt");

    std::ostringstream hist;
    tbp::write_history_csv(hist, result.history);
    write_text(out_dir / "history.csv", hist.str());
    outputs.push_back(out_dir / "history.csv");

    write_manifest(out_dir, "train", rc, {in_dir / "panel.csv", in_dir / "split.json"}, outputs);
    std::cout << "trained " << tbp::to_string(result.model.config.cell) << " ("
              << result.epochs_run << " epochs, best validation loss "
              << tbp::format_double(result.best_val_loss) << ") -> "
              << (out_dir / "checkpoint.txt").string() << '\n';
    return kExitOk;
}

int cmd_evaluate(const RunConfig& rc, const fs::path& in_dir, const fs::path& checkpoint,
                 const std::string& split_name) {
    const tbp::MonthlyFeaturePanel panel = load_panel(in_dir);
    const auto [split, window_hint] = read_split_json(in_dir / "split.json");
    (void)window_hint;
    const tbp::Checkpoint ckpt = tbp::load_checkpoint(checkpoint);

    const tbp::IndexRange range = split_range(split, split_name);
    const tbp::PredictionTable table = tbp::predict_range(ckpt.model, panel, range);

    // Records are asset-major; each asset owns a contiguous block of months.
    const std::size_t months = table.predicted.months.size();
    std::vector<double> ratios;
    for (std::size_t a = 0; a < panel.asset_count(); ++a) {
        std::span<const tbp::PredictionRecord> block(table.records.data() + a * months, months);
        ratios.push_back(tbp::hit_ratio(block));
    }
    const tbp::HitSummary summary = tbp::hit_ratio_summary(ratios);

    const std::vector<double> thetas = tbp::parse_theta_grid(rc.thetas);
    const auto rows = tbp::threshold_accuracy(table.records, thetas);

    const fs::path out_dir = rc.out_dir;
    fs::create_directories(out_dir);
    std::ostringstream hits_csv;
    tbp::write_hit_ratios_csv(hits_csv, panel.assets, ratios, summary);
    write_text(out_dir / "hit_ratios.csv", hits_csv.str());
    std::ostringstream acc_csv;
    tbp::write_threshold_table_csv(acc_csv, rows);
    write_text(out_dir / "accuracy.csv", acc_csv.str());

    write_manifest(out_dir, "evaluate", rc,
                   {in_dir / "panel.csv", in_dir / "split.json", checkpoint},
                   {out_dir / "hit_ratios.csv", out_dir / "accuracy.csv"});
    std::cout << "hit ratio over " << split_name << " (mean, sd): "
              << tbp::format_hit_summary(summary) << '\n';
    return kExitOk;
}

int cmd_backtest(const RunConfig& rc, const fs::path& in_dir, const fs::path& checkpoint,
                 const std::string& theta_plus_text) {
    const tbp::MonthlyFeaturePanel panel = load_panel(in_dir);
    const auto [split, window_hint] = read_split_json(in_dir / "split.json");
    (void)window_hint;
    const tbp::Checkpoint ckpt = tbp::load_checkpoint(checkpoint);

    const tbp::PredictionTable table = tbp::predict_range(ckpt.model, panel, split.test);

    tbp::TbpConfig config;
    config.mode = tbp::tbp_mode_from_string(rc.mode);
    config.theta_minus = rc.theta_minus;
    if (theta_plus_text == "all") {
        // Sentinel: every asset clears the bar; the TBP collapses to the EWP.
        config.theta_plus = -std::numeric_limits<double>::infinity();
    } else {
        config.theta_plus =
            theta_plus_text.empty() ? rc.theta_plus : tbp::parse_double(theta_plus_text);
    }

    const tbp::BacktestResult tbp_result = tbp::backtest(table.predicted, table.realized, config);
    const tbp::BacktestResult ewp_result = tbp::backtest_ewp(table.realized);

    const fs::path out_dir = rc.out_dir;
    fs::create_directories(out_dir);
    std::vector<fs::path> outputs;
    auto emit = [&](const std::string& name, const tbp::BacktestResult& result) {
        std::ostringstream csv;
        tbp::write_backtest_csv(csv, result, panel.assets);
        const fs::path path = out_dir / name;
        write_text(path, csv.str());
        outputs.push_back(path);
    };
    emit("tbp.csv", tbp_result);
    emit("ewp.csv", ewp_result);

    std::ostringstream stats_csv;
    stats_csv << "portfolio,mean,sd,mean_over_sd,average_assets\n";
    tbp::write_stats_row_csv(stats_csv, "TBP", tbp_result.stats);
    tbp::write_stats_row_csv(stats_csv, "EWP", ewp_result.stats);
    for (std::size_t a = 0; a < panel.asset_count(); ++a) {
        const tbp::BacktestResult asset_result = tbp::backtest_single_asset(table.realized, a);
        emit("asset_" + panel.assets[a] + ".csv", asset_result);
        tbp::write_stats_row_csv(stats_csv, panel.assets[a], asset_result.stats);
    }
    write_text(out_dir / "stats.csv", stats_csv.str());
    outputs.push_back(out_dir / "stats.csv");

    write_manifest(out_dir, "backtest", rc,
                   {in_dir / "panel.csv", in_dir / "split.json", checkpoint}, outputs);
    std::cout << "TBP wealth over " << tbp_result.returns.size()
              << " months: " << tbp::format_double(tbp_result.wealth.back()) << " (EWP "
              << tbp::format_double(ewp_result.wealth.back()) << ")\n";
    return kExitOk;
}

int cmd_frontier(const RunConfig& rc, const fs::path& in_dir, const fs::path& checkpoint) {
    const tbp::MonthlyFeaturePanel panel = load_panel(in_dir);
    const auto [split, window_hint] = read_split_json(in_dir / "split.json");
    (void)window_hint;
    const tbp::Checkpoint ckpt = tbp::load_checkpoint(checkpoint);

    const tbp::PredictionTable table = tbp::predict_range(ckpt.model, panel, split.test);
    const std::vector<double> thetas = tbp::parse_theta_grid(rc.thetas);
    const tbp::FrontierModel model = tbp::frontier_from_predictions(
        table.predicted, table.realized, thetas, rc.window,
        tbp::tbp_mode_from_string(rc.mode));

    const fs::path out_dir = rc.out_dir;
    fs::create_directories(out_dir);
    std::ostringstream frontier_csv;
    tbp::write_frontier_csv(frontier_csv, model.points);
    write_text(out_dir / "frontier.csv", frontier_csv.str());
    std::ostringstream fit_csv;
    tbp::write_fit_csv(fit_csv, model.fit);
    write_text(out_dir / "fit.csv", fit_csv.str());

    write_manifest(out_dir, "frontier", rc,
                   {in_dir / "panel.csv", in_dir / "split.json", checkpoint},
                   {out_dir / "frontier.csv", out_dir / "fit.csv"});
    std::cout << "frontier: " << model.points.size() << " points, residual rms "
              << tbp::format_double(model.fit.residual_rms) << '\n';
    return kExitOk;
}

int cmd_manage(const RunConfig& rc, const fs::path& in_dir, const fs::path& checkpoint,
               const std::optional<double>& target_risk,
               const std::optional<double>& target_return) {
    if (target_risk.has_value() == target_return.has_value()) {
        throw tbp::ConfigError("manage needs exactly one of --target-risk / --target-return");
    }
    const tbp::MonthlyFeaturePanel panel = load_panel(in_dir);
    const auto [split, window_hint] = read_split_json(in_dir / "split.json");
    (void)window_hint;
    const tbp::Checkpoint ckpt = tbp::load_checkpoint(checkpoint);

    const tbp::PredictionTable table = tbp::predict_range(ckpt.model, panel, split.test);
    const std::vector<double> thetas = tbp::parse_theta_grid(rc.thetas);
    const tbp::TargetAxis axis =
        target_risk.has_value() ? tbp::TargetAxis::Risk : tbp::TargetAxis::Return;
    const double target = target_risk.has_value() ? *target_risk : *target_return;

    const tbp::Recommendation rec =
        tbp::manage_step(table.predicted, table.realized, thetas, rc.window, axis, target,
                         tbp::tbp_mode_from_string(rc.mode));

    const fs::path out_dir = rc.out_dir;
    fs::create_directories(out_dir);

    ordered_json j;
    j["schema_version"] = 1;
    j["decision_month"] = rec.decision_month.to_string();
    j["target_axis"] = axis == tbp::TargetAxis::Risk ? "risk" : "return";
    j["target_value"] = target;
    j["theta_hat"] = rec.theta_hat;
    j["expected_risk"] = rec.expected_risk;
    j["expected_return"] = rec.expected_return;
    ordered_json members = ordered_json::array();
    for (const tbp::Position& p : rec.members) {
        ordered_json m;
        m["asset"] = panel.assets[p.asset];
        m["side"] = p.sign >= 0 ? "long" : "short";
        m["weight"] = p.sign >= 0 ? rec.member_weight : -rec.member_weight;
        members.push_back(m);
    }
    j["members"] = members;
    j["cash_weight"] = rec.members.empty() ? 1.0 : 0.0;
    write_text(out_dir / "recommendation.json", j.dump(2) + "\n");

    std::ostringstream frontier_csv;
    tbp::write_frontier_csv(frontier_csv, rec.frontier.points);
    write_text(out_dir / "frontier.csv", frontier_csv.str());
    std::ostringstream fit_csv;
    tbp::write_fit_csv(fit_csv, rec.frontier.fit);
    write_text(out_dir / "fit.csv", fit_csv.str());

    write_manifest(out_dir, "manage", rc,
                   {in_dir / "panel.csv", in_dir / "split.json", checkpoint},
                   {out_dir / "recommendation.json", out_dir / "frontier.csv",
                    out_dir / "fit.csv"});
    std::cout << "theta_hat " << tbp::format_double(rec.theta_hat) << " -> expected (risk "
              << tbp::format_double(rec.expected_risk) << ", return "
              << tbp::format_double(rec.expected_return) << "), " << rec.members.size()
              << " members\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"threshold-based portfolio engine"};
    app.require_subcommand(1);

    RunConfig rc;
    std::string config_path;

    // Shared options registered per subcommand so each help page is
    // self-contained; values land in the one RunConfig.
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key=value config file");
        cmd->add_option("--seed", rc.seed, "master seed");
        cmd->add_option("--out", rc.out_dir, "output directory");
    };

    CLI::App* fixture = app.add_subcommand("fixture", "generate the synthetic universe");
    std::size_t fixture_assets = 10;
    std::size_t fixture_months = 240;
    add_common(fixture);
    fixture->add_option("--assets", fixture_assets, "number of assets");
    fixture->add_option("--months", fixture_months, "number of months");

    CLI::App* ingest = app.add_subcommand("ingest", "parse daily CSVs into a monthly panel");
    add_common(ingest);
    ingest->add_option("--data-dir", rc.data_dir, "directory of per-asset daily CSVs");
    ingest->add_option("--agg", rc.aggregation, "monthly aggregation: last|mean|max|min");
    ingest->add_option("--train-frac", rc.train_frac, "train+validation fraction");
    ingest->add_option("--val-frac", rc.val_frac, "validation fraction of train");
    ingest->add_option("--window", rc.seq_len, "input window length (months)");

    CLI::App* train_cmd = app.add_subcommand("train", "train a recurrent predictor");
    std::string train_in;
    bool grid = false;
    std::string grid_layers, grid_units, grid_dropout;
    add_common(train_cmd);
    train_cmd->add_option("--in", train_in, "ingest output directory")->required();
    train_cmd->add_option("--cell", rc.cell, "srnn|lstm|gru");
    train_cmd->add_option("--layers", rc.layers, "recurrent layers");
    train_cmd->add_option("--hidden", rc.hidden, "hidden units per layer");
    train_cmd->add_option("--dropout", rc.dropout, "dropout rate in [0,1)");
    train_cmd->add_option("--seq-len", rc.seq_len, "input window length");
    train_cmd->add_option("--lr", rc.lr, "ADAM learning rate");
    train_cmd->add_option("--batch", rc.batch, "mini-batch size");
    train_cmd->add_option("--epochs", rc.max_epochs, "epoch budget");
    train_cmd->add_option("--patience", rc.patience, "early-stopping patience");
    train_cmd->add_flag("--grid", grid, "grid search instead of a single config");
    train_cmd->add_option("--grid-layers", grid_layers, "comma list, e.g. 1,2,3");
    train_cmd->add_option("--grid-units", grid_units, "comma list, e.g. 8,16,32,64,128");
    train_cmd->add_option("--grid-dropout", grid_dropout, "comma list, e.g. 0.5,0");

    CLI::App* evaluate = app.add_subcommand("evaluate", "hit ratios and accuracy tables");
    std::string eval_in, eval_checkpoint, eval_split = "test";
    add_common(evaluate);
    evaluate->add_option("--in", eval_in, "ingest output directory")->required();
    evaluate->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
    evaluate->add_option("--split", eval_split, "train|validation|test");
    evaluate->add_option("--thetas", rc.thetas, "accuracy grid lo:hi:step");

    CLI::App* backtest_cmd = app.add_subcommand("backtest", "TBP / EWP / per-asset backtests");
    std::string bt_in, bt_checkpoint, bt_theta_plus;
    add_common(backtest_cmd);
    backtest_cmd->add_option("--in", bt_in, "ingest output directory")->required();
    backtest_cmd->add_option("--checkpoint", bt_checkpoint, "model checkpoint")->required();
    backtest_cmd->add_option("--theta-plus", bt_theta_plus,
                             "long threshold (or 'all' for the whole universe)");
    backtest_cmd->add_option("--theta-minus", rc.theta_minus, "short threshold");
    backtest_cmd->add_option("--mode", rc.mode, "long|short|longshort");

    CLI::App* frontier_cmd = app.add_subcommand("frontier", "risk-return frontier over thetas");
    std::string fr_in, fr_checkpoint;
    add_common(frontier_cmd);
    frontier_cmd->add_option("--in", fr_in, "ingest output directory")->required();
    frontier_cmd->add_option("--checkpoint", fr_checkpoint, "model checkpoint")->required();
    frontier_cmd->add_option("--thetas", rc.thetas, "grid lo:hi:step");
    frontier_cmd->add_option("--window", rc.window, "trailing months per point");
    frontier_cmd->add_option("--mode", rc.mode, "long|short|longshort");

    CLI::App* manage = app.add_subcommand("manage", "theta for a target risk or return");
    std::string mg_in, mg_checkpoint;
    std::optional<double> target_risk, target_return;
    add_common(manage);
    manage->add_option("--in", mg_in, "ingest output directory")->required();
    manage->add_option("--checkpoint", mg_checkpoint, "model checkpoint")->required();
    manage->add_option("--thetas", rc.thetas, "grid lo:hi:step");
    manage->add_option("--window", rc.window, "trailing months per point");
    manage->add_option("--mode", rc.mode, "long|short|longshort");
    manage->add_option("--target-risk", target_risk, "monthly risk (SD) target");
    manage->add_option("--target-return", target_return, "monthly return target");

    try {
        app.parse(argc, argv);

        // Config file values sit between defaults and explicit flags: start
        // from the file, then re-apply every flag the user actually passed.
        if (!config_path.empty()) {
            RunConfig flags_rc = rc;
            RunConfig file_rc;
            apply_config_file(file_rc, config_path);
            rc = file_rc;
            CLI::App* sub = app.get_subcommands().front();
            auto keep_if_set = [&](const std::string& flag, auto member) {
                const CLI::Option* opt = sub->get_option_no_throw(flag);
                if (opt != nullptr && opt->count() > 0) rc.*member = flags_rc.*member;
            };
            keep_if_set("--seed", &RunConfig::seed);
            keep_if_set("--out", &RunConfig::out_dir);
            keep_if_set("--data-dir", &RunConfig::data_dir);
            keep_if_set("--agg", &RunConfig::aggregation);
            keep_if_set("--train-frac", &RunConfig::train_frac);
            keep_if_set("--val-frac", &RunConfig::val_frac);
            keep_if_set("--cell", &RunConfig::cell);
            keep_if_set("--layers", &RunConfig::layers);
            keep_if_set("--hidden", &RunConfig::hidden);
            keep_if_set("--dropout", &RunConfig::dropout);
            keep_if_set("--seq-len", &RunConfig::seq_len);
            keep_if_set("--lr", &RunConfig::lr);
            keep_if_set("--batch", &RunConfig::batch);
            keep_if_set("--epochs", &RunConfig::max_epochs);
            keep_if_set("--patience", &RunConfig::patience);
            keep_if_set("--theta-minus", &RunConfig::theta_minus);
            keep_if_set("--mode", &RunConfig::mode);
            keep_if_set("--thetas", &RunConfig::thetas);
            // --window binds the split/input window on ingest and the
            // trailing frontier window on frontier/manage.
            if (sub->get_name() == "ingest") {
                keep_if_set("--window", &RunConfig::seq_len);
            } else if (sub->get_name() == "frontier" || sub->get_name() == "manage") {
                keep_if_set("--window", &RunConfig::window);
            }
        }

        if (app.got_subcommand(fixture)) return cmd_fixture(rc, fixture_assets, fixture_months);
        if (app.got_subcommand(ingest)) return cmd_ingest(rc);
        if (app.got_subcommand(train_cmd)) {
            return cmd_train(rc, train_in, grid, grid_layers, grid_units, grid_dropout);
        }
        if (app.got_subcommand(evaluate)) {
            return cmd_evaluate(rc, eval_in, eval_checkpoint, eval_split);
        }
        if (app.got_subcommand(backtest_cmd)) {
            return cmd_backtest(rc, bt_in, bt_checkpoint, bt_theta_plus);
        }
        if (app.got_subcommand(frontier_cmd)) return cmd_frontier(rc, fr_in, fr_checkpoint);
        if (app.got_subcommand(manage)) {
            return cmd_manage(rc, mg_in, mg_checkpoint, target_risk, target_return);
        }
        return kExitInput;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    } catch (const tbp::TargetOutOfRange& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUnreachable;
    } catch (const tbp::NonBracketable& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUnreachable;
    } catch (const tbp::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const tbp::RankDeficient& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const tbp::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}
