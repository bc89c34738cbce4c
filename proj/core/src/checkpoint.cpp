#include "tbp/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tbp/errors.hpp"
#include "tbp/io.hpp"

namespace tbp {

namespace {

std::string next_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CorruptFile("checkpoint truncated");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

// Expects "<key> <value>" and returns the value.
std::string expect_field(std::istream& in, const std::string& key) {
    const std::string line = next_line(in);
    if (line.size() <= key.size() + 1 || line.compare(0, key.size(), key) != 0 ||
        line[key.size()] != ' ') {
        throw CorruptFile("checkpoint: expected '" + key + " ...', got '" + line + "'");
    }
    return line.substr(key.size() + 1);
}

std::size_t parse_size(const std::string& token) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw CorruptFile("checkpoint: bad integer '" + token + "'");
    }
    return value;
}

std::uint64_t parse_u64(const std::string& token) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw CorruptFile("checkpoint: bad seed '" + token + "'");
    }
    return value;
}

double parse_value(const std::string& token) {
    try {
        return parse_double(token);
    } catch (const Error&) {
        throw CorruptFile("checkpoint: bad number '" + token + "'");
    }
}

}  // namespace

void write_checkpoint(std::ostream& out, const RnnModel& model, const TrainingMeta& meta) {
    out << "tbp-checkpoint v" << kCheckpointSchemaVersion << '\n';
    out << "cell " << to_string(model.config.cell) << '\n';
    out << "input_dim " << model.input_dim << '\n';
    out << "layers " << model.config.layer_count() << '\n';
    out << "hidden";
    for (std::size_t n : model.config.hidden) out << ' ' << n;
    out << '\n';
    out << "dropout " << format_double17(model.config.dropout_rate) << '\n';
    out << "seq_len " << model.config.seq_len << '\n';
    out << "learning_rate " << format_double17(model.config.learning_rate) << '\n';
    out << "batch_size " << model.config.batch_size << '\n';
    out << "max_epochs " << model.config.max_epochs << '\n';
    out << "patience " << model.config.patience << '\n';
    out << "seed " << model.config.seed << '\n';
    out << "epochs_run " << meta.epochs_run << '\n';
    out << "best_epoch " << meta.best_epoch << '\n';
    out << "best_val_loss " << format_double17(meta.best_val_loss) << '\n';
    out << "params " << parameter_count(model) << '\n';
    for_each_param(model, [&out](std::span<const double> p) {
        for (double v : p) out << format_double17(v) << '\n';
    });
    out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
    const std::string magic = next_line(in);
    const std::string prefix = "tbp-checkpoint v";
    if (magic.compare(0, prefix.size(), prefix) != 0) {
        throw CorruptFile("not a checkpoint file");
    }
    const std::size_t version = parse_size(magic.substr(prefix.size()));
    if (version != static_cast<std::size_t>(kCheckpointSchemaVersion)) {
        throw SchemaMismatch("checkpoint schema v" + std::to_string(version) +
                             ", this build reads v" + std::to_string(kCheckpointSchemaVersion));
    }

    NetworkConfig config;
    config.cell = cell_type_from_string(expect_field(in, "cell"));
    const std::size_t input_dim = parse_size(expect_field(in, "input_dim"));
    const std::size_t layers = parse_size(expect_field(in, "layers"));
    {
        std::istringstream hs(expect_field(in, "hidden"));
        config.hidden.clear();
        std::string tok;
        while (hs >> tok) config.hidden.push_back(parse_size(tok));
        if (config.hidden.size() != layers) {
            throw CorruptFile("checkpoint: hidden widths disagree with layer count");
        }
    }
    config.dropout_rate = parse_value(expect_field(in, "dropout"));
    config.seq_len = parse_size(expect_field(in, "seq_len"));
    config.learning_rate = parse_value(expect_field(in, "learning_rate"));
    config.batch_size = parse_size(expect_field(in, "batch_size"));
    config.max_epochs = parse_size(expect_field(in, "max_epochs"));
    config.patience = parse_size(expect_field(in, "patience"));
    config.seed = parse_u64(expect_field(in, "seed"));

    TrainingMeta meta;
    meta.epochs_run = parse_size(expect_field(in, "epochs_run"));
    meta.best_epoch = parse_size(expect_field(in, "best_epoch"));
    meta.best_val_loss = parse_value(expect_field(in, "best_val_loss"));

    const std::size_t declared = parse_size(expect_field(in, "params"));

    Checkpoint ckpt;
    ckpt.meta = meta;
    ckpt.model = make_model(config, input_dim);  // shapes; values overwritten below
    if (parameter_count(ckpt.model) != declared) {
        throw CorruptFile("checkpoint: parameter count " + std::to_string(declared) +
                          " does not match topology");
    }
    for_each_param(ckpt.model, [&in](std::span<double> p) {
        for (double& v : p) v = parse_value(next_line(in));
    });
    if (next_line(in) != "end") throw CorruptFile("checkpoint: missing end marker");
    return ckpt;
}

void save_checkpoint(const RnnModel& model, const TrainingMeta& meta,
                     const std::filesystem::path& path) {
    std::ostringstream out;
    write_checkpoint(out, model, meta);
    atomic_write_file(path, out.str());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint: " + path.string());
    return read_checkpoint(in);
}

}  // namespace tbp
