#pragma once

// Text checkpoints. UTF-8, line oriented, decimal floats at 17 significant
// digits so load(save(m)) reproduces predictions bit-exactly. Layout:
//
//   tbp-checkpoint v1
//   cell lstm
//   input_dim 5
//   layers 1
//   hidden 36
//   dropout 0.5
//   seq_len 36
//   learning_rate 0.001
//   batch_size 20
//   max_epochs 200
//   patience 10
//   seed 42
//   epochs_run 57
//   best_epoch 41
//   best_val_loss 1.2345000000000001e-05
//   params 6157
//   <one parameter per line, canonical enumeration order>
//   end

#include <filesystem>
#include <iosfwd>

#include "tbp/rnn.hpp"

namespace tbp {

inline constexpr int kCheckpointSchemaVersion = 1;

struct TrainingMeta {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

struct Checkpoint {
    RnnModel model;
    TrainingMeta meta;
};

void write_checkpoint(std::ostream& out, const RnnModel& model, const TrainingMeta& meta);
Checkpoint read_checkpoint(std::istream& in);  // throws SchemaMismatch / CorruptFile

void save_checkpoint(const RnnModel& model, const TrainingMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace tbp
