#pragma once

#include <string>

#include "remnet/model.hpp"

namespace remnet {

// Checkpoint container, format version 1, all fields little-endian:
//
//   magic "RNCK" | u32 version | u64 trainable-parameter count
//   i32 epoch | f64 validation loss
//   u32 descriptor length | descriptor bytes (architecture config JSON)
//   u32 entry count, then per entry:
//     u32 name length | name bytes | u32 rank | i32 extents... | f32 values...
//
// Entries hold every trainable parameter plus each batch-norm layer's
// running_mean, running_var, and stat_count (as a single-element tensor).
// Round trips are bit-exact: values are written as raw 32-bit patterns.

struct CheckpointMeta {
    int version = 0;
    long param_count = 0;
    int epoch = 0;
    double val_loss = 0.0;
    std::string descriptor;  // architecture config JSON
};

void save_checkpoint(const std::string& path, Model& model, int epoch, double val_loss);

// Header only; cheap.
CheckpointMeta read_checkpoint_meta(const std::string& path);

// Fill an existing model's parameters and batch-norm state from `path`.
// Every entry must match a tensor of the same name and shape.
CheckpointMeta load_checkpoint_into(const std::string& path, Model& model);

struct LoadedCheckpoint {
    Model model;
    CheckpointMeta meta;
};

// Rebuild the model from the embedded descriptor, then restore its state.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace remnet
