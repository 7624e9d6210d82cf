// Copyright 2026 The colora Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "colora/model.hpp"

namespace colora {

// Checkpoint file layout (all integers little-endian):
//   magic "CLR1"
//   u32 tensor entry count
//   per entry: u16 name length, UTF-8 name, u8 dtype (0=f32, 1=u8, 2=i64),
//              u8 ndim, ndim x u32 dims, raw little-endian payload
//   u32 flag count
//   per flag: u16 name length, UTF-8 name, u8 value
//
// The reserved "__arch__" u8 entry holds a text description of the layer
// stack. Flags carry the freeze mask (one entry per parameter name), adapter
// order flags ("<layer>#order") and merge counts ("<layer>#merges").

/// Writes the graph bit-exactly. Throws IoError on write failure or when a
/// merge count exceeds the u8 flag range.
void save_checkpoint(const ModelGraph& g, const std::string& path);

/// Rebuilds a graph from a checkpoint. Throws IoError on magic mismatch,
/// truncation, duplicate names, or malformed records.
ModelGraph load_checkpoint(const std::string& path);

/// Loads parameter tensors and flags into an existing graph with the same
/// layer structure; throws IoError on missing names or shape mismatch.
void load_checkpoint_into(const std::string& path, ModelGraph& g);

}  // namespace colora
