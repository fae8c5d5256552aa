// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0
//
// Versioned textual checkpoints. Parameter values are written as C hex
// float literals, so save/load round-trips are bit-exact. The layout is
//
//   lenred-checkpoint v1
//   kind <backbone|adaptive>
//   config <one-line JSON: encoder dims, and cp_hidden_dim when adaptive>
//   vocab <word count>
//   <one word per line, ids in order; [CLS] then [UNK] first>
//   param <name> <rank> <dim...>
//   <space-separated hex doubles, one leading-axis row per line>
//   ...
//   end

#pragma once

#include <cstdint>
#include <string>

#include "lenred/contribution.hpp"
#include "lenred/encoder.hpp"

namespace lenred {

void save_backbone_checkpoint(const std::string& path, const EncoderModel& model);
EncoderModel load_backbone_checkpoint(const std::string& path);

void save_adaptive_checkpoint(const std::string& path, const AdaptiveModel& model);
AdaptiveModel load_adaptive_checkpoint(const std::string& path);

// Loads only the encoder part of either checkpoint kind.
EncoderModel load_encoder_from_checkpoint(const std::string& path);

std::uint64_t file_content_hash(const std::string& path);  // MissingArtifact if absent

}  // namespace lenred
