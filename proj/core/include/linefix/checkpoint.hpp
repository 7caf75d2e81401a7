// SPDX-License-Identifier: Apache-2.0
//
// Checkpoint container: a JSON header (format version, hyper-parameters,
// vocabulary fingerprints, training metadata) followed by named float32
// weight blobs, little-endian row-major. Load-then-save is byte-identical.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "linefix/model.hpp"

namespace linefix {

inline constexpr uint32_t kCheckpointFormatVersion = 1;
inline constexpr char kCheckpointMagic[8] = {'L', 'F', 'C', 'K', 'P', 'T', '0', '1'};

struct CheckpointMeta {
    uint32_t format_version = kCheckpointFormatVersion;
    HyperParams hyper;
    std::string src_vocab_fingerprint;
    std::string trg_vocab_fingerprint;
    size_t src_vocab_size = 0;
    size_t trg_vocab_size = 0;
    size_t max_positions = 0;
    uint64_t epochs_trained = 0;
    double validation_perplexity = 0.0;
};

struct Checkpoint {
    CheckpointMeta meta;
    // (name, shape, row-major float32 data), in network registry order
    std::vector<std::tuple<std::string, std::vector<size_t>, std::vector<float>>>
        weights;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

Checkpoint checkpoint_from_network(const Network<float>& net,
                                   const std::string& src_fp,
                                   const std::string& trg_fp,
                                   uint64_t epochs_trained,
                                   double validation_perplexity);

/// Rebuilds the network and installs the stored weights. Shape mismatches
/// throw (the checkpoint does not match its own hyper-parameters).
Network<float> network_from_checkpoint(const Checkpoint& ckpt);

}  // namespace linefix
