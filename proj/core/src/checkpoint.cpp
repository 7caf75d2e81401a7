// SPDX-License-Identifier: Apache-2.0
#include "linefix/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are little-endian; big-endian hosts need swaps");

namespace linefix {

namespace {

void write_u64(std::ostream& out, uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint64_t read_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

nlohmann::json meta_to_json(const CheckpointMeta& m) {
    nlohmann::json j;
    j["format_version"] = m.format_version;
    j["hyper"] = m.hyper.to_json();
    j["src_vocab_fingerprint"] = m.src_vocab_fingerprint;
    j["trg_vocab_fingerprint"] = m.trg_vocab_fingerprint;
    j["src_vocab_size"] = m.src_vocab_size;
    j["trg_vocab_size"] = m.trg_vocab_size;
    j["max_positions"] = m.max_positions;
    j["epochs_trained"] = m.epochs_trained;
    j["validation_perplexity"] = m.validation_perplexity;
    return j;
}

CheckpointMeta meta_from_json(const nlohmann::json& j) {
    CheckpointMeta m;
    m.format_version = j.at("format_version").get<uint32_t>();
    if (m.format_version != kCheckpointFormatVersion)
        throw std::runtime_error("unsupported checkpoint format version " +
                                 std::to_string(m.format_version));
    m.hyper = HyperParams::from_json(j.at("hyper"));
    m.src_vocab_fingerprint = j.at("src_vocab_fingerprint").get<std::string>();
    m.trg_vocab_fingerprint = j.at("trg_vocab_fingerprint").get<std::string>();
    m.src_vocab_size = j.at("src_vocab_size").get<size_t>();
    m.trg_vocab_size = j.at("trg_vocab_size").get<size_t>();
    m.max_positions = j.at("max_positions").get<size_t>();
    m.epochs_trained = j.at("epochs_trained").get<uint64_t>();
    m.validation_perplexity = j.at("validation_perplexity").get<double>();
    return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));

    std::string header = meta_to_json(ckpt.meta).dump();
    write_u64(out, header.size());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    write_u64(out, ckpt.weights.size());
    for (const auto& [name, shape, data] : ckpt.weights) {
        write_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        out.put('f');  // dtype tag: float32
        write_u64(out, shape.size());
        for (size_t d : shape) write_u64(out, d);
        write_u64(out, data.size());
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);

    Checkpoint ckpt;
    uint64_t header_len = read_u64(in);
    std::string header(header_len, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header_len));
    ckpt.meta = meta_from_json(nlohmann::json::parse(header));

    uint64_t n_blobs = read_u64(in);
    for (uint64_t b = 0; b < n_blobs; ++b) {
        uint64_t name_len = read_u64(in);
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        int dtype = in.get();
        if (dtype != 'f') throw std::runtime_error("unknown dtype tag in " + path);
        uint64_t ndim = read_u64(in);
        std::vector<size_t> shape(ndim);
        for (auto& d : shape) d = read_u64(in);
        uint64_t count = read_u64(in);
        std::vector<float> data(count);
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(count * sizeof(float)));
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
        ckpt.weights.emplace_back(std::move(name), std::move(shape),
                                  std::move(data));
    }
    return ckpt;
}

Checkpoint checkpoint_from_network(const Network<float>& net,
                                   const std::string& src_fp,
                                   const std::string& trg_fp,
                                   uint64_t epochs_trained,
                                   double validation_perplexity) {
    Checkpoint ckpt;
    ckpt.meta.hyper = net.hyper();
    ckpt.meta.src_vocab_fingerprint = src_fp;
    ckpt.meta.trg_vocab_fingerprint = trg_fp;
    ckpt.meta.src_vocab_size = net.src_vocab();
    ckpt.meta.trg_vocab_size = net.trg_vocab();
    ckpt.meta.max_positions = net.max_positions();
    ckpt.meta.epochs_trained = epochs_trained;
    ckpt.meta.validation_perplexity = validation_perplexity;
    for (const auto& [name, p] : net.params())
        ckpt.weights.emplace_back(name, p->val.shape, p->val.v);
    return ckpt;
}

Network<float> network_from_checkpoint(const Checkpoint& ckpt) {
    Network<float> net(ckpt.meta.hyper, ckpt.meta.src_vocab_size,
                       ckpt.meta.trg_vocab_size, ckpt.meta.max_positions);
    auto& params = net.params();
    if (params.size() != ckpt.weights.size())
        throw std::runtime_error("checkpoint weight count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& [name, shape, data] = ckpt.weights[i];
        if (params[i].first != name)
            throw std::runtime_error("checkpoint weight order mismatch at " + name);
        if (params[i].second->val.shape != shape ||
            params[i].second->val.v.size() != data.size())
            throw std::runtime_error("checkpoint shape mismatch for " + name);
        params[i].second->val.v = data;
    }
    return net;
}

}  // namespace linefix
