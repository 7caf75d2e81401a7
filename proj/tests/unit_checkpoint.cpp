// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "linefix/checkpoint.hpp"

using namespace linefix;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}
}  // namespace

TEST_CASE("checkpoint: load-then-save is byte-identical") {
    auto hp = HyperParams::tiny(404);
    Network<float> net(hp, 31, 33, 64);
    auto ckpt = checkpoint_from_network(net, "fp-src", "fp-trg", 7, 3.25);

    auto dir = fs::temp_directory_path() / "linefix_ckpt_test";
    fs::create_directories(dir);
    auto p1 = dir / "a.ckpt";
    auto p2 = dir / "b.ckpt";
    save_checkpoint(p1.string(), ckpt);
    auto loaded = load_checkpoint(p1.string());
    save_checkpoint(p2.string(), loaded);
    CHECK(slurp(p1) == slurp(p2));

    CHECK(loaded.meta.hyper == hp);
    CHECK(loaded.meta.src_vocab_fingerprint == "fp-src");
    CHECK(loaded.meta.epochs_trained == 7);
    CHECK(loaded.meta.validation_perplexity == doctest::Approx(3.25));

    auto net2 = network_from_checkpoint(loaded);
    REQUIRE(net2.params().size() == net.params().size());
    for (size_t i = 0; i < net.params().size(); ++i) {
        CHECK(net2.params()[i].first == net.params()[i].first);
        CHECK(net2.params()[i].second->val.v == net.params()[i].second->val.v);
    }
    fs::remove_all(dir);
}

TEST_CASE("checkpoint: corrupt and truncated inputs are rejected") {
    auto dir = fs::temp_directory_path() / "linefix_ckpt_bad";
    fs::create_directories(dir);
    auto bad = dir / "bad.ckpt";
    {
        std::ofstream out(bad, std::ios::binary);
        out << "NOT A CHECKPOINT";
    }
    CHECK_THROWS(load_checkpoint(bad.string()));

    auto hp = HyperParams::tiny(1);
    Network<float> net(hp, 9, 9, 16);
    auto good = dir / "good.ckpt";
    save_checkpoint(good.string(), checkpoint_from_network(net, "a", "b", 0, 0));
    auto full = slurp(good);
    {
        std::ofstream out(dir / "trunc.ckpt", std::ios::binary);
        out.write(full.data(), static_cast<std::streamsize>(full.size() / 2));
    }
    CHECK_THROWS(load_checkpoint((dir / "trunc.ckpt").string()));
    fs::remove_all(dir);
}
