// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "linefix/common.hpp"
#include "linefix/vocab.hpp"

using namespace linefix;
namespace fs = std::filesystem;

TEST_CASE("vocab build: frequency order with lexicographic ties") {
    std::vector<std::vector<std::string>> corpus{{"a", "a", "b"}};
    auto v = Vocabulary::build(corpus, 1, 100);
    REQUIRE(v.size() == kReservedCount + 2);
    CHECK(v.token_at(kReservedCount) == "a");
    CHECK(v.token_at(kReservedCount + 1) == "b");

    auto v2 = Vocabulary::build(corpus, 2, 100);
    CHECK(v2.size() == kReservedCount + 1);
    CHECK(v2.token_at(kReservedCount) == "a");

    // tie broken lexicographically
    auto v3 = Vocabulary::build({{"b", "a"}}, 1, 100);
    CHECK(v3.token_at(kReservedCount) == "a");
    CHECK(v3.token_at(kReservedCount + 1) == "b");

    // max_size truncation
    auto v4 = Vocabulary::build({{"a", "a", "b", "c"}}, 1, kReservedCount + 1);
    CHECK(v4.size() == kReservedCount + 1);
    CHECK(v4.index_of("b") == kUnkIndex);
}

TEST_CASE("vocab reserved layout is fixed") {
    auto v = Vocabulary::build({{"x"}}, 1, 100);
    CHECK(v.token_at(kPadIndex) == "<PAD>");
    CHECK(v.token_at(kStartIndex) == "<START>");
    CHECK(v.token_at(kEndIndex) == "<END>");
    CHECK(v.token_at(kUnkIndex) == "<UNK>");
    CHECK(v.token_at(kCamelIndex) == kCamelToken);
    CHECK(v.token_at(kStringIndex) == kStringToken);
    CHECK(v.token_at(kNumberIndex) == kNumberToken);
    // placeholder tokens in corpora do not create duplicates
    auto v2 = Vocabulary::build({{"<CAMEL>", "x", "<STRING>"}}, 1, 100);
    CHECK(v2.size() == kReservedCount + 1);
}

TEST_CASE("vocab encode: unknowns map to <UNK>, no framing added") {
    auto v = Vocabulary::build({{"a", "b"}}, 1, 100);
    CHECK(v.encode({"a"}) == std::vector<int>{v.index_of("a")});
    CHECK(v.encode({"zzz"}) == std::vector<int>{kUnkIndex});
    CHECK(v.encode({}).empty());
}

TEST_CASE("vocab decode(encode()) replaces only OOV tokens") {
    auto v = Vocabulary::build({{"alpha", "beta", "gamma"}}, 1, 100);
    std::vector<std::string> seq{"alpha", "missing", "gamma", "beta"};
    auto round = v.decode(v.encode(seq));
    CHECK(round ==
          std::vector<std::string>{"alpha", "<UNK>", "gamma", "beta"});
}

TEST_CASE("vocab build is order-independent (same fingerprint)") {
    std::vector<std::vector<std::string>> corpus;
    Rng rng(42);
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> seq;
        for (int j = 0; j < 10; ++j)
            seq.push_back("tok" + std::to_string(rng.uniform_int(0, 30)));
        corpus.push_back(seq);
    }
    auto shuffled = corpus;
    std::reverse(shuffled.begin(), shuffled.end());
    auto a = Vocabulary::build(corpus, 2, 1000);
    auto b = Vocabulary::build(shuffled, 2, 1000);
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(a.tokens() == b.tokens());
}

TEST_CASE("oov_rate arithmetic") {
    auto v = Vocabulary::build({{"a", "b"}}, 1, 100);
    CHECK(v.oov_rate({{"a", "b", "a"}}) == doctest::Approx(0.0));
    std::vector<std::string> fifty(49, "a");
    fifty.push_back("unknown_token");
    CHECK(v.oov_rate({fifty}) == doctest::Approx(0.02));
    CHECK_THROWS_AS(v.oov_rate({}), std::invalid_argument);
    CHECK_THROWS_AS(v.oov_rate({{}}), std::invalid_argument);
}

TEST_CASE("vocab save/load round trip preserves fingerprint") {
    auto v = Vocabulary::build({{"foo", "bar", "foo"}}, 1, 100);
    auto path = (fs::temp_directory_path() / "linefix_vocab_test.vocab").string();
    v.save(path);
    auto loaded = Vocabulary::load(path);
    CHECK(loaded.tokens() == v.tokens());
    CHECK(loaded.fingerprint() == v.fingerprint());
    fs::remove(path);
    fs::remove(path + ".meta");
}
