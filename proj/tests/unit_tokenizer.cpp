// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <stdexcept>

#include "linefix/common.hpp"
#include "linefix/tokenizer.hpp"

using namespace linefix;

namespace {
std::vector<std::string> toks(const std::string& line, Language lang,
                              bool abstract = false) {
    return tokenize(line, profile_for(lang), abstract).tokens;
}
}  // namespace

TEST_CASE("tokenize: statement splitting") {
    CHECK(toks("int sum=0;", Language::java) ==
          std::vector<std::string>{"int", "sum", "=", "0", ";"});
    CHECK(toks("mLocale", Language::java) ==
          std::vector<std::string>{"m", "<CAMEL>", "Locale"});
    CHECK(toks("get_Number", Language::java) ==
          std::vector<std::string>{"get", "_", "Number"});
    CHECK(toks("utf8Decode", Language::java) ==
          std::vector<std::string>{"utf", "<CAMEL>", "8", "<CAMEL>", "Decode"});
    CHECK(toks("XMLReader", Language::java) ==
          std::vector<std::string>{"XML", "<CAMEL>", "Reader"});
}

TEST_CASE("tokenize: abstraction of literals") {
    auto seq = tokenize("x = 42;", profile_for(Language::java), true);
    CHECK(seq.tokens == std::vector<std::string>{"x", "=", "<NUMBER>", ";"});
    REQUIRE(seq.abstraction_table.size() == 1);
    CHECK(seq.abstraction_table[0].kind == AbstractionKind::number_literal);
    CHECK(seq.abstraction_table[0].literal == "42");

    // 0 and 1 stay literal
    CHECK(toks("f(0, 1, 2)", Language::java, true) ==
          std::vector<std::string>{"f", "(", "0", ",", "1", ",", "<NUMBER>", ")"});

    auto s2 = tokenize("s = \"hi there\";", profile_for(Language::java), true);
    CHECK(s2.tokens == std::vector<std::string>{"s", "=", "<STRING>", ";"});
    REQUIRE(s2.abstraction_table.size() == 1);
    CHECK(s2.abstraction_table[0].literal == "\"hi there\"");

    // digits inside identifiers are fragments, not literals
    CHECK(toks("utf8Decode(x)", Language::java, true) ==
          std::vector<std::string>{"utf", "<CAMEL>", "8", "<CAMEL>", "Decode", "(",
                                   "x", ")"});
}

TEST_CASE("tokenize: placeholder conservation invariant") {
    auto seq = tokenize("f(\"a\", 'b', 37, 0x1F, 1)", profile_for(Language::java),
                        true);
    size_t placeholders = 0;
    for (const auto& t : seq.tokens)
        if (t == kStringToken || t == kNumberToken) ++placeholders;
    CHECK(placeholders == seq.abstraction_table.size());
    CHECK(placeholders == 4);  // "a", 'b', 37, 0x1F; the 1 stays literal
}

TEST_CASE("tokenize: camel marker placement invariant") {
    for (const char* line :
         {"aB cD", "XMLHttpRequest x9y _a b_", "Foo8Bar9Baz", "a_1_b"}) {
        auto seq = tokenize(line, profile_for(Language::java));
        REQUIRE(!seq.tokens.empty());
        CHECK(seq.tokens.front() != kCamelToken);
        CHECK(seq.tokens.back() != kCamelToken);
        for (size_t i = 0; i + 1 < seq.tokens.size(); ++i)
            CHECK(!(seq.tokens[i] == kCamelToken && seq.tokens[i + 1] == kCamelToken));
        for (const auto& t : seq.tokens) {
            CHECK(!t.empty());
            for (char c : t) CHECK(!is_space(c));
        }
    }
}

TEST_CASE("tokenize: unterminated string sets the warning flag") {
    auto seq = tokenize("s = \"oops", profile_for(Language::java));
    CHECK(seq.unterminated_literal);
    seq = tokenize("s = \"ok\"", profile_for(Language::java));
    CHECK(!seq.unterminated_literal);
}

TEST_CASE("tokenize: python string prefixes attach to the literal") {
    auto seq = tokenize("x = f\"v={v}\"", profile_for(Language::python), true);
    CHECK(seq.tokens == std::vector<std::string>{"x", "=", "<STRING>"});
    REQUIRE(seq.abstraction_table.size() == 1);
    CHECK(seq.abstraction_table[0].literal == "f\"v={v}\"");
}

TEST_CASE("detokenize: inverse of marker rules") {
    TokenSequence seq;
    seq.tokens = {"m", "<CAMEL>", "Locale"};
    CHECK(detokenize(seq) == "mLocale");

    seq.tokens = {"int", "sum", "=", "0", ";"};
    CHECK(detokenize(seq) == "int sum = 0 ;");

    seq.tokens = {};
    CHECK(detokenize(seq) == "");

    seq.tokens = {"get", "_", "Number"};
    CHECK(detokenize(seq) == "get_Number");

    seq.tokens = {"f", "(", "_", ",", "x", ")"};
    CHECK(detokenize(seq) == "f ( _ , x )");
}

TEST_CASE("detokenize: illegal camel placement errors name the index") {
    TokenSequence seq;
    seq.tokens = {"<CAMEL>", "x"};
    CHECK_THROWS_WITH_AS(detokenize(seq),
                         doctest::Contains("index 0"), std::invalid_argument);
    seq.tokens = {"x", "<CAMEL>"};
    CHECK_THROWS_AS(detokenize(seq), std::invalid_argument);
    seq.tokens = {"x", "<CAMEL>", "<CAMEL>", "y"};
    CHECK_THROWS_AS(detokenize(seq), std::invalid_argument);
    seq.tokens = {"x", "<NUMBER>"};
    CHECK_THROWS_AS(detokenize(seq), std::invalid_argument);
}

TEST_CASE("round trip: whitespace-insensitive equality and token fixpoint") {
    const char* lines[] = {
        "int sum=0;",
        "if (foo.getBarBaz() != null) { return x_1 + 0x2F; }",
        "s = \"a string with  spaces\" + other;",
        "def snake_case_name(arg_one, arg2): return arg_one*2",
        "for (size_t i = 0; i < n; ++i) total += weights[i]*x[i];",
        "const fooBar = `template`; let z = a===b ? 1 : 0;",
        "x = 1.5e-3 + .5 + 2.;",
        "value|=getFlagMask(FLAG_A|FLAG_B);",
    };
    for (const char* raw : lines) {
        for (Language lang :
             {Language::java, Language::python, Language::cpp, Language::javascript}) {
            auto seq = tokenize(raw, profile_for(lang));
            auto rebuilt = detokenize(seq);
            CHECK_MESSAGE(strip_ws(rebuilt) == strip_ws(raw),
                          "lang=", to_string(lang), " line=", raw, " got=", rebuilt);
            auto again = tokenize(rebuilt, profile_for(lang));
            CHECK_MESSAGE(again.tokens == seq.tokens, "fixpoint failed: ", raw);
        }
    }
}

TEST_CASE("reconstruct: identity path without placeholders") {
    TokenSequence seq;
    seq.tokens = {"return", "x", ";"};
    auto got = reconstruct(seq, "return y ;", profile_for(Language::java));
    REQUIRE(got.size() == 1);
    CHECK(got[0] == "return x ;");
}

TEST_CASE("reconstruct: candidates from the buggy line, in textual order") {
    TokenSequence seq;
    seq.tokens = {"f", "(", "<NUMBER>", ")", ";"};
    auto got = reconstruct(seq, "f(3, 7);", profile_for(Language::java));
    REQUIRE(got.size() == 2);
    CHECK(got[0] == "f ( 3 ) ;");
    CHECK(got[1] == "f ( 7 ) ;");
}

TEST_CASE("reconstruct: no candidate literal discards the patch") {
    TokenSequence seq;
    seq.tokens = {"log", "(", "<STRING>", ")", ";"};
    CHECK(reconstruct(seq, "log(count);", profile_for(Language::java)).empty());
}

TEST_CASE("reconstruct: cartesian product cardinality and cap") {
    TokenSequence seq;
    seq.tokens = {"g", "(", "<NUMBER>", ",", "<NUMBER>", ")"};
    auto got = reconstruct(seq, "g(2, 5, 9)", profile_for(Language::java));
    CHECK(got.size() == 9);  // 3 x 3 combinations

    // 3 placeholders x 5 literals = 125 > 64: discarded
    TokenSequence big;
    big.tokens = {"<NUMBER>", "<NUMBER>", "<NUMBER>"};
    auto capped = reconstruct(big, "h(2,3,4,5,6)", profile_for(Language::java));
    CHECK(capped.empty());
}

TEST_CASE("strip_comments: line and block handling") {
    const auto& java = profile_for(Language::java);
    CHECK(*strip_comments("x = 1; // note", java) == "x = 1; ");
    CHECK(*strip_comments("x = \"a // b\";", java) == "x = \"a // b\";");
    CHECK(*strip_comments("x = 1; /* inline */ y = 2;", java) ==
          "x = 1;   y = 2;");
    CHECK(!strip_comments("x = 1; /* spans", java).has_value());
    CHECK(!strip_comments("end of block */ x = 1;", java).has_value());

    const auto& py = profile_for(Language::python);
    CHECK(*strip_comments("x = 1  # note", py) == "x = 1  ");
    CHECK(!strip_comments("s = \"\"\"doc\"\"\"", py).has_value());
}
