#include <doctest.h>

#include <cstdio>
#include <map>

#include "bibs/vocab.hpp"

using namespace bibs;

TEST_CASE("tokenize lowercases, strips terminal punctuation, splits on whitespace") {
    auto toks = tokenize("A close up of Flowers.");
    CHECK(toks == std::vector<std::string>{"a", "close", "up", "of", "flowers"});
    CHECK(tokenize("  hello   world!! ") == std::vector<std::string>{"hello", "world"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("...") == std::vector<std::string>{});
}

TEST_CASE("build_vocabulary orders by frequency then lexicographically") {
    Vocabulary v = build_vocabulary({"a", "b", "a"}, 1);
    CHECK(v.size() == 5);
    CHECK(v.token(Vocabulary::kBos) == "<s>");
    CHECK(v.token(Vocabulary::kEos) == "</s>");
    CHECK(v.token(Vocabulary::kUnk) == "<unk>");
    CHECK(v.token(3) == "a");  // frequency 2 before frequency 1
    CHECK(v.token(4) == "b");
}

TEST_CASE("build_vocabulary applies min_count and maps dropped tokens to UNK") {
    Vocabulary v = build_vocabulary({"a", "b", "a"}, 2);
    CHECK(v.size() == 4);
    CHECK(v.id("a") == 3);
    CHECK(v.id("b") == Vocabulary::kUnk);
    CHECK(v.id("never-seen") == Vocabulary::kUnk);
}

TEST_CASE("build_vocabulary rejects empty input") {
    CHECK_THROWS_WITH_AS(build_vocabulary({}, 1), "empty corpus", std::runtime_error);
    CHECK_THROWS_AS(build_vocabulary({"a"}, 5), std::runtime_error);
    CHECK_THROWS_AS(build_vocabulary({"a"}, 0), std::invalid_argument);
}

TEST_CASE("vocabulary sizes match an independent frequency recount") {
    // 1000 tokens with known counts; the oracle is a plain recount pass.
    std::vector<std::string> stream;
    std::map<std::string, int> expected;
    for (int i = 0; i < 1000; ++i) {
        std::string tok = "w" + std::to_string(i % 37);
        stream.push_back(tok);
        ++expected[tok];
    }
    int keep3 = 0;
    for (auto& [tok, c] : expected) {
        if (c >= 3) ++keep3;
    }
    Vocabulary v1 = build_vocabulary(stream, 1);
    Vocabulary v3 = build_vocabulary(stream, 3);
    CHECK(v1.size() == static_cast<TokenId>(expected.size()) + 3);
    CHECK(v3.size() == keep3 + 3);
}

TEST_CASE("token to id round-trips for every token") {
    Vocabulary v = build_vocabulary({"cat", "dog", "cat", "fish"}, 1);
    for (TokenId id = 0; id < v.size(); ++id) {
        CHECK(v.id(v.token(id)) == id);
    }
}

TEST_CASE("vocabulary JSON round-trip") {
    Vocabulary v = build_vocabulary({"x", "y", "x", "z"}, 1);
    std::string path = "vocab_roundtrip_test.json";
    v.save(path);
    Vocabulary loaded = Vocabulary::load(path);
    CHECK(loaded.size() == v.size());
    for (TokenId id = 0; id < v.size(); ++id) CHECK(loaded.token(id) == v.token(id));
    std::remove(path.c_str());
}
