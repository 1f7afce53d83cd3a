#include <doctest.h>

#include <cstdio>
#include <random>

#include "bibs/sequence.hpp"
#include "bibs/vocab.hpp"

using namespace bibs;

namespace {

Vocabulary caption_vocab() {
    std::vector<std::string> stream =
        tokenize("a close up of flowers and plants inside of a bowl");
    return build_vocabulary(stream, 1);
}

}  // namespace

TEST_CASE("make_blank reproduces the 11-token caption split at r=0.5") {
    Vocabulary v = caption_vocab();
    TokenSequence sent = v.encode(tokenize("A close up of flowers and plants inside of a bowl"));
    REQUIRE(sent.size() == 11);
    BlankedInstance inst = make_blank(sent, BlankSpec{0.5});
    CHECK(inst.blank_width == 6);
    CHECK(v.decode(inst.prefix) == std::vector<std::string>{"a", "close"});
    CHECK(v.decode(inst.gold) ==
          std::vector<std::string>{"up", "of", "flowers", "and", "plants", "inside"});
    CHECK(v.decode(inst.suffix) == std::vector<std::string>{"of", "a", "bowl"});
}

TEST_CASE("make_blank width follows round-half-up and centered prefix") {
    TokenSequence sent(10);
    for (size_t i = 0; i < sent.size(); ++i) sent[i] = static_cast<TokenId>(3 + i % 2);
    BlankedInstance inst = make_blank(sent, BlankSpec{0.25});
    CHECK(inst.blank_width == 3);  // round_half_up(2.5)
    CHECK(inst.prefix.size() == 3);
    CHECK(inst.suffix.size() == 4);
}

TEST_CASE("make_blank with r=0 removes nothing") {
    TokenSequence sent{3, 4, 5};
    BlankedInstance inst = make_blank(sent, BlankSpec{0.0});
    CHECK(inst.blank_width == 0);
    CHECK(inst.gold.empty());
    CHECK(assemble(inst, {}) == sent);
}

TEST_CASE("make_blank with r=1 blanks the whole sentence") {
    TokenSequence sent{3, 4, 5};
    BlankedInstance inst = make_blank(sent, BlankSpec{1.0});
    CHECK(inst.blank_width == 3);
    CHECK(inst.prefix.empty());
    CHECK(inst.suffix.empty());
}

TEST_CASE("make_blank rejects bad inputs") {
    CHECK_THROWS_AS(make_blank({}, BlankSpec{0.5}), std::invalid_argument);
    CHECK_THROWS_AS(make_blank({3}, BlankSpec{-0.1}), std::invalid_argument);
    CHECK_THROWS_AS(make_blank({3}, BlankSpec{1.5}), std::invalid_argument);
}

TEST_CASE("reassembly reproduces the original sentence for random blanks") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> len_dist(1, 25);
    std::uniform_real_distribution<double> ratio_dist(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        TokenSequence sent(static_cast<size_t>(len_dist(rng)));
        for (auto& t : sent) t = static_cast<TokenId>(3 + rng() % 11);
        const double r = ratio_dist(rng);
        BlankedInstance a = make_blank(sent, BlankSpec{r});
        BlankedInstance b = make_blank(sent, BlankSpec{r});
        CHECK(original_sentence(a) == sent);
        CHECK(a.prefix == b.prefix);  // deterministic
        CHECK(a.gold == b.gold);
        CHECK(static_cast<int>(a.prefix.size() + a.gold.size() + a.suffix.size()) ==
              static_cast<int>(sent.size()));
    }
}

TEST_CASE("instances with sentinel ids in gold are rejected") {
    BlankedInstance inst;
    inst.gold = {Vocabulary::kUnk};
    inst.blank_width = 1;
    inst.has_gold = true;
    CHECK_THROWS_AS(validate_instance(inst), std::invalid_argument);
}

TEST_CASE("dataset JSONL round-trip, including blind instances") {
    Vocabulary v = caption_vocab();
    TokenSequence sent = v.encode(tokenize("a close up of flowers and plants inside of a bowl"));
    BlankedInstance inst = make_blank(sent, BlankSpec{0.5}, "cap-1");

    BlankedInstance blind = inst;
    blind.id = "cap-1-blind";
    blind.gold.clear();
    blind.has_gold = false;

    std::string path = "dataset_roundtrip_test.jsonl";
    save_dataset(path, {inst, blind}, v);
    auto loaded = load_dataset(path, v);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].id == "cap-1");
    CHECK(loaded[0].gold == inst.gold);
    CHECK(loaded[0].prefix == inst.prefix);
    CHECK(loaded[1].has_gold == false);
    CHECK(loaded[1].known_width == true);
    CHECK(loaded[1].blank_width == 6);
    std::remove(path.c_str());
}
