#pragma once

// Seeded synthetic sentence generator. The grammar carries agreement in both
// temporal directions so that reconstructing a middle span genuinely needs
// both contexts: each noun licenses two adjectives (so an adjective narrows
// its following noun), each subject noun takes exactly one verb, each verb
// selects its object's class, and each preposition is determined by the
// place noun that follows it. One-sided decoding must guess at its far
// boundary; combining both contexts pins most of the middle. Used by the
// benchmark command and the self-contained experiment runs.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bibs {

namespace detail {

struct NounClass {
    std::vector<std::string> nouns;
    std::vector<std::string> adjectives;  // noun i licenses adjectives i and i+1 (mod 4)
    std::vector<std::string> verbs;       // subject noun i always takes verb i
};

inline const NounClass& syn_animals() {
    static const NounClass c{
        {"bird", "cat", "dog", "horse"},
        {"furry", "wild", "hungry", "sleepy"},
        {"watches", "follows", "chases", "guards"},
    };
    return c;
}

inline const NounClass& syn_things() {
    static const NounClass c{
        {"stone", "lamp", "boat", "chair"},
        {"wooden", "rusty", "shiny", "broken"},
        {"faces", "holds", "touches", "blocks"},
    };
    return c;
}

struct PlaceClass {
    std::string preposition;
    std::vector<std::string> nouns;
    std::vector<std::string> adjectives;
};

inline const std::vector<PlaceClass>& syn_places() {
    static const std::vector<PlaceClass> p{
        {"in", {"garden", "field", "barn"}, {"green", "sunny"}},
        {"near", {"river", "bridge", "fence"}, {"wide", "muddy"}},
        {"under", {"tree", "roof", "tower"}, {"tall", "dark"}},
    };
    return p;
}

inline const std::vector<std::string>& syn_endings() {
    static const std::vector<std::string> v{"at dusk", "at dawn", "all day", "all night"};
    return v;
}

}  // namespace detail

// One sentence:
//   the [ADJ(n1)] N1 V(n1) the [ADJ(n2)] N2 PREP(n3) the [ADJ(place)] N3 [ENDING]
inline std::string generate_synthetic_sentence(std::mt19937_64& rng) {
    using namespace detail;
    auto chance = [&rng](double prob) {
        std::uniform_real_distribution<double> d(0.0, 1.0);
        return d(rng) < prob;
    };

    const NounClass& subject_class = chance(0.5) ? syn_animals() : syn_things();
    const size_t n1 = rng() % subject_class.nouns.size();
    const std::string& verb = subject_class.verbs[n1];
    // verbs with even index take an animal object, odd a thing object
    const NounClass& object_class = n1 % 2 == 0 ? syn_animals() : syn_things();
    const size_t n2 = rng() % object_class.nouns.size();
    const PlaceClass& place = syn_places()[rng() % syn_places().size()];

    auto noun_phrase = [&](const NounClass& c, size_t noun) {
        std::string np = "the";
        if (chance(0.8)) {
            const size_t adj = (noun + (chance(0.5) ? 0 : 1)) % c.adjectives.size();
            np += " " + c.adjectives[adj];
        }
        np += " " + c.nouns[noun];
        return np;
    };

    std::string s = noun_phrase(subject_class, n1);
    s += " " + verb;
    s += " " + noun_phrase(object_class, n2);
    s += " " + place.preposition + " the";
    if (chance(0.5)) s += " " + place.adjectives[rng() % place.adjectives.size()];
    s += " " + place.nouns[rng() % place.nouns.size()];
    if (chance(0.4)) s += " " + syn_endings()[rng() % syn_endings().size()];
    return s;
}

inline std::vector<std::string> generate_synthetic_corpus(std::uint64_t seed, int count) {
    std::mt19937_64 rng(seed);
    std::vector<std::string> lines;
    lines.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) lines.push_back(generate_synthetic_sentence(rng));
    return lines;
}

}  // namespace bibs
