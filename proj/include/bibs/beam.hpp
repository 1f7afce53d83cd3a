#pragma once

// Beams and beam sets. A beam is a partial token sequence with the cached
// per-position conditional log-probabilities under its owning direction.
// Ordering is a total order everywhere in the library: higher score first,
// exact score ties broken by lexicographically smaller id sequence.

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bibs/logprob.hpp"
#include "bibs/vocab.hpp"

namespace bibs {

enum class Direction { Forward, Backward };

inline Direction opposite(Direction d) {
    return d == Direction::Forward ? Direction::Backward : Direction::Forward;
}

inline const char* to_string(Direction d) {
    return d == Direction::Forward ? "forward" : "backward";
}

enum class Convergence { FixedIterations, StopOnUnchangedBeams };

struct DecodeConfig {
    int beam_width = 5;
    int meta_iterations = 4;
    Direction init_direction = Direction::Backward;
    bool allow_sentinels_in_blank = false;
    Convergence convergence = Convergence::StopOnUnchangedBeams;
};

inline void validate_config(const DecodeConfig& c) {
    if (c.beam_width < 1) throw std::invalid_argument("beam_width must be >= 1");
    if (c.meta_iterations < 1) throw std::invalid_argument("meta_iterations must be >= 1");
}

struct Beam {
    TokenSequence ids;             // tokens in the owning direction's consumption order
    std::vector<double> dir_logp;  // conditional log-prob of each token when consumed
    double total_logp = 0.0;       // running sum of dir_logp

    void push(TokenId id, double logp) {
        ids.push_back(id);
        dir_logp.push_back(logp);
        total_logp += logp;
    }
};

// score desc, then lexicographically smaller ids
inline bool beam_order_less(double score_a, const TokenSequence& ids_a, double score_b,
                            const TokenSequence& ids_b) {
    if (score_a != score_b) return score_a > score_b;
    return std::lexicographical_compare(ids_a.begin(), ids_a.end(), ids_b.begin(), ids_b.end());
}

struct BeamSet {
    Direction direction = Direction::Forward;
    std::vector<Beam> beams;

    void sort() {
        std::stable_sort(beams.begin(), beams.end(), [](const Beam& a, const Beam& b) {
            return beam_order_less(a.total_logp, a.ids, b.total_logp, b.ids);
        });
    }
};

// One candidate in a top-B selection. parent / token / aux route back to the
// caller's expansion (live beam index, chosen token, associated opposite beam).
struct Candidate {
    double score = kLogZero;
    TokenSequence ids;
    int parent = 0;
    TokenId token = 0;
    int aux = 0;
};

// Deduplicate by id sequence (best score wins; first comer wins exact ties),
// then keep the top `limit` under the shared beam order.
inline std::vector<Candidate> select_top(std::vector<Candidate> candidates, int limit) {
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.ids != b.ids) return a.ids < b.ids;
        return a.score > b.score;
    });
    std::vector<Candidate> unique;
    for (auto& c : candidates) {
        if (unique.empty() || unique.back().ids != c.ids) unique.push_back(std::move(c));
    }
    std::stable_sort(unique.begin(), unique.end(), [](const Candidate& a, const Candidate& b) {
        return beam_order_less(a.score, a.ids, b.score, b.ids);
    });
    if (static_cast<int>(unique.size()) > limit) unique.resize(static_cast<size_t>(limit));
    return unique;
}

}  // namespace bibs
