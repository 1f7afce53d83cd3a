#pragma once

// Name-based decoder dispatch shared by the CLI and the experiment harness.
//
//   bs-f, bs-b      directional beam search
//   bibs            alternating bidirectional beam search
//   gsn             ordered coordinate resampling (needs a seed)
//   rerank-max      pooled two-direction rerank, max-probability rule
//   rerank-sum      pooled two-direction rerank, summed log-prob rule
//   oracle          exhaustive enumeration (budget-guarded)
//   unknown-length:<inner>   width-range wrapper around any of the above

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bibs/beam_search.hpp"
#include "bibs/bibs_search.hpp"
#include "bibs/fill.hpp"
#include "bibs/gsn.hpp"
#include "bibs/oracle.hpp"
#include "bibs/rerank.hpp"
#include "bibs/unknown_length.hpp"

namespace bibs {

inline const std::vector<std::string>& known_algorithms() {
    static const std::vector<std::string> names{"bs-f",       "bs-b",   "bibs",  "gsn",
                                                "rerank-max", "rerank-sum", "oracle"};
    return names;
}

inline DecodeResult decode_with_algorithm(const std::string& name, const FillProblem& problem,
                                          std::uint64_t seed) {
    if (name == "bs-f") return beam_search(problem, Direction::Forward);
    if (name == "bs-b") return beam_search(problem, Direction::Backward);
    if (name == "bibs") return bibs_decode(problem);
    if (name == "gsn") return gsn_ordered(problem, seed);
    if (name == "rerank-max") return rerank_f_plus_b(problem, RerankRule::MaxProb);
    if (name == "rerank-sum") return rerank_f_plus_b(problem, RerankRule::SumLogProb);
    if (name == "oracle") return exact_fill_oracle(problem);
    const std::string prefix = "unknown-length:";
    if (name.rfind(prefix, 0) == 0) {
        const std::string inner = name.substr(prefix.size());
        if (inner.rfind(prefix, 0) == 0) throw std::invalid_argument("unknown-length cannot nest");
        return unknown_length_decode(problem, [&inner, seed](const FillProblem& sub) {
            return decode_with_algorithm(inner, sub, seed);
        });
    }
    throw std::invalid_argument("unknown algorithm: " + name);
}

}  // namespace bibs
