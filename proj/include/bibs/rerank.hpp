#pragma once

// Pooled rerank baselines: run beam search independently in both directions,
// pool the 2B completions, score every pooled completion under both models
// by full replay, and rank by either the max of the two probabilities or the
// sum of the two log-probabilities.

#include <stdexcept>
#include <vector>

#include "bibs/beam_search.hpp"
#include "bibs/fill.hpp"

namespace bibs {

enum class RerankRule { MaxProb, SumLogProb };

inline DecodeResult rerank_f_plus_b(const FillProblem& p, RerankRule rule) {
    validate_problem(p);
    StepCounter steps;
    if (p.instance->blank_width == 0) return clamped_result(p, steps);

    StepCounter side_steps;
    DirectionalCache fwd_cache = blank_beam_search(p, Direction::Forward, side_steps);
    DirectionalCache bwd_cache = blank_beam_search(p, Direction::Backward, side_steps);
    steps.update += side_steps.update;
    steps.replay += side_steps.replay;

    std::vector<TokenSequence> pool = cache_tokens_l2r(fwd_cache);
    for (auto& ids : cache_tokens_l2r(bwd_cache)) pool.push_back(std::move(ids));
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

    DecodeResult result;
    for (const auto& ids : pool) {
        const TokenSequence sentence = assemble(*p.instance, ids);
        const double fwd_joint = sentence_joint_logp(*p.forward, sentence, steps);
        const double bwd_joint = sentence_joint_logp(*p.backward, sentence, steps);
        ScoredCompletion sc;
        sc.blank = ids;
        sc.joint_logp = fwd_joint;
        sc.objective = rule == RerankRule::MaxProb ? std::max(fwd_joint, bwd_joint)
                                                   : fwd_joint + bwd_joint;
        result.completions.push_back(std::move(sc));
    }
    std::stable_sort(result.completions.begin(), result.completions.end(),
                     [](const ScoredCompletion& a, const ScoredCompletion& b) {
                         return beam_order_less(a.objective, a.blank, b.objective, b.blank);
                     });
    result.diagnostics.update_steps = steps.update;
    result.diagnostics.replay_steps = steps.replay;
    return result;
}

}  // namespace bibs
