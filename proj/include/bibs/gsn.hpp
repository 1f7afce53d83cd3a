#pragma once

// Coordinate resampling over the blank in alternating sweep order. Each
// chain revisits the blank positions left-to-right then right-to-left once
// per meta-iteration, redrawing the token at each position from the
// renormalized product of the forward and backward conditionals given all
// other current tokens. B independent chains run from a shared beam-search
// initialization and the final chains are reranked by true forward joint.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "bibs/beam_search.hpp"
#include "bibs/fill.hpp"
#include "bibs/scorer.hpp"

namespace bibs {

// Draws an index from the distribution obtained by restricting a full-vocab
// log distribution to `candidates` and renormalizing.
inline TokenId sample_restricted(const std::vector<double>& log_dist,
                                 const std::vector<TokenId>& candidates, std::mt19937_64& rng) {
    if (candidates.empty()) throw std::invalid_argument("sample_restricted: no candidates");
    double hi = kLogZero;
    for (TokenId t : candidates) hi = std::max(hi, log_dist[static_cast<size_t>(t)]);
    std::vector<double> weights(candidates.size());
    double total = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        weights[i] = std::exp(log_dist[static_cast<size_t>(candidates[i])] - hi);
        total += weights[i];
    }
    std::uniform_real_distribution<double> unif(0.0, total);
    double u = unif(rng);
    for (size_t i = 0; i < candidates.size(); ++i) {
        u -= weights[i];
        if (u <= 0.0) return candidates[i];
    }
    return candidates.back();
}

inline DecodeResult gsn_ordered(const FillProblem& p, std::uint64_t seed) {
    validate_problem(p);
    StepCounter steps;
    if (p.instance->blank_width == 0) return clamped_result(p, steps);

    const int w = p.instance->blank_width;
    const int b = p.config.beam_width;
    const Scorer& fwd = *p.forward;
    const Scorer& bwd = *p.backward;
    const std::vector<TokenId> candidates = blank_candidates(fwd.vocab(), p.config.allow_sentinels_in_blank);

    const ContextState fwd_lead = replay_context(fwd, p.instance->prefix, steps);
    const ContextView bwd_view = context_view(*p.instance, Direction::Backward);
    const ContextState bwd_lead = replay_context(bwd, bwd_view.lead, steps);

    // Shared initialization: top-1 directional beam search, replay-accounted.
    StepCounter init_steps;
    DirectionalCache init =
        blank_beam_search(p, p.config.init_direction, init_steps,
                          p.config.init_direction == Direction::Forward ? &fwd_lead : &bwd_lead);
    steps.absorb_as_replay(init_steps);
    TokenSequence init_tokens = cache_tokens_l2r(init).at(0);

    std::vector<TokenSequence> chains(static_cast<size_t>(b), init_tokens);
    std::vector<std::mt19937_64> rngs;
    for (int c = 0; c < b; ++c) {
        std::seed_seq seq{seed, static_cast<std::uint64_t>(c)};
        rngs.emplace_back(seq);
    }

    Diagnostics diag;
    auto best_joint = [&]() {
        double hi = kLogZero;
        for (const auto& ch : chains) {
            hi = std::max(hi, forward_joint_of_completion(p, fwd_lead, ch, steps));
        }
        return hi;
    };
    diag.trace.push_back(best_joint());

    for (int m = 1; m <= p.config.meta_iterations; ++m) {
        for (int c = 0; c < b; ++c) {
            TokenSequence& toks = chains[static_cast<size_t>(c)];
            std::mt19937_64& rng = rngs[static_cast<size_t>(c)];

            // left-to-right sweep: backward states from the right are fixed
            // during the sweep because positions right of the cursor keep
            // their current values.
            std::vector<RecurrentState> bwd_at(static_cast<size_t>(w));
            {
                RecurrentState st = bwd_lead.state;
                for (int pos = w - 1; pos >= 0; --pos) {
                    bwd_at[static_cast<size_t>(pos)] = st;
                    if (pos > 0) {
                        st = bwd.advance(st, toks[static_cast<size_t>(pos)]);
                        ++steps.update;
                    }
                }
            }
            {
                RecurrentState st = fwd_lead.state;
                for (int pos = 0; pos < w; ++pos) {
                    std::vector<double> combined =
                        bidir_combine(fwd.log_distribution(st),
                                      bwd.log_distribution(bwd_at[static_cast<size_t>(pos)]));
                    toks[static_cast<size_t>(pos)] = sample_restricted(combined, candidates, rng);
                    st = fwd.advance(st, toks[static_cast<size_t>(pos)]);
                    ++steps.update;
                }
            }

            // right-to-left sweep, mirrored.
            std::vector<RecurrentState> fwd_at(static_cast<size_t>(w));
            {
                RecurrentState st = fwd_lead.state;
                for (int pos = 0; pos < w; ++pos) {
                    fwd_at[static_cast<size_t>(pos)] = st;
                    if (pos < w - 1) {
                        st = fwd.advance(st, toks[static_cast<size_t>(pos)]);
                        ++steps.update;
                    }
                }
            }
            {
                RecurrentState st = bwd_lead.state;
                for (int pos = w - 1; pos >= 0; --pos) {
                    std::vector<double> combined =
                        bidir_combine(fwd.log_distribution(fwd_at[static_cast<size_t>(pos)]),
                                      bwd.log_distribution(st));
                    toks[static_cast<size_t>(pos)] = sample_restricted(combined, candidates, rng);
                    st = bwd.advance(st, toks[static_cast<size_t>(pos)]);
                    ++steps.update;
                }
            }
        }
        diag.meta_iterations = m;
        diag.trace.push_back(best_joint());
    }

    DecodeResult result;
    for (const auto& ch : chains) {
        ScoredCompletion sc;
        sc.blank = ch;
        sc.joint_logp = forward_joint_of_completion(p, fwd_lead, ch, steps);
        sc.objective = sc.joint_logp;
        result.completions.push_back(std::move(sc));
    }
    sort_completions_by_joint(result.completions);
    result.completions.erase(
        std::unique(result.completions.begin(), result.completions.end(),
                    [](const ScoredCompletion& a, const ScoredCompletion& b) { return a.blank == b.blank; }),
        result.completions.end());
    diag.update_steps = steps.update;
    diag.replay_steps = steps.replay;
    result.diagnostics = diag;
    return result;
}

}  // namespace bibs
