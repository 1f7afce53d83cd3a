#pragma once

// Directional beam search over a clamped blank, plus open-ended generation.
// The engine returns beams with their per-position conditional log-probs and
// per-position recurrent states cached, which is exactly the shape the
// alternating bidirectional passes consume.

#include <stdexcept>
#include <vector>

#include "bibs/beam.hpp"
#include "bibs/fill.hpp"
#include "bibs/scorer.hpp"

namespace bibs {

// A beam over the blank region with everything later passes need cached:
// tokens and conditionals in consumption order, and states[i] = recurrent
// state before consuming ids[i] (so states.size() == ids.size() + 1 and
// states.back() is the state after the whole region so far).
struct CachedBeam {
    Beam beam;
    std::vector<RecurrentState> states;
    double cum_with_context = 0.0;  // lead-context log-prob plus beam.total_logp
};

// Per-direction score cache for one blank: the conditional table an
// alternating pass reads from its fixed opposite-direction beams.
struct DirectionalCache {
    Direction dir = Direction::Forward;
    double context_logp = 0.0;  // lead-context log-prob shared by all beams
    std::vector<CachedBeam> beams;
};

inline BeamSet to_beam_set(const DirectionalCache& cache) {
    BeamSet set;
    set.direction = cache.dir;
    for (const auto& cb : cache.beams) set.beams.push_back(cb.beam);
    set.sort();
    return set;
}

// Tokens of every cached beam, normalized to left-to-right order.
inline std::vector<TokenSequence> cache_tokens_l2r(const DirectionalCache& cache) {
    std::vector<TokenSequence> out;
    out.reserve(cache.beams.size());
    for (const auto& cb : cache.beams) {
        TokenSequence ids = cb.beam.ids;
        if (cache.dir == Direction::Backward) ids.assign(cb.beam.ids.rbegin(), cb.beam.ids.rend());
        out.push_back(std::move(ids));
    }
    return out;
}

// Standard top-B beam search over the w blank positions in one direction.
// Context tokens are clamped: the lead context is replayed verbatim before
// expansion and candidates never include it. Expansion advances are counted
// as update steps, context replay as replay steps.
inline DirectionalCache blank_beam_search(const FillProblem& p, Direction dir, StepCounter& steps,
                                          const ContextState* lead_in = nullptr) {
    validate_problem(p);
    const Scorer& scorer = p.scorer(dir);
    const ContextView view = context_view(*p.instance, dir);
    const ContextState lead = lead_in ? *lead_in : replay_context(scorer, view.lead, steps);
    const int w = p.instance->blank_width;
    const int b = p.config.beam_width;
    const std::vector<TokenId> tokens = blank_candidates(scorer.vocab(), p.config.allow_sentinels_in_blank);

    DirectionalCache cache;
    cache.dir = dir;
    cache.context_logp = lead.logp;

    CachedBeam root;
    root.states.push_back(lead.state);
    root.cum_with_context = lead.logp;
    std::vector<CachedBeam> live{std::move(root)};

    for (int pos = 0; pos < w; ++pos) {
        std::vector<std::vector<double>> dists;
        dists.reserve(live.size());
        for (const auto& cb : live) dists.push_back(scorer.log_distribution(cb.states.back()));

        std::vector<Candidate> expansion;
        expansion.reserve(live.size() * tokens.size());
        for (size_t i = 0; i < live.size(); ++i) {
            for (TokenId y : tokens) {
                Candidate c;
                c.score = live[i].cum_with_context + dists[i][static_cast<size_t>(y)];
                c.ids = live[i].beam.ids;
                c.ids.push_back(y);
                c.parent = static_cast<int>(i);
                c.token = y;
                expansion.push_back(std::move(c));
            }
        }
        std::vector<Candidate> kept = select_top(std::move(expansion), b);

        std::vector<CachedBeam> next;
        next.reserve(kept.size());
        for (const Candidate& c : kept) {
            const CachedBeam& parent = live[static_cast<size_t>(c.parent)];
            CachedBeam nb;
            nb.beam = parent.beam;
            nb.beam.push(c.token, dists[static_cast<size_t>(c.parent)][static_cast<size_t>(c.token)]);
            nb.states = parent.states;
            nb.states.push_back(scorer.advance(parent.states.back(), c.token));
            ++steps.update;
            nb.cum_with_context = c.score;
            next.push_back(std::move(nb));
        }
        live = std::move(next);
    }
    cache.beams = std::move(live);
    return cache;
}

// Public beam-search decoder. Joint scores cover the full sentence: each
// surviving beam is continued through the trailing clamped context, and the
// final ranking is by true forward joint log-prob of the assembled sentence.
inline DecodeResult beam_search(const FillProblem& p, Direction dir) {
    validate_problem(p);
    StepCounter steps;
    if (p.instance->blank_width == 0) return clamped_result(p, steps);

    DirectionalCache cache = blank_beam_search(p, dir, steps);
    const ContextView view = context_view(*p.instance, dir);
    ContextState fwd_lead;
    if (dir == Direction::Backward) fwd_lead = replay_context(*p.forward, p.instance->prefix, steps);

    DecodeResult result;
    for (const auto& cb : cache.beams) {
        double own_joint = cb.cum_with_context +
                           continue_through(p.scorer(dir), cb.states.back(), view.trail, steps);
        ScoredCompletion sc;
        sc.blank = cb.beam.ids;
        if (dir == Direction::Backward) sc.blank.assign(cb.beam.ids.rbegin(), cb.beam.ids.rend());
        sc.objective = own_joint;
        sc.joint_logp = dir == Direction::Forward
                            ? own_joint
                            : forward_joint_of_completion(p, fwd_lead, sc.blank, steps);
        result.completions.push_back(std::move(sc));
    }
    sort_completions_by_joint(result.completions);
    result.diagnostics.update_steps = steps.update;
    result.diagnostics.replay_steps = steps.replay;
    return result;
}

// Open-ended top-B generation from the lead context alone, for calibrating
// unknown blank widths. A beam ends when it selects EOS or hits `cap`
// tokens; the top-1 across ended beams is returned.
inline TokenSequence open_generate(const FillProblem& p, Direction dir, int cap, StepCounter& steps) {
    validate_problem(p);
    const Scorer& scorer = p.scorer(dir);
    const ContextView view = context_view(*p.instance, dir);
    const ContextState lead = replay_context(scorer, view.lead, steps);
    const int b = p.config.beam_width;

    std::vector<TokenId> tokens = blank_candidates(scorer.vocab(), false);
    tokens.push_back(Vocabulary::kEos);

    CachedBeam root;
    root.states.push_back(lead.state);
    root.cum_with_context = lead.logp;
    std::vector<CachedBeam> live{std::move(root)};
    std::vector<std::pair<double, TokenSequence>> done;

    for (int pos = 0; pos < cap && !live.empty(); ++pos) {
        std::vector<std::vector<double>> dists;
        dists.reserve(live.size());
        for (const auto& cb : live) dists.push_back(scorer.log_distribution(cb.states.back()));

        std::vector<Candidate> expansion;
        for (size_t i = 0; i < live.size(); ++i) {
            for (TokenId y : tokens) {
                Candidate c;
                c.score = live[i].cum_with_context + dists[i][static_cast<size_t>(y)];
                c.ids = live[i].beam.ids;
                c.ids.push_back(y);
                c.parent = static_cast<int>(i);
                c.token = y;
                expansion.push_back(std::move(c));
            }
        }
        std::vector<Candidate> kept = select_top(std::move(expansion), b);

        std::vector<CachedBeam> next;
        for (const Candidate& c : kept) {
            const CachedBeam& parent = live[static_cast<size_t>(c.parent)];
            if (c.token == Vocabulary::kEos) {
                done.emplace_back(c.score, parent.beam.ids);
                continue;
            }
            CachedBeam nb;
            nb.beam = parent.beam;
            nb.beam.push(c.token, dists[static_cast<size_t>(c.parent)][static_cast<size_t>(c.token)]);
            nb.states = parent.states;
            nb.states.push_back(scorer.advance(parent.states.back(), c.token));
            ++steps.update;
            nb.cum_with_context = c.score;
            next.push_back(std::move(nb));
        }
        live = std::move(next);
    }
    for (const auto& cb : live) done.emplace_back(cb.cum_with_context, cb.beam.ids);

    if (done.empty()) return {};
    const std::pair<double, TokenSequence>* best = &done[0];
    for (const auto& d : done) {
        if (beam_order_less(d.first, d.second, best->first, best->second)) best = &d;
    }
    return best->second;
}

}  // namespace bibs
