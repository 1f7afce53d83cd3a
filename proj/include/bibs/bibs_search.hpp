#pragma once

// Bidirectional beam search: alternating directional beam passes that
// greedily maximize an approximation of the full joint probability of the
// assembled sentence, holding the opposite direction's beams fixed.
//
// A pass in direction d walks the blank positions in d's consumption order.
// At each position it considers every connection
//
//     (live beam) x (vocabulary token) x (fixed opposite beam)
//
// and scores each triple as
//
//     [live marginal so far] + [live conditional of the token]
//   + [opposite conditional of the token] + [opposite marginal of the rest]
//
// where the opposite-direction terms come from the cached per-position
// conditionals and states of the fixed beams, so each pass costs exactly one
// scorer advance per kept beam per position: 2*B*M*w advances for M rounds
// over a width-w blank. The kept beam stores only its own-direction prefix;
// the opposite beam of a winning triple influences scoring only.

#include <cassert>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bibs/beam.hpp"
#include "bibs/beam_search.hpp"
#include "bibs/fill.hpp"
#include "bibs/scorer.hpp"

namespace bibs {

// Snapshot of one beam update, for step-level verification. Token sequences
// are in the owning side's consumption order (live and kept: pass direction;
// opposite: the opposite direction).
struct BibsStepRecord {
    Direction dir = Direction::Forward;
    int meta_iteration = 0;  // 1-based; 0 for a standalone pass
    int position = 0;        // 0-based, in pass consumption order
    std::vector<TokenSequence> live;
    std::vector<TokenSequence> opposite;
    std::vector<std::pair<TokenSequence, double>> kept;  // selection order
};

using BibsObserver = std::function<void(const BibsStepRecord&)>;

// One full pass in `dir` against the fixed opposite-direction cache.
// Candidate scores accumulate left operand first:
//   live.cum_with_context + fresh[y] + opposite_dist[y] + opposite_rest
// with opposite_rest built progressively in the opposite consumption order.
inline DirectionalCache bibs_pass(const FillProblem& p, const DirectionalCache& fixed_opposite,
                                  Direction dir, StepCounter& steps,
                                  const BibsObserver& observer = {}, int meta_iteration = 0,
                                  const ContextState* lead_in = nullptr) {
    validate_problem(p);
    if (fixed_opposite.dir != opposite(dir)) {
        throw std::invalid_argument("bibs_pass: opposite cache has wrong direction");
    }
    const int w = p.instance->blank_width;
    for (const auto& cb : fixed_opposite.beams) {
        if (static_cast<int>(cb.beam.ids.size()) != w ||
            static_cast<int>(cb.states.size()) != w + 1) {
            throw std::invalid_argument("bibs_pass: blank width mismatch in opposite cache");
        }
    }
    if (fixed_opposite.beams.empty()) throw std::invalid_argument("bibs_pass: empty opposite cache");

    const Scorer& scorer = p.scorer(dir);
    const Scorer& opp_scorer = p.scorer(opposite(dir));
    const ContextView view = context_view(*p.instance, dir);
    const ContextState lead = lead_in ? *lead_in : replay_context(scorer, view.lead, steps);
    const int b = p.config.beam_width;
    const std::vector<TokenId> tokens = blank_candidates(scorer.vocab(), p.config.allow_sentinels_in_blank);

    // opposite_rest[j][q] = opposite context log-prob plus the first q cached
    // conditionals of opposite beam j, accumulated in its consumption order.
    const size_t n_opp = fixed_opposite.beams.size();
    std::vector<std::vector<double>> opp_rest(n_opp);
    for (size_t j = 0; j < n_opp; ++j) {
        const auto& theta = fixed_opposite.beams[j].beam.dir_logp;
        opp_rest[j].resize(static_cast<size_t>(w) + 1);
        opp_rest[j][0] = fixed_opposite.context_logp;
        for (int q = 0; q < w; ++q) {
            opp_rest[j][static_cast<size_t>(q) + 1] =
                opp_rest[j][static_cast<size_t>(q)] + theta[static_cast<size_t>(q)];
        }
    }

    std::vector<TokenSequence> opposite_ids;
    if (observer) {
        for (const auto& cb : fixed_opposite.beams) opposite_ids.push_back(cb.beam.ids);
    }

    CachedBeam root;
    root.states.push_back(lead.state);
    root.cum_with_context = lead.logp;
    std::vector<CachedBeam> live{std::move(root)};

    for (int pos = 0; pos < w; ++pos) {
        std::vector<std::vector<double>> fresh;
        fresh.reserve(live.size());
        for (const auto& cb : live) fresh.push_back(scorer.log_distribution(cb.states.back()));

        // The opposite beam consumed w-1-pos tokens before reaching this
        // position from its own side.
        const int consumed = w - 1 - pos;
        std::vector<std::vector<double>> opp_dist(n_opp);
        for (size_t j = 0; j < n_opp; ++j) {
            opp_dist[j] = opp_scorer.log_distribution(
                fixed_opposite.beams[j].states[static_cast<size_t>(consumed)]);
        }

        std::vector<Candidate> expansion;
        expansion.reserve(live.size() * tokens.size() * n_opp);
        double best_score = kLogZero;
        for (size_t i = 0; i < live.size(); ++i) {
            for (TokenId y : tokens) {
                for (size_t j = 0; j < n_opp; ++j) {
                    Candidate c;
                    c.score = live[i].cum_with_context + fresh[i][static_cast<size_t>(y)] +
                              opp_dist[j][static_cast<size_t>(y)] +
                              opp_rest[j][static_cast<size_t>(consumed)];
                    c.ids = live[i].beam.ids;
                    c.ids.push_back(y);
                    c.parent = static_cast<int>(i);
                    c.token = y;
                    c.aux = static_cast<int>(j);
                    if (c.score > best_score) best_score = c.score;
                    expansion.push_back(std::move(c));
                }
            }
        }
        std::vector<Candidate> kept = select_top(std::move(expansion), b);
        // every update is the exact argmax/top-B of its expansion set
        assert(!kept.empty() && kept[0].score == best_score);
        (void)best_score;

        if (observer) {
            BibsStepRecord rec;
            rec.dir = dir;
            rec.meta_iteration = meta_iteration;
            rec.position = pos;
            for (const auto& cb : live) rec.live.push_back(cb.beam.ids);
            rec.opposite = opposite_ids;
            for (const auto& c : kept) rec.kept.emplace_back(c.ids, c.score);
            observer(rec);
        }

        std::vector<CachedBeam> next;
        next.reserve(kept.size());
        for (const Candidate& c : kept) {
            const CachedBeam& parent = live[static_cast<size_t>(c.parent)];
            CachedBeam nb;
            nb.beam = parent.beam;
            nb.beam.push(c.token, fresh[static_cast<size_t>(c.parent)][static_cast<size_t>(c.token)]);
            nb.states = parent.states;
            nb.states.push_back(scorer.advance(parent.states.back(), c.token));
            ++steps.update;
            nb.cum_with_context = parent.cum_with_context +
                                  fresh[static_cast<size_t>(c.parent)][static_cast<size_t>(c.token)];
            next.push_back(std::move(nb));
        }
        live = std::move(next);
    }

    DirectionalCache out;
    out.dir = dir;
    out.context_logp = lead.logp;
    out.beams = std::move(live);
    return out;
}

// Full decoder: initialize with standard beam search in the configured
// direction, then alternate passes (each meta-iteration is one pass in each
// direction, starting opposite the initialization) until the beam contents
// stop changing or the iteration budget runs out. The final ranking is by
// true forward joint log-prob of the assembled sentence; the trace records
// that joint for the best current hypothesis at each stage (initialization
// first), the sentence a caller would evaluate if decoding stopped there.
inline DecodeResult bibs_decode(const FillProblem& p, const BibsObserver& observer = {}) {
    validate_problem(p);
    StepCounter steps;
    if (p.instance->blank_width == 0) return clamped_result(p, steps);

    const ContextState fwd_lead = replay_context(*p.forward, p.instance->prefix, steps);
    const ContextView bwd_view = context_view(*p.instance, Direction::Backward);
    const ContextState bwd_lead = replay_context(*p.backward, bwd_view.lead, steps);
    const ContextState& lead_of = p.config.init_direction == Direction::Forward ? fwd_lead : bwd_lead;

    // Initialization is accounted as replay: only pass updates are blank steps.
    StepCounter init_steps;
    DirectionalCache beams = blank_beam_search(p, p.config.init_direction, init_steps, &lead_of);
    steps.absorb_as_replay(init_steps);

    auto best_joint = [&](const DirectionalCache& cache) {
        double hi = kLogZero;
        for (const auto& ids : cache_tokens_l2r(cache)) {
            hi = std::max(hi, forward_joint_of_completion(p, fwd_lead, ids, steps));
        }
        return hi;
    };

    Diagnostics diag;
    diag.trace.push_back(best_joint(beams));

    std::vector<TokenSequence> prev = cache_tokens_l2r(beams);
    const Direction first = opposite(p.config.init_direction);
    for (int m = 1; m <= p.config.meta_iterations; ++m) {
        const ContextState& lead1 = first == Direction::Forward ? fwd_lead : bwd_lead;
        const ContextState& lead2 = first == Direction::Forward ? bwd_lead : fwd_lead;
        DirectionalCache half = bibs_pass(p, beams, first, steps, observer, m, &lead1);
        beams = bibs_pass(p, half, opposite(first), steps, observer, m, &lead2);
        diag.meta_iterations = m;
        diag.trace.push_back(best_joint(beams));

        std::vector<TokenSequence> now = cache_tokens_l2r(beams);
        if (p.config.convergence == Convergence::StopOnUnchangedBeams && now == prev) break;
        prev = std::move(now);
    }

    DecodeResult result;
    for (const auto& ids : cache_tokens_l2r(beams)) {
        ScoredCompletion sc;
        sc.blank = ids;
        sc.joint_logp = forward_joint_of_completion(p, fwd_lead, ids, steps);
        sc.objective = sc.joint_logp;
        result.completions.push_back(std::move(sc));
    }
    sort_completions_by_joint(result.completions);
    diag.update_steps = steps.update;
    diag.replay_steps = steps.replay;
    result.diagnostics = diag;
    return result;
}

}  // namespace bibs
