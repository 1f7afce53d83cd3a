#pragma once

// Shared decode-side plumbing: the fill problem, decode results, step
// accounting, and the context/joint replay helpers every decoder uses.
//
// Step accounting splits scorer advances into two buckets:
//   update  - advances that consume a blank-position token inside the
//             algorithm's own update loop
//   replay  - everything else: clamped-context replay, initialization,
//             and full-sentence scoring for final ranking and traces
// The split is what makes per-round step-count claims checkable in
// isolation from context overhead.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibs/beam.hpp"
#include "bibs/scorer.hpp"
#include "bibs/sequence.hpp"
#include "bibs/vocab.hpp"

namespace bibs {

struct StepCounter {
    std::uint64_t update = 0;
    std::uint64_t replay = 0;

    std::uint64_t total() const { return update + replay; }

    void absorb_as_replay(const StepCounter& other) { replay += other.total(); }
};

struct Diagnostics {
    int meta_iterations = 0;
    std::uint64_t update_steps = 0;
    std::uint64_t replay_steps = 0;
    // Mean full-sentence forward joint log-prob of the maintained hypotheses,
    // one entry per stage (initialization first for iterative decoders).
    std::vector<double> trace;

    std::uint64_t total_steps() const { return update_steps + replay_steps; }
};

struct ScoredCompletion {
    TokenSequence blank;   // left-to-right tokens for the blank region
    double objective = 0;  // the decoder's own ranking score
    double joint_logp = 0; // full-sentence forward joint log-prob
};

struct DecodeResult {
    std::vector<ScoredCompletion> completions;
    Diagnostics diagnostics;

    const ScoredCompletion& top() const {
        if (completions.empty()) throw std::runtime_error("decode produced no completions");
        return completions.front();
    }
};

struct FillProblem {
    const BlankedInstance* instance = nullptr;
    const Scorer* forward = nullptr;
    const Scorer* backward = nullptr;
    DecodeConfig config;

    const Scorer& scorer(Direction d) const {
        return d == Direction::Forward ? *forward : *backward;
    }
};

inline void validate_problem(const FillProblem& p) {
    if (!p.instance || !p.forward || !p.backward) {
        throw std::invalid_argument("fill problem: missing instance or scorer");
    }
    if (p.forward->direction() != Direction::Forward ||
        p.backward->direction() != Direction::Backward) {
        throw std::invalid_argument("fill problem: scorer directions are not forward/backward");
    }
    if (p.forward->vocab().size() != p.backward->vocab().size()) {
        throw std::invalid_argument("fill problem: scorers disagree on vocabulary size");
    }
    validate_config(p.config);
    validate_instance(*p.instance);
}

// Clamped tokens in consumption order for one direction: the lead context is
// consumed before the blank, the trail context after it.
struct ContextView {
    TokenSequence lead;
    TokenSequence trail;
};

inline ContextView context_view(const BlankedInstance& inst, Direction d) {
    ContextView v;
    if (d == Direction::Forward) {
        v.lead = inst.prefix;
        v.trail = inst.suffix;
    } else {
        v.lead.assign(inst.suffix.rbegin(), inst.suffix.rend());
        v.trail.assign(inst.prefix.rbegin(), inst.prefix.rend());
    }
    return v;
}

inline std::vector<TokenId> blank_candidates(const Vocabulary& v, bool allow_sentinels) {
    std::vector<TokenId> out;
    out.reserve(static_cast<size_t>(v.size()));
    for (TokenId t = allow_sentinels ? 0 : Vocabulary::kFirstContent; t < v.size(); ++t) {
        out.push_back(t);
    }
    return out;
}

// State and accumulated log-prob after consuming BOS plus a clamped context.
struct ContextState {
    RecurrentState state;
    double logp = 0.0;
};

inline ContextState replay_context(const Scorer& s, const TokenSequence& lead, StepCounter& steps) {
    ContextState ctx;
    ctx.state = s.advance(s.initial_state(), Vocabulary::kBos);
    ++steps.replay;
    for (TokenId tok : lead) {
        ctx.logp += s.log_distribution(ctx.state)[static_cast<size_t>(tok)];
        ctx.state = s.advance(ctx.state, tok);
        ++steps.replay;
    }
    return ctx;
}

// Continues from a mid-sentence state through the trailing clamped context
// and the terminating EOS, returning the accumulated conditional log-prob.
inline double continue_through(const Scorer& s, RecurrentState state, const TokenSequence& trail,
                               StepCounter& steps) {
    double acc = 0.0;
    for (TokenId tok : trail) {
        acc += s.log_distribution(state)[static_cast<size_t>(tok)];
        state = s.advance(state, tok);
        ++steps.replay;
    }
    acc += s.log_distribution(state)[static_cast<size_t>(Vocabulary::kEos)];
    return acc;
}

// Full-sentence joint log-prob under one directional model, BOS-framed and
// EOS-terminated. `sentence` is in natural left-to-right order.
inline double sentence_joint_logp(const Scorer& s, const TokenSequence& sentence, StepCounter& steps) {
    TokenSequence seq = sentence;
    if (s.direction() == Direction::Backward) {
        seq.assign(sentence.rbegin(), sentence.rend());
    }
    ContextState ctx = replay_context(s, seq, steps);
    double acc = ctx.logp;
    acc += s.log_distribution(ctx.state)[static_cast<size_t>(Vocabulary::kEos)];
    return acc;
}

// Forward joint of prefix + completion + suffix, reusing a cached prefix
// context state so repeated rankings only replay the variable region.
inline double forward_joint_of_completion(const FillProblem& p, const ContextState& fwd_lead,
                                          const TokenSequence& completion_l2r, StepCounter& steps) {
    const Scorer& s = *p.forward;
    RecurrentState st = fwd_lead.state;
    double acc = fwd_lead.logp;
    for (TokenId tok : completion_l2r) {
        acc += s.log_distribution(st)[static_cast<size_t>(tok)];
        st = s.advance(st, tok);
        ++steps.replay;
    }
    acc += continue_through(s, st, p.instance->suffix, steps);
    return acc;
}

inline void sort_completions_by_joint(std::vector<ScoredCompletion>& cs) {
    std::stable_sort(cs.begin(), cs.end(), [](const ScoredCompletion& a, const ScoredCompletion& b) {
        return beam_order_less(a.joint_logp, a.blank, b.joint_logp, b.blank);
    });
}

// The degenerate w = 0 result: the clamped sentence itself.
inline DecodeResult clamped_result(const FillProblem& p, StepCounter& steps) {
    TokenSequence sentence = assemble(*p.instance, {});
    ScoredCompletion c;
    c.blank = {};
    c.joint_logp = sentence_joint_logp(*p.forward, sentence, steps);
    c.objective = c.joint_logp;
    DecodeResult r;
    r.completions.push_back(std::move(c));
    r.diagnostics.update_steps = steps.update;
    r.diagnostics.replay_steps = steps.replay;
    r.diagnostics.trace = {r.completions[0].joint_logp};
    return r;
}

// --- result serialization ---------------------------------------------------

inline nlohmann::json result_to_json(const std::string& id, const std::string& algorithm,
                                     const DecodeResult& r, const Vocabulary& vocab) {
    const ScoredCompletion& best = r.top();
    return {{"id", id},
            {"algorithm", algorithm},
            {"completion", vocab.decode(best.blank)},
            {"objective", best.objective},
            {"joint_logp", best.joint_logp},
            {"meta_iterations", r.diagnostics.meta_iterations},
            {"advance_steps", r.diagnostics.total_steps()},
            {"advance_steps_blank", r.diagnostics.update_steps},
            {"advance_steps_replay", r.diagnostics.replay_steps},
            {"trace", r.diagnostics.trace}};
}

}  // namespace bibs
