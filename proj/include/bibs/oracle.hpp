#pragma once

// Exhaustive fill oracle: enumerates every width-w completion over the
// content vocabulary, scores each assembled sentence by its true forward
// joint log-prob, and returns the complete ranking. Exponential in w by
// nature; a budget guard keeps it at desk scale. This is the ground truth
// every approximate decoder is measured against.

#include <stdexcept>
#include <vector>

#include "bibs/fill.hpp"
#include "bibs/scorer.hpp"

namespace bibs {

inline constexpr double kOracleBudget = 1e6;

inline DecodeResult exact_fill_oracle(const FillProblem& p) {
    validate_problem(p);
    StepCounter steps;
    if (p.instance->blank_width == 0) return clamped_result(p, steps);

    const int w = p.instance->blank_width;
    const std::vector<TokenId> tokens = blank_candidates(p.forward->vocab(), p.config.allow_sentinels_in_blank);
    double total = 1.0;
    for (int i = 0; i < w; ++i) {
        total *= static_cast<double>(tokens.size());
        if (total > kOracleBudget) throw std::runtime_error("oracle budget exceeded");
    }

    const Scorer& fwd = *p.forward;
    const ContextState lead = replay_context(fwd, p.instance->prefix, steps);

    DecodeResult result;
    result.completions.reserve(static_cast<size_t>(total));

    // Depth-first over completions, reusing the state at each shared prefix.
    TokenSequence current(static_cast<size_t>(w));
    std::vector<RecurrentState> states{lead.state};
    std::vector<double> cums{lead.logp};

    struct Frame {
        int depth;
        size_t next_token = 0;
    };
    std::vector<Frame> stack{{0}};
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.depth == w) {
            double joint = cums.back() + continue_through(fwd, states.back(), p.instance->suffix, steps);
            ScoredCompletion sc;
            sc.blank = current;
            sc.joint_logp = joint;
            sc.objective = joint;
            result.completions.push_back(std::move(sc));
            stack.pop_back();
            states.pop_back();
            cums.pop_back();
            continue;
        }
        if (f.next_token == tokens.size()) {
            const int depth = f.depth;
            stack.pop_back();
            if (depth > 0) {
                states.pop_back();
                cums.pop_back();
            }
            continue;
        }
        const TokenId y = tokens[f.next_token++];
        current[static_cast<size_t>(f.depth)] = y;
        const double theta = fwd.log_distribution(states.back())[static_cast<size_t>(y)];
        states.push_back(fwd.advance(states.back(), y));
        ++steps.update;
        cums.push_back(cums.back() + theta);
        stack.push_back({f.depth + 1});
    }

    sort_completions_by_joint(result.completions);
    result.diagnostics.update_steps = steps.update;
    result.diagnostics.replay_steps = steps.replay;
    return result;
}

}  // namespace bibs
