#pragma once

// Unknown blank width: calibrate a width range from the lengths of the
// open-ended top-1 generations off each side of the blank, run the inner
// decoder once per width in the inclusive range, and keep the completion
// with the highest true forward joint across all widths. No length
// normalization is applied, so shorter completions are favored by the
// unnormalized joint; callers compare decoders under the same rule.

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <vector>

#include "bibs/beam_search.hpp"
#include "bibs/fill.hpp"

namespace bibs {

inline constexpr int kOpenGenerationCap = 30;

using InnerDecoder = std::function<DecodeResult(const FillProblem&)>;

inline DecodeResult unknown_length_decode(const FillProblem& p, const InnerDecoder& inner) {
    validate_problem(p);
    if (!inner) throw std::invalid_argument("unknown_length_decode: missing inner decoder");
    StepCounter steps;

    const TokenSequence y_f = open_generate(p, Direction::Forward, kOpenGenerationCap, steps);
    const TokenSequence y_b = open_generate(p, Direction::Backward, kOpenGenerationCap, steps);
    const int lo = static_cast<int>(std::min(y_f.size(), y_b.size()));
    const int hi = static_cast<int>(std::max(y_f.size(), y_b.size()));
    if (lo == 0 && hi == 0) return clamped_result(p, steps);

    Diagnostics diag;
    diag.update_steps = steps.update;
    diag.replay_steps = steps.replay;

    std::vector<ScoredCompletion> winners;
    for (int width = lo; width <= hi; ++width) {
        BlankedInstance widened = *p.instance;
        widened.gold.clear();
        widened.has_gold = false;
        widened.known_width = true;
        widened.blank_width = width;
        FillProblem sub = p;
        sub.instance = &widened;
        DecodeResult r = inner(sub);
        diag.update_steps += r.diagnostics.update_steps;
        diag.replay_steps += r.diagnostics.replay_steps;
        diag.meta_iterations += r.diagnostics.meta_iterations;
        if (!r.completions.empty()) winners.push_back(r.top());
    }

    DecodeResult result;
    result.completions = std::move(winners);
    for (auto& sc : result.completions) sc.objective = sc.joint_logp;
    sort_completions_by_joint(result.completions);
    result.diagnostics = diag;
    return result;
}

}  // namespace bibs
