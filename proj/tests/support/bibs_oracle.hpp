#pragma once

// Independent per-step verifier for the alternating-pass decoder: rebuilds
// every candidate triple score from scratch through the scorers (no shared
// cache machinery) and recomputes the expected top-B under the documented
// tie-break. Summation follows consumption order throughout, mirroring the
// decoder's arithmetic exactly.

#include <algorithm>
#include <string>
#include <vector>

#include "bibs/bibs_search.hpp"
#include "bibs/fill.hpp"

namespace testsupport {

struct OracleCandidate {
    double score;
    bibs::TokenSequence ids;
};

// Expected kept list for one recorded step, or an error description.
inline std::string verify_bibs_step(const bibs::FillProblem& p, const bibs::BibsStepRecord& rec) {
    using namespace bibs;
    const Scorer& scorer = p.scorer(rec.dir);
    const Scorer& opp_scorer = p.scorer(opposite(rec.dir));
    const int w = p.instance->blank_width;

    StepCounter scratch;
    const ContextView view = context_view(*p.instance, rec.dir);
    const ContextView opp_view = context_view(*p.instance, opposite(rec.dir));
    const ContextState lead = replay_context(scorer, view.lead, scratch);
    const ContextState opp_lead = replay_context(opp_scorer, opp_view.lead, scratch);

    // live side: replay each prefix from scratch
    std::vector<double> live_cum(rec.live.size());
    std::vector<std::vector<double>> fresh(rec.live.size());
    for (size_t i = 0; i < rec.live.size(); ++i) {
        RecurrentState st = lead.state;
        double cum = lead.logp;
        for (TokenId tok : rec.live[i]) {
            cum += scorer.log_distribution(st)[static_cast<size_t>(tok)];
            st = scorer.advance(st, tok);
        }
        live_cum[i] = cum;
        fresh[i] = scorer.log_distribution(st);
    }

    // opposite side: replay each fixed beam from scratch
    const int consumed = w - 1 - rec.position;
    std::vector<double> opp_rest(rec.opposite.size());
    std::vector<std::vector<double>> opp_dist(rec.opposite.size());
    for (size_t j = 0; j < rec.opposite.size(); ++j) {
        RecurrentState st = opp_lead.state;
        double cum = opp_lead.logp;
        for (int q = 0; q < consumed; ++q) {
            const TokenId tok = rec.opposite[j][static_cast<size_t>(q)];
            cum += opp_scorer.log_distribution(st)[static_cast<size_t>(tok)];
            st = opp_scorer.advance(st, tok);
        }
        opp_rest[j] = cum;
        opp_dist[j] = opp_scorer.log_distribution(st);
    }

    const std::vector<TokenId> tokens =
        blank_candidates(scorer.vocab(), p.config.allow_sentinels_in_blank);

    std::vector<OracleCandidate> cands;
    for (size_t i = 0; i < rec.live.size(); ++i) {
        for (TokenId y : tokens) {
            for (size_t j = 0; j < rec.opposite.size(); ++j) {
                OracleCandidate c;
                c.score = live_cum[i] + fresh[i][static_cast<size_t>(y)] +
                          opp_dist[j][static_cast<size_t>(y)] + opp_rest[j];
                c.ids = rec.live[i];
                c.ids.push_back(y);
                cands.push_back(std::move(c));
            }
        }
    }

    // dedup by ids keeping the best score, then order by score desc / ids asc
    std::sort(cands.begin(), cands.end(), [](const OracleCandidate& a, const OracleCandidate& b) {
        if (a.ids != b.ids) return a.ids < b.ids;
        return a.score > b.score;
    });
    cands.erase(std::unique(cands.begin(), cands.end(),
                            [](const OracleCandidate& a, const OracleCandidate& b) {
                                return a.ids == b.ids;
                            }),
                cands.end());
    std::sort(cands.begin(), cands.end(), [](const OracleCandidate& a, const OracleCandidate& b) {
        return beam_order_less(a.score, a.ids, b.score, b.ids);
    });
    const size_t keep = std::min<size_t>(cands.size(), static_cast<size_t>(p.config.beam_width));
    cands.resize(keep);

    if (cands.size() != rec.kept.size()) {
        return "kept size mismatch at position " + std::to_string(rec.position);
    }
    for (size_t i = 0; i < cands.size(); ++i) {
        if (cands[i].ids != rec.kept[i].first) {
            return "kept ids mismatch at position " + std::to_string(rec.position) + " rank " +
                   std::to_string(i);
        }
        if (std::abs(cands[i].score - rec.kept[i].second) > 1e-9) {
            return "kept score mismatch at position " + std::to_string(rec.position) + " rank " +
                   std::to_string(i);
        }
    }
    return {};
}

}  // namespace testsupport
