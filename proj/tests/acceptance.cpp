// Acceptance suite: end-to-end checks of the decoding engine's contractual
// properties, one pass/fail line per criterion. Each criterion pins its
// tolerances and a wall-clock budget; the binary exits nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bibs/algorithms.hpp"
#include "bibs/beam_search.hpp"
#include "bibs/bibs_search.hpp"
#include "bibs/fitb.hpp"
#include "bibs/gsn.hpp"
#include "bibs/metrics.hpp"
#include "bibs/ngram.hpp"
#include "bibs/oracle.hpp"
#include "bibs/rerank.hpp"
#include "bibs/scorer.hpp"
#include "bibs/sequence.hpp"
#include "bibs/synthetic.hpp"
#include "bibs/unknown_length.hpp"
#include "bibs/vocab.hpp"
#include "support/bibs_oracle.hpp"
#include "support/metric_oracle.hpp"
#include "support/test_support.hpp"

namespace {

using namespace bibs;

struct Check {
    std::vector<std::string> failures;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

struct Criterion {
    int number;
    std::string name;
    double time_limit_s;
    std::function<void(Check&)> run;
};

// --- 1: decomposition identity ----------------------------------------------

void criterion_decomposition(Check& c) {
    std::mt19937_64 rng(20170701);
    std::uniform_real_distribution<double> logit(-12.0, 12.0);
    std::uniform_int_distribution<size_t> size(2, 50);
    for (int trial = 0; trial < 1000; ++trial) {
        const size_t n = size(rng);
        std::vector<double> f(n), b(n);
        for (size_t i = 0; i < n; ++i) {
            f[i] = logit(rng);
            b[i] = logit(rng);
        }
        const std::vector<double> combined = bidir_combine(f, b);

        // straight-line softmax of the summed logits
        double z = 0.0;
        std::vector<double> direct(n);
        for (size_t i = 0; i < n; ++i) {
            direct[i] = std::exp(f[i] + b[i]);
            z += direct[i];
        }
        for (size_t i = 0; i < n; ++i) {
            c.expect(std::abs(std::exp(combined[i]) - direct[i] / z) < 1e-9,
                     "combined distribution deviates from direct softmax");
            if (!c.failures.empty()) return;
        }
    }
}

// --- 2: full-frontier exactness ---------------------------------------------

void criterion_full_frontier(Check& c) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        std::mt19937_64 rng(seed);
        auto vocab = testsupport::tiny_vocab({"a", "b", "c", "d"});
        auto corpus = testsupport::random_corpus(rng, *vocab, 30, 4, 10);
        auto pair = testsupport::train_pair(corpus, vocab, 2, 0.25);
        BlankedInstance inst = testsupport::random_instance(rng, *vocab, 2, 4, 2);
        DecodeConfig config;
        config.beam_width = 256;
        FillProblem p{&inst, pair.forward.get(), pair.backward.get(), config};

        DecodeResult bs = beam_search(p, Direction::Forward);
        DecodeResult oracle = exact_fill_oracle(p);
        c.expect(oracle.completions.size() == 256, "oracle should enumerate 4^4 candidates");
        c.expect(bs.top().blank == oracle.top().blank,
                 "seed " + std::to_string(seed) + ": beam top-1 differs from oracle top-1");
        if (!c.failures.empty()) return;
    }
}

// --- 3: step-optimality of every beam update --------------------------------

void criterion_step_optimality(Check& c) {
    std::mt19937_64 seeds(424242);
    for (int trial = 0; trial < 100; ++trial) {
        const int content = 2 + static_cast<int>(seeds() % 4);  // |V| = 5..8 with sentinels
        std::vector<std::string> names;
        for (int i = 0; i < content; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
        auto vocab = testsupport::tiny_vocab(names);
        std::mt19937_64 rng(seeds());
        auto corpus = testsupport::random_corpus(rng, *vocab, 30, 3, 9);
        auto pair = testsupport::train_pair(corpus, vocab, 2, 0.3);
        BlankedInstance inst = testsupport::random_instance(
            rng, *vocab, 1 + static_cast<int>(seeds() % 2), 1 + static_cast<int>(seeds() % 3),
            1 + static_cast<int>(seeds() % 2));
        DecodeConfig config;
        config.beam_width = 1 + static_cast<int>(seeds() % 4);
        config.meta_iterations = 2;
        config.convergence = Convergence::FixedIterations;
        FillProblem p{&inst, pair.forward.get(), pair.backward.get(), config};

        int records = 0;
        bibs_decode(p, [&](const BibsStepRecord& rec) {
            ++records;
            const std::string err = testsupport::verify_bibs_step(p, rec);
            c.expect(err.empty(), "trial " + std::to_string(trial) + ": " + err);
        });
        c.expect(records == 2 * 2 * inst.blank_width, "unexpected number of beam updates");
        if (!c.failures.empty()) return;
    }
}

// --- 4: 2*B*M*w step-count claim --------------------------------------------

void criterion_step_count(Check& c) {
    ExperimentSpec spec;
    spec.corpus_lines = generate_synthetic_corpus(99, 400);
    spec.test_count = 1;
    spec.ngram_order = 2;
    PreparedCorpus corpus = prepare_corpus(spec);
    NGramPair pair = ngram_train(corpus.train, corpus.vocab, 2, 0.1);
    auto fwd = std::make_shared<InstrumentedScorer>(std::make_shared<NGramScorer>(pair.forward));
    auto bwd = std::make_shared<InstrumentedScorer>(std::make_shared<NGramScorer>(pair.backward));

    for (int b : {1, 3, 5}) {
        for (int m : {1, 2, 4}) {
            for (int w : {2, 5, 10}) {
                BlankedInstance inst;
                inst.id = "grid";
                inst.prefix = {3, 4};
                inst.suffix = {5, 6};
                inst.blank_width = w;
                inst.known_width = true;
                inst.has_gold = false;

                DecodeConfig config;
                config.beam_width = b;
                config.meta_iterations = m;
                config.convergence = Convergence::FixedIterations;
                FillProblem p{&inst, fwd.get(), bwd.get(), config};
                fwd->reset_count();
                bwd->reset_count();
                DecodeResult r = bibs_decode(p);

                const std::uint64_t expected = 2ull * b * m * w;
                std::ostringstream tag;
                tag << "(B=" << b << ",M=" << m << ",w=" << w << ")";
                c.expect(r.diagnostics.update_steps == expected,
                         tag.str() + " blank-region steps " +
                             std::to_string(r.diagnostics.update_steps) + " != " +
                             std::to_string(expected));
                c.expect(r.diagnostics.replay_steps > 0, tag.str() + " replay steps not reported");
                c.expect(fwd->advance_count() + bwd->advance_count() == r.diagnostics.total_steps(),
                         tag.str() + " instrumented total disagrees with diagnostics");
            }
        }
    }
}

// --- 5 & 6: synthetic-corpus reproductions ----------------------------------

ExperimentSpec synthetic_spec() {
    ExperimentSpec spec;
    spec.corpus_lines = generate_synthetic_corpus(42, 2300);
    spec.test_count = 200;
    spec.ratios = {0.5};
    spec.algorithms = {"bibs", "bs-f", "bs-b"};
    spec.config.beam_width = 5;
    spec.config.meta_iterations = 4;
    spec.seed = 42;
    spec.ngram_order = 3;
    spec.smoothing = 0.1;
    spec.jobs = 0;
    return spec;
}

void criterion_convergence(Check& c) {
    ExperimentSpec spec = synthetic_spec();
    PreparedCorpus corpus = prepare_corpus(spec);
    c.expect(spec.corpus_lines.size() >= 2000, "synthetic corpus too small");
    ExperimentScorers scorers = train_experiment_scorers(corpus, spec);
    GeneratedDatasets ds = generate_dataset(corpus, spec);
    const auto& instances = ds.by_ratio.at(0.5);
    c.expect(instances.size() == 200, "expected 200 instances at r=0.5");

    int n = 0, nondecreasing = 0;
    double init_mean = 0.0, it1_mean = 0.0;
    for (const auto& inst : instances) {
        FillProblem p{&inst, scorers.forward.get(), scorers.backward.get(), spec.config};
        DecodeResult r = bibs_decode(p);
        if (r.diagnostics.trace.size() < 2) continue;
        ++n;
        init_mean += r.diagnostics.trace[0];
        it1_mean += r.diagnostics.trace[1];
        if (r.diagnostics.trace[1] >= r.diagnostics.trace[0]) ++nondecreasing;
    }
    init_mean /= n;
    it1_mean /= n;
    c.expect(n == 200, "some instances produced no trace");
    c.expect(it1_mean > init_mean, "mean joint after meta-iteration 1 (" +
                                       std::to_string(it1_mean) +
                                       ") does not exceed initialization (" +
                                       std::to_string(init_mean) + ")");
    c.expect(10 * nondecreasing >= 9 * n, "fewer than 90% of instances non-decreasing: " +
                                              std::to_string(nondecreasing) + "/" +
                                              std::to_string(n));
}

void criterion_directional_quality(Check& c) {
    RunReport report = run_experiment(synthetic_spec());
    std::map<std::string, double> bleu4;
    for (const auto& cell : report.cells) {
        bleu4[cell.algorithm] = cell.bleu_full[3];
        c.expect(cell.failures == 0, cell.algorithm + " had decode failures");
    }
    c.expect(bleu4.count("bibs") && bleu4.count("bs-f") && bleu4.count("bs-b"),
             "missing algorithm cells");
    c.expect(bleu4["bibs"] >= bleu4["bs-f"],
             "BLEU-4: bibs " + std::to_string(bleu4["bibs"]) + " < bs-f " +
                 std::to_string(bleu4["bs-f"]));
    c.expect(bleu4["bibs"] >= bleu4["bs-b"],
             "BLEU-4: bibs " + std::to_string(bleu4["bibs"]) + " < bs-b " +
                 std::to_string(bleu4["bs-b"]));
}

// --- 7: blank-construction fidelity -----------------------------------------

void criterion_blank_fidelity(Check& c) {
    const std::string caption = "A close up of flowers and plants inside of a bowl";
    Vocabulary vocab = build_vocabulary(tokenize(caption), 1);
    TokenSequence sentence = vocab.encode(tokenize(caption));
    c.expect(sentence.size() == 11, "caption should tokenize to 11 tokens");
    const auto t0 = std::chrono::steady_clock::now();
    BlankedInstance inst = make_blank(sentence, BlankSpec{0.5});
    const auto t1 = std::chrono::steady_clock::now();
    c.expect(std::chrono::duration<double>(t1 - t0).count() < 1e-3,
             "blank construction exceeded 1 ms");
    c.expect(inst.blank_width == 6, "blank width should be 6");
    c.expect(vocab.decode(inst.prefix) == std::vector<std::string>{"a", "close"},
             "prefix should be 'a close'");
    c.expect(vocab.decode(inst.suffix) == std::vector<std::string>{"of", "a", "bowl"},
             "suffix should be 'of a bowl'");
    c.expect(vocab.decode(inst.gold) ==
                 std::vector<std::string>{"up", "of", "flowers", "and", "plants", "inside"},
             "gold should be the removed middle span");
}

// --- 8: metric golden values -------------------------------------------------

void criterion_metric_goldens(Check& c) {
    Vocabulary v = build_vocabulary(
        tokenize("the cat red bird sings in garden a small sleeps near lamp watches"), 1);

    TokenSequence self = v.encode(tokenize("the red bird sings in the garden"));
    for (int n = 1; n <= 4; ++n) {
        c.expect(std::abs(bleu(self, {self}, n) - 1.0) < 1e-12, "identity BLEU should be 1.0");
    }

    c.expect(std::abs(bleu(v.encode({"the", "the", "the"}), {v.encode({"the", "cat"})}, 1) -
                      1.0 / 3.0) < 1e-12,
             "clipping case should give BLEU-1 = 1/3");

    CiderCorpus single = CiderCorpus::build_single_reference({self});
    c.expect(std::abs(cider(self, {self}, single) - 10.0) < 1e-12,
             "single-sentence self-match should score 10");

    std::vector<std::vector<std::string>> sentences{
        tokenize("the red bird sings in the garden"),
        tokenize("a small cat sleeps near the red lamp"),
        tokenize("the red bird watches a small cat"),
    };
    std::vector<TokenSequence> ids;
    for (const auto& s : sentences) ids.push_back(v.encode(s));
    CiderCorpus toy = CiderCorpus::build_single_reference(ids);
    std::vector<std::string> cand_toks = tokenize("the red bird sleeps near the garden");
    const double got = cider(v.encode(cand_toks), ids, toy);
    const double want = testsupport::cider_oracle(cand_toks, sentences, sentences);
    c.expect(std::abs(got - want) < 1e-9, "toy-corpus score deviates from the TF-IDF oracle");
}

// --- 9: unknown-length range rule --------------------------------------------

void criterion_unknown_length(Check& c) {
    auto vocab = testsupport::tiny_vocab({"p", "s", "a", "b", "x", "y", "z", "q"});
    const TokenId p = 3, s = 4, a = 5, b = 6, x = 7, y = 8, z = 9, q = 10;
    auto fwd = std::make_shared<NGramModel>(vocab, 2, 1e-6, Direction::Forward);
    fwd->add_count({Vocabulary::kBos}, p, 100);
    fwd->add_count({p}, a, 100);
    fwd->add_count({a}, b, 100);
    fwd->add_count({b}, Vocabulary::kEos, 100);
    auto bwd = std::make_shared<NGramModel>(vocab, 2, 1e-6, Direction::Backward);
    bwd->add_count({Vocabulary::kBos}, s, 100);
    bwd->add_count({s}, x, 100);
    bwd->add_count({x}, y, 100);
    bwd->add_count({y}, z, 100);
    bwd->add_count({z}, q, 100);
    bwd->add_count({q}, Vocabulary::kEos, 100);
    NGramScorer forward(fwd), backward(bwd);

    BlankedInstance inst;
    inst.id = "range";
    inst.prefix = {p};
    inst.suffix = {s};
    inst.known_width = false;
    inst.has_gold = false;
    DecodeConfig config;
    config.beam_width = 2;
    config.meta_iterations = 2;
    FillProblem problem{&inst, &forward, &backward, config};

    StepCounter scratch;
    c.expect(open_generate(problem, Direction::Forward, kOpenGenerationCap, scratch).size() == 2,
             "forward generation should stop after 2 tokens");
    c.expect(open_generate(problem, Direction::Backward, kOpenGenerationCap, scratch).size() == 4,
             "backward generation should stop after 4 tokens");

    int calls = 0;
    std::vector<int> widths;
    DecodeResult r = unknown_length_decode(problem, [&](const FillProblem& sub) {
        ++calls;
        widths.push_back(sub.instance->blank_width);
        return bibs_decode(sub);
    });
    c.expect(calls == 3, "expected exactly 3 inner decodes, saw " + std::to_string(calls));
    c.expect(widths == std::vector<int>{2, 3, 4}, "expected widths 2, 3, 4");
    for (const auto& sc : r.completions) {
        c.expect(r.top().joint_logp >= sc.joint_logp,
                 "winner must dominate every per-width candidate");
    }
}

// --- 10: sampler calibration --------------------------------------------------

void criterion_sampler_calibration(Check& c) {
    std::mt19937_64 rng(777);
    auto vocab = testsupport::tiny_vocab({"a", "b", "c", "d", "e"});
    auto corpus = testsupport::random_corpus(rng, *vocab, 60, 3, 8);
    auto pair = testsupport::train_pair(corpus, vocab, 2, 0.4);

    BlankedInstance inst = testsupport::random_instance(rng, *vocab, 2, 1, 2);
    DecodeConfig config;
    config.beam_width = 1;
    config.meta_iterations = 1;
    FillProblem p{&inst, pair.forward.get(), pair.backward.get(), config};

    // expected conditional for the single blank position
    StepCounter steps;
    const ContextState fwd_lead = replay_context(*p.forward, inst.prefix, steps);
    const ContextView bwd_view = context_view(inst, Direction::Backward);
    const ContextState bwd_lead = replay_context(*p.backward, bwd_view.lead, steps);
    const std::vector<double> combined = bidir_combine(
        p.forward->log_distribution(fwd_lead.state), p.backward->log_distribution(bwd_lead.state));
    const std::vector<TokenId> cands = blank_candidates(*pair.vocab, false);
    double z = 0.0;
    for (TokenId t : cands) z += std::exp(combined[static_cast<size_t>(t)]);

    const int draws = 10000;
    std::map<TokenId, int> freq;
    for (int i = 0; i < draws; ++i) {
        DecodeResult r = gsn_ordered(p, static_cast<std::uint64_t>(i) + 1);
        ++freq[r.top().blank.at(0)];
    }

    for (TokenId t : cands) {
        const double prob = std::exp(combined[static_cast<size_t>(t)]) / z;
        if (prob < 0.01) continue;
        const double sigma = std::sqrt(prob * (1.0 - prob) * draws);
        const double diff = std::abs(freq[t] - prob * draws);
        c.expect(diff <= 3.0 * sigma, "token " + std::to_string(t) + " frequency off by " +
                                          std::to_string(diff / sigma) + " sigma");
    }
}

}  // namespace

int main() {
    std::vector<Criterion> criteria{
        {1, "decomposition identity (combine == softmax of summed logits)", 1.0,
         criterion_decomposition},
        {2, "full-frontier beam search equals the exhaustive oracle", 5.0, criterion_full_frontier},
        {3, "every beam update is the exact top-B of its expansion set", 10.0,
         criterion_step_optimality},
        {4, "blank-region advances equal 2*B*M*w across the grid", 5.0, criterion_step_count},
        {5, "one meta-iteration improves the mean joint on the synthetic corpus", 60.0,
         criterion_convergence},
        {6, "bidirectional decoding beats both directional baselines on BLEU-4", 120.0,
         criterion_directional_quality},
        {7, "blank construction reproduces the 11-token caption split", 0.5,
         criterion_blank_fidelity},
        {8, "metric golden values", 1.0, criterion_metric_goldens},
        {9, "unknown-width range triggers exactly one decode per width", 1.0,
         criterion_unknown_length},
        {10, "sampler frequencies match the conditional within 3 sigma", 10.0,
         criterion_sampler_calibration},
    };

    int failed = 0;
    for (const auto& criterion : criteria) {
        Check check;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            criterion.run(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(t1 - t0).count();
        if (secs >= criterion.time_limit_s) {
            check.expect(false, "exceeded time budget of " + std::to_string(criterion.time_limit_s) +
                                    " s");
        }
        const bool ok = check.failures.empty();
        failed += ok ? 0 : 1;
        std::printf("%s  %2d  %-68s (%.3f s)\n", ok ? "PASS" : "FAIL", criterion.number,
                    criterion.name.c_str(), secs);
        for (const auto& f : check.failures) std::printf("      - %s\n", f.c_str());
    }
    if (failed > 0) {
        std::printf("%d criterion(s) failed\n", failed);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
