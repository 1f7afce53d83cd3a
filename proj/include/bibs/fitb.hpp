#pragma once

// Experiment harness: corpus ingestion, dataset generation, batch decoding
// across a bounded worker pool, and metric aggregation. Every test sentence
// serves as its own sole reference; instance-level decode failures are
// counted and excluded rather than aborting the run.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bibs/algorithms.hpp"
#include "bibs/fill.hpp"
#include "bibs/io.hpp"
#include "bibs/metrics.hpp"
#include "bibs/ngram.hpp"
#include "bibs/sequence.hpp"
#include "bibs/vocab.hpp"

namespace bibs {

struct ExperimentSpec {
    std::string corpus_path;         // empty when `corpus_lines` is supplied directly
    std::vector<std::string> corpus_lines;
    int train_count = 0;             // 0: everything not held out for val/test
    int val_count = 0;
    int test_count = 100;
    std::vector<double> ratios{0.25, 0.5, 0.75};
    std::vector<std::string> algorithms{"bibs"};
    DecodeConfig config;
    std::uint64_t seed = 0;
    int ngram_order = 3;
    double smoothing = 0.1;
    int jobs = 0;  // 0: hardware concurrency

    nlohmann::json to_json() const {
        return {{"corpus", corpus_path},
                {"splits", {{"train", train_count}, {"val", val_count}, {"test", test_count}}},
                {"ratios", ratios},
                {"algorithms", algorithms},
                {"config",
                 {{"beam_width", config.beam_width},
                  {"meta_iterations", config.meta_iterations},
                  {"init_direction", to_string(config.init_direction)},
                  {"allow_sentinels_in_blank", config.allow_sentinels_in_blank},
                  {"convergence", config.convergence == Convergence::FixedIterations
                                      ? "fixed"
                                      : "stop-on-unchanged"}}},
                {"seed", seed},
                {"ngram_order", ngram_order},
                {"smoothing", smoothing},
                {"jobs", jobs}};
    }

    static ExperimentSpec from_json(const nlohmann::json& j) {
        ExperimentSpec s;
        s.corpus_path = j.at("corpus").get<std::string>();
        s.train_count = j.at("splits").at("train").get<int>();
        s.val_count = j.at("splits").at("val").get<int>();
        s.test_count = j.at("splits").at("test").get<int>();
        s.ratios = j.at("ratios").get<std::vector<double>>();
        s.algorithms = j.at("algorithms").get<std::vector<std::string>>();
        const auto& c = j.at("config");
        s.config.beam_width = c.at("beam_width").get<int>();
        s.config.meta_iterations = c.at("meta_iterations").get<int>();
        s.config.init_direction = c.at("init_direction").get<std::string>() == "forward"
                                      ? Direction::Forward
                                      : Direction::Backward;
        s.config.allow_sentinels_in_blank = c.at("allow_sentinels_in_blank").get<bool>();
        s.config.convergence = c.at("convergence").get<std::string>() == "fixed"
                                   ? Convergence::FixedIterations
                                   : Convergence::StopOnUnchangedBeams;
        s.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("ngram_order")) s.ngram_order = j.at("ngram_order").get<int>();
        if (j.contains("smoothing")) s.smoothing = j.at("smoothing").get<double>();
        if (j.contains("jobs")) s.jobs = j.at("jobs").get<int>();
        return s;
    }
};

inline void validate_spec(const ExperimentSpec& s) {
    if (s.algorithms.empty()) throw std::invalid_argument("experiment: no algorithms");
    for (double r : s.ratios) {
        if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("experiment: ratio outside (0,1)");
    }
    if (s.test_count < 1) throw std::invalid_argument("experiment: test split empty");
    validate_config(s.config);
}

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ull ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Tokenized corpus with deterministic shuffled splits. Sentences shorter
// than two tokens are dropped (and counted); the vocabulary covers the whole
// corpus so gold spans never map to UNK.
struct PreparedCorpus {
    std::shared_ptr<Vocabulary> vocab;
    std::vector<TokenSequence> train;
    std::vector<TokenSequence> val;
    std::vector<TokenSequence> test;
    int skipped_short = 0;
};

inline PreparedCorpus prepare_corpus(const ExperimentSpec& spec) {
    const std::vector<std::string> lines =
        spec.corpus_lines.empty() ? read_lines(spec.corpus_path) : spec.corpus_lines;

    PreparedCorpus out;
    std::vector<std::vector<std::string>> tokenized;
    for (const auto& line : lines) {
        auto toks = tokenize(line);
        if (toks.size() < 2) {
            if (!toks.empty() || !line.empty()) ++out.skipped_short;
            continue;
        }
        tokenized.push_back(std::move(toks));
    }
    if (tokenized.empty()) throw std::runtime_error("empty corpus");

    std::vector<std::string> stream;
    for (const auto& toks : tokenized) {
        for (const auto& t : toks) stream.push_back(t);
    }
    out.vocab = std::make_shared<Vocabulary>(build_vocabulary(stream, 1));

    std::vector<size_t> order(tokenized.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(spec.seed);
    std::shuffle(order.begin(), order.end(), rng);

    const size_t n = order.size();
    const size_t test_n = std::min(static_cast<size_t>(spec.test_count), n);
    const size_t val_n = std::min(static_cast<size_t>(spec.val_count), n - test_n);
    const size_t train_n = spec.train_count > 0
                               ? std::min(static_cast<size_t>(spec.train_count), n - test_n - val_n)
                               : n - test_n - val_n;
    size_t pos = 0;
    for (size_t i = 0; i < test_n; ++i) out.test.push_back(out.vocab->encode(tokenized[order[pos++]]));
    for (size_t i = 0; i < val_n; ++i) out.val.push_back(out.vocab->encode(tokenized[order[pos++]]));
    for (size_t i = 0; i < train_n; ++i) out.train.push_back(out.vocab->encode(tokenized[order[pos++]]));
    if (out.train.empty()) throw std::runtime_error("experiment: train split empty");
    return out;
}

// One dataset per ratio, instances named s<index>_r<percent>. Sentences
// whose gold span would contain a sentinel are skipped with a count.
struct GeneratedDatasets {
    std::map<double, std::vector<BlankedInstance>> by_ratio;
    int skipped_short = 0;
    int skipped_sentinel_gold = 0;
};

inline GeneratedDatasets generate_dataset(const PreparedCorpus& corpus, const ExperimentSpec& spec) {
    GeneratedDatasets out;
    out.skipped_short = corpus.skipped_short;
    for (double r : spec.ratios) {
        auto& list = out.by_ratio[r];
        const int pct = round_half_up(r * 100.0);
        for (size_t i = 0; i < corpus.test.size(); ++i) {
            const TokenSequence& sent = corpus.test[i];
            bool sentinel = false;
            for (TokenId t : sent) sentinel = sentinel || Vocabulary::is_sentinel(t);
            if (sentinel) {
                ++out.skipped_sentinel_gold;
                continue;
            }
            list.push_back(make_blank(sent, BlankSpec{r},
                                      "s" + std::to_string(i) + "_r" + std::to_string(pct)));
        }
    }
    return out;
}

struct InstanceOutcome {
    std::string id;
    bool ok = false;
    std::string error;
    DecodeResult result;
    double wall_ms = 0.0;
    std::array<double, kMetricMaxOrder> bleu_full{};   // BLEU-1..4, full sentence
    std::array<double, kMetricMaxOrder> bleu_blank{};  // BLEU-1..4, blank region only
    double cider_full = 0.0;
    double cider_blank = 0.0;
};

struct ReportCell {
    std::string algorithm;
    double ratio = 0.0;
    int instances = 0;
    int failures = 0;
    std::array<double, kMetricMaxOrder> bleu_full{};
    std::array<double, kMetricMaxOrder> bleu_blank{};
    double corpus_bleu4 = 0.0;
    double cider_full = 0.0;
    double cider_blank = 0.0;
    double mean_joint_logp = 0.0;
    double mean_update_steps = 0.0;
    double mean_replay_steps = 0.0;
    double mean_wall_ms = 0.0;
};

struct RunReport {
    std::vector<ReportCell> cells;
    std::vector<nlohmann::json> detail;  // one JSON line per (algorithm, ratio, instance)

    nlohmann::json summary_json(const std::string& detail_ref = "") const {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& c : cells) {
            rows.push_back({{"algorithm", c.algorithm},
                            {"ratio", c.ratio},
                            {"instances", c.instances},
                            {"failures", c.failures},
                            {"bleu1", c.bleu_full[0]},
                            {"bleu2", c.bleu_full[1]},
                            {"bleu3", c.bleu_full[2]},
                            {"bleu4", c.bleu_full[3]},
                            {"corpus_bleu4", c.corpus_bleu4},
                            {"cider", c.cider_full},
                            {"blank_bleu4", c.bleu_blank[3]},
                            {"blank_cider", c.cider_blank},
                            {"mean_joint_logp", c.mean_joint_logp},
                            {"mean_update_steps", c.mean_update_steps},
                            {"mean_replay_steps", c.mean_replay_steps},
                            {"mean_wall_ms", c.mean_wall_ms}});
        }
        nlohmann::json out{{"version", 1}, {"cells", rows}};
        if (!detail_ref.empty()) out["detail"] = detail_ref;
        return out;
    }

    void save(const std::string& summary_path, const std::string& detail_path) const {
        std::string lines;
        for (const auto& d : detail) {
            lines += d.dump();
            lines += '\n';
        }
        atomic_write_file(detail_path, lines);
        atomic_write_file(summary_path, summary_json(detail_path).dump(2) + "\n");
    }

    std::string table() const {
        std::ostringstream os;
        os << std::left << std::setw(22) << "algorithm" << std::right << std::setw(6) << "r"
           << std::setw(7) << "n" << std::setw(8) << "fail" << std::setw(9) << "BLEU-1"
           << std::setw(9) << "BLEU-4" << std::setw(9) << "cBLEU4" << std::setw(9) << "CIDEr"
           << std::setw(9) << "bBLEU4" << std::setw(11) << "joint" << std::setw(10) << "steps"
           << std::setw(9) << "ms" << '\n';
        for (const auto& c : cells) {
            os << std::left << std::setw(22) << c.algorithm << std::right << std::fixed
               << std::setprecision(2) << std::setw(6) << c.ratio << std::setw(7) << c.instances
               << std::setw(8) << c.failures << std::setprecision(3) << std::setw(9)
               << c.bleu_full[0] << std::setw(9) << c.bleu_full[3] << std::setw(9) << c.corpus_bleu4
               << std::setw(9) << c.cider_full << std::setw(9) << c.bleu_blank[3]
               << std::setprecision(2) << std::setw(11) << c.mean_joint_logp << std::setprecision(1)
               << std::setw(10) << c.mean_update_steps + c.mean_replay_steps << std::setw(9)
               << c.mean_wall_ms << '\n';
        }
        return os.str();
    }
};

// Decodes `instances` across a bounded worker pool. Results land in input
// order, so downstream output is deterministic regardless of scheduling.
template <typename Fn>
inline void parallel_for(size_t count, int jobs, Fn&& fn) {
    unsigned n = jobs > 0 ? static_cast<unsigned>(jobs) : std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    n = std::min<unsigned>(n, static_cast<unsigned>(count ? count : 1));
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
}

struct ExperimentScorers {
    std::shared_ptr<const Vocabulary> vocab;
    std::shared_ptr<const Scorer> forward;
    std::shared_ptr<const Scorer> backward;
};

inline ExperimentScorers train_experiment_scorers(const PreparedCorpus& corpus,
                                                  const ExperimentSpec& spec) {
    NGramPair pair = ngram_train(corpus.train, corpus.vocab, spec.ngram_order, spec.smoothing);
    ExperimentScorers s;
    s.vocab = corpus.vocab;
    s.forward = std::make_shared<NGramScorer>(pair.forward);
    s.backward = std::make_shared<NGramScorer>(pair.backward);
    return s;
}

inline InstanceOutcome evaluate_instance(const std::string& algorithm, const BlankedInstance& inst,
                                         const ExperimentScorers& scorers, const DecodeConfig& config,
                                         std::uint64_t seed, const CiderCorpus& cider_full_corpus,
                                         const CiderCorpus& cider_blank_corpus) {
    InstanceOutcome out;
    out.id = inst.id;
    FillProblem problem{&inst, scorers.forward.get(), scorers.backward.get(), config};
    try {
        const auto t0 = std::chrono::steady_clock::now();
        out.result = decode_with_algorithm(algorithm, problem, fnv1a(inst.id, seed));
        const auto t1 = std::chrono::steady_clock::now();
        out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        const TokenSequence candidate = assemble(inst, out.result.top().blank);
        const TokenSequence reference = original_sentence(inst);
        for (int n = 1; n <= kMetricMaxOrder; ++n) {
            out.bleu_full[static_cast<size_t>(n - 1)] = bleu(candidate, {reference}, n);
            out.bleu_blank[static_cast<size_t>(n - 1)] =
                inst.gold.empty() && out.result.top().blank.empty()
                    ? 1.0
                    : bleu(out.result.top().blank, {inst.gold}, n);
        }
        out.cider_full = cider(candidate, {reference}, cider_full_corpus);
        out.cider_blank = inst.gold.empty() && out.result.top().blank.empty()
                              ? 10.0
                              : cider(out.result.top().blank, {inst.gold}, cider_blank_corpus);
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

inline ReportCell aggregate_cell(const std::string& algorithm, double ratio,
                                 const std::vector<BlankedInstance>& instances,
                                 const std::vector<InstanceOutcome>& outcomes) {
    ReportCell cell;
    cell.algorithm = algorithm;
    cell.ratio = ratio;
    BleuAccumulator pooled(4);
    int ok = 0;
    for (size_t i = 0; i < outcomes.size(); ++i) {
        const auto& oc = outcomes[i];
        if (!oc.ok) {
            ++cell.failures;
            continue;
        }
        ++ok;
        for (int n = 0; n < kMetricMaxOrder; ++n) {
            cell.bleu_full[static_cast<size_t>(n)] += oc.bleu_full[static_cast<size_t>(n)];
            cell.bleu_blank[static_cast<size_t>(n)] += oc.bleu_blank[static_cast<size_t>(n)];
        }
        cell.cider_full += oc.cider_full;
        cell.cider_blank += oc.cider_blank;
        cell.mean_joint_logp += oc.result.top().joint_logp;
        cell.mean_update_steps += static_cast<double>(oc.result.diagnostics.update_steps);
        cell.mean_replay_steps += static_cast<double>(oc.result.diagnostics.replay_steps);
        cell.mean_wall_ms += oc.wall_ms;
        pooled.add(assemble(instances[i], oc.result.top().blank), {original_sentence(instances[i])});
    }
    cell.instances = ok;
    if (ok > 0) {
        const double d = static_cast<double>(ok);
        for (int n = 0; n < kMetricMaxOrder; ++n) {
            cell.bleu_full[static_cast<size_t>(n)] /= d;
            cell.bleu_blank[static_cast<size_t>(n)] /= d;
        }
        cell.cider_full /= d;
        cell.cider_blank /= d;
        cell.mean_joint_logp /= d;
        cell.mean_update_steps /= d;
        cell.mean_replay_steps /= d;
        cell.mean_wall_ms /= d;
        cell.corpus_bleu4 = pooled.value();
    }
    return cell;
}

inline RunReport run_experiment(const ExperimentSpec& spec) {
    validate_spec(spec);
    PreparedCorpus corpus = prepare_corpus(spec);
    ExperimentScorers scorers = train_experiment_scorers(corpus, spec);
    GeneratedDatasets datasets = generate_dataset(corpus, spec);

    CiderCorpus cider_full_corpus = CiderCorpus::build_single_reference(corpus.test);
    std::vector<TokenSequence> golds;
    for (const auto& [r, list] : datasets.by_ratio) {
        for (const auto& inst : list) {
            if (!inst.gold.empty()) golds.push_back(inst.gold);
        }
    }
    if (golds.empty()) golds.push_back(corpus.test.front());
    CiderCorpus cider_blank_corpus = CiderCorpus::build_single_reference(golds);

    RunReport report;
    for (const auto& algorithm : spec.algorithms) {
        for (const auto& [ratio, instances] : datasets.by_ratio) {
            std::vector<InstanceOutcome> outcomes(instances.size());
            parallel_for(instances.size(), spec.jobs, [&](size_t i) {
                outcomes[i] = evaluate_instance(algorithm, instances[i], scorers, spec.config,
                                                spec.seed, cider_full_corpus, cider_blank_corpus);
            });
            for (size_t i = 0; i < outcomes.size(); ++i) {
                const auto& oc = outcomes[i];
                nlohmann::json line;
                if (oc.ok) {
                    line = result_to_json(oc.id, algorithm, oc.result, *scorers.vocab);
                    line["ratio"] = ratio;
                    line["wall_ms"] = oc.wall_ms;
                    line["bleu"] = {{"b1", oc.bleu_full[0]},
                                    {"b2", oc.bleu_full[1]},
                                    {"b3", oc.bleu_full[2]},
                                    {"b4", oc.bleu_full[3]}};
                    line["cider"] = oc.cider_full;
                    line["blank_bleu4"] = oc.bleu_blank[3];
                    line["blank_cider"] = oc.cider_blank;
                } else {
                    line = {{"id", oc.id}, {"algorithm", algorithm}, {"ratio", ratio},
                            {"error", oc.error}};
                }
                report.detail.push_back(std::move(line));
            }
            report.cells.push_back(aggregate_cell(algorithm, ratio, instances, outcomes));
        }
    }
    return report;
}

}  // namespace bibs
