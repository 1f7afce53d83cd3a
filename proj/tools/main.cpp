// Command-line front end: train n-gram models, blank corpora into datasets,
// decode datasets with any of the registered algorithms, evaluate results,
// and verify the per-round step-count accounting.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <chrono>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bibs/algorithms.hpp"
#include "bibs/bibs_search.hpp"
#include "bibs/fitb.hpp"
#include "bibs/io.hpp"
#include "bibs/metrics.hpp"
#include "bibs/ngram.hpp"
#include "bibs/scorer.hpp"
#include "bibs/sequence.hpp"
#include "bibs/synthetic.hpp"
#include "bibs/vocab.hpp"

namespace {

using namespace bibs;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainArgs {
    std::string corpus;
    std::string out;
    int order = 2;
    double smoothing = 0.1;
    int min_count = 1;
};

int cmd_train(const TrainArgs& args) {
    const auto lines = read_lines(args.corpus);
    std::vector<std::string> stream;
    std::vector<std::vector<std::string>> tokenized;
    for (const auto& line : lines) {
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        for (const auto& t : toks) stream.push_back(t);
        tokenized.push_back(std::move(toks));
    }
    auto vocab = std::make_shared<Vocabulary>(build_vocabulary(stream, args.min_count));

    std::vector<TokenSequence> corpus;
    corpus.reserve(tokenized.size());
    for (const auto& toks : tokenized) corpus.push_back(vocab->encode(toks));

    NGramPair pair = ngram_train(corpus, vocab, args.order, args.smoothing);
    const std::string vocab_path = args.out + ".vocab.json";
    vocab->save(vocab_path);
    pair.forward->save(args.out + ".fwd.json", vocab_path);
    pair.backward->save(args.out + ".bwd.json", vocab_path);

    std::cout << "sentences: " << corpus.size() << "\n"
              << "tokens:    " << stream.size() << "\n"
              << "types:     " << vocab->size() << " (including 3 sentinels)\n"
              << "wrote:     " << vocab_path << ", " << args.out << ".fwd.json, " << args.out
              << ".bwd.json\n";
    return 0;
}

struct BlankArgs {
    std::string corpus;
    std::string out;
    std::vector<double> ratios{0.25, 0.5, 0.75};
    std::uint64_t seed = 0;
    int limit = 0;
};

int cmd_blank(const BlankArgs& args) {
    const auto lines = read_lines(args.corpus);
    std::vector<std::vector<std::string>> tokenized;
    int skipped = 0;
    for (const auto& line : lines) {
        auto toks = tokenize(line);
        if (toks.size() < 2) {
            if (!line.empty()) ++skipped;
            continue;
        }
        tokenized.push_back(std::move(toks));
    }
    if (tokenized.empty()) throw std::runtime_error("empty corpus");

    std::vector<std::string> stream;
    for (const auto& toks : tokenized) {
        for (const auto& t : toks) stream.push_back(t);
    }
    Vocabulary vocab = build_vocabulary(stream, 1);

    std::vector<size_t> order(tokenized.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(args.seed);
    std::shuffle(order.begin(), order.end(), rng);
    if (args.limit > 0 && static_cast<size_t>(args.limit) < order.size()) {
        order.resize(static_cast<size_t>(args.limit));
    }

    for (double r : args.ratios) {
        if (r < 0.0 || r > 1.0) throw UsageError("ratio outside [0,1]");
        const int pct = round_half_up(r * 100.0);
        std::vector<BlankedInstance> instances;
        for (size_t idx : order) {
            instances.push_back(make_blank(vocab.encode(tokenized[idx]), BlankSpec{r},
                                           "s" + std::to_string(idx) + "_r" + std::to_string(pct)));
        }
        const std::string path = args.out + ".r" + std::to_string(pct) + ".jsonl";
        save_dataset(path, instances, vocab);
        std::cout << "wrote " << path << " (" << instances.size() << " instances)\n";
    }
    if (skipped > 0) std::cout << "skipped " << skipped << " sentences shorter than 2 tokens\n";
    return 0;
}

struct DecodeArgs {
    std::string models;
    std::string dataset;
    std::string algo;
    std::string out;
    int beam = 5;
    int iters = 4;
    std::uint64_t seed = 0;
    int jobs = 0;
    std::string init_direction = "backward";
    std::string convergence = "unchanged";
    bool allow_sentinels = false;
};

void validate_algo_name(const std::string& name) {
    for (const auto& known : known_algorithms()) {
        if (name == known) return;
    }
    const std::string prefix = "unknown-length:";
    if (name.rfind(prefix, 0) == 0) {
        validate_algo_name(name.substr(prefix.size()));
        return;
    }
    throw UsageError("unknown algorithm: " + name);
}

int cmd_decode(const DecodeArgs& args) {
    validate_algo_name(args.algo);
    if (args.init_direction != "forward" && args.init_direction != "backward") {
        throw UsageError("init-direction must be forward or backward");
    }
    if (args.convergence != "fixed" && args.convergence != "unchanged") {
        throw UsageError("convergence must be fixed or unchanged");
    }

    auto vocab = std::make_shared<Vocabulary>(Vocabulary::load(args.models + ".vocab.json"));
    auto fwd_model =
        std::make_shared<NGramModel>(NGramModel::load(args.models + ".fwd.json", vocab));
    auto bwd_model =
        std::make_shared<NGramModel>(NGramModel::load(args.models + ".bwd.json", vocab));
    if (fwd_model->direction() != Direction::Forward || bwd_model->direction() != Direction::Backward) {
        throw std::runtime_error("model files have unexpected directions");
    }
    NGramScorer forward(fwd_model), backward(bwd_model);

    std::vector<BlankedInstance> instances = load_dataset(args.dataset, *vocab);
    std::cerr << "decoding " << instances.size() << " instances with " << args.algo << "\n";

    DecodeConfig config;
    config.beam_width = args.beam;
    config.meta_iterations = args.iters;
    config.init_direction =
        args.init_direction == "forward" ? Direction::Forward : Direction::Backward;
    config.convergence = args.convergence == "fixed" ? Convergence::FixedIterations
                                                     : Convergence::StopOnUnchangedBeams;
    config.allow_sentinels_in_blank = args.allow_sentinels;
    validate_config(config);

    std::vector<std::string> lines(instances.size());
    parallel_for(instances.size(), args.jobs, [&](size_t i) {
        const BlankedInstance& inst = instances[i];
        FillProblem problem{&inst, &forward, &backward, config};
        nlohmann::json line;
        try {
            DecodeResult r = decode_with_algorithm(args.algo, problem, fnv1a(inst.id, args.seed));
            line = result_to_json(inst.id, args.algo, r, *vocab);
        } catch (const std::exception& e) {
            line = {{"id", inst.id}, {"algorithm", args.algo}, {"error", e.what()}};
        }
        lines[i] = line.dump();
    });

    std::string payload;
    for (const auto& l : lines) {
        payload += l;
        payload += '\n';
    }
    atomic_write_file(args.out, payload);
    std::cerr << "wrote " << args.out << "\n";
    return 0;
}

struct EvalArgs {
    std::string results;
    std::string dataset;
    std::string cider_corpus;
    std::string out;
};

int cmd_eval(const EvalArgs& args) {
    std::vector<nlohmann::json> results;
    for (const auto& line : read_lines(args.results)) {
        if (!line.empty()) results.push_back(nlohmann::json::parse(line));
    }
    if (results.empty()) throw std::runtime_error("no results");

    // One throwaway vocabulary spanning every surface we must score.
    std::vector<std::string> stream;
    std::vector<nlohmann::json> dataset_lines;
    for (const auto& line : read_lines(args.dataset)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        for (const char* field : {"prefix", "suffix", "gold"}) {
            if (j.contains(field)) {
                for (const auto& t : j.at(field)) stream.push_back(t.get<std::string>());
            }
        }
        dataset_lines.push_back(std::move(j));
    }
    for (const auto& r : results) {
        if (r.contains("completion")) {
            for (const auto& t : r.at("completion")) stream.push_back(t.get<std::string>());
        }
    }
    std::vector<std::vector<std::string>> cider_lines;
    if (!args.cider_corpus.empty()) {
        for (const auto& line : read_lines(args.cider_corpus)) {
            auto toks = tokenize(line);
            if (toks.empty()) continue;
            for (const auto& t : toks) stream.push_back(t);
            cider_lines.push_back(std::move(toks));
        }
    }
    if (stream.empty()) throw std::runtime_error("nothing to evaluate");
    Vocabulary vocab = build_vocabulary(stream, 1);

    std::map<std::string, BlankedInstance> by_id;
    for (const auto& j : dataset_lines) {
        BlankedInstance inst = instance_from_json(j, vocab);
        by_id[inst.id] = inst;
    }

    std::vector<std::string> missing;
    for (const auto& r : results) {
        const std::string id = r.at("id").get<std::string>();
        if (!by_id.count(id)) missing.push_back(id);
    }
    if (!missing.empty()) {
        std::string msg = "result ids missing from dataset:";
        for (const auto& id : missing) msg += " " + id;
        throw std::runtime_error(msg);
    }

    std::vector<TokenSequence> references;
    for (const auto& [id, inst] : by_id) {
        if (inst.has_gold) references.push_back(original_sentence(inst));
    }
    if (references.empty()) throw std::runtime_error("dataset has no gold spans to evaluate against");
    CiderCorpus cider_corpus = [&] {
        if (cider_lines.empty()) return CiderCorpus::build_single_reference(references);
        std::vector<TokenSequence> enc;
        for (const auto& toks : cider_lines) enc.push_back(vocab.encode(toks));
        return CiderCorpus::build_single_reference(enc);
    }();

    struct Cell {
        int n = 0;
        int errors = 0;
        double bleu_sum[kMetricMaxOrder] = {0, 0, 0, 0};
        double blank_bleu4_sum = 0.0;
        double cider_sum = 0.0;
        double joint_sum = 0.0;
        double steps_sum = 0.0;
        double ratio_sum = 0.0;
        BleuAccumulator pooled{4};
    };
    std::map<std::string, Cell> cells;

    for (const auto& r : results) {
        Cell& cell = cells[r.at("algorithm").get<std::string>()];
        if (r.contains("error")) {
            ++cell.errors;
            continue;
        }
        const BlankedInstance& inst = by_id.at(r.at("id").get<std::string>());
        if (!inst.has_gold) throw std::runtime_error("instance " + inst.id + " has no gold span");
        TokenSequence completion;
        for (const auto& t : r.at("completion")) completion.push_back(vocab.id(t.get<std::string>()));
        const TokenSequence candidate = assemble(inst, completion);
        const TokenSequence reference = original_sentence(inst);
        ++cell.n;
        for (int n = 1; n <= kMetricMaxOrder; ++n) {
            cell.bleu_sum[n - 1] += bleu(candidate, {reference}, n);
        }
        cell.blank_bleu4_sum += inst.gold.empty() && completion.empty()
                                    ? 1.0
                                    : bleu(completion, {inst.gold}, 4);
        cell.cider_sum += cider(candidate, {reference}, cider_corpus);
        cell.joint_sum += r.at("joint_logp").get<double>();
        cell.steps_sum += r.at("advance_steps").get<double>();
        cell.ratio_sum += inst.sentence_len() > 0
                              ? static_cast<double>(inst.blank_width) / inst.sentence_len()
                              : 0.0;
        cell.pooled.add(candidate, {reference});
    }

    std::ostringstream table;
    table << std::left << std::setw(22) << "algorithm" << std::right << std::setw(6) << "r"
          << std::setw(7) << "n" << std::setw(7) << "err" << std::setw(9) << "BLEU-1"
          << std::setw(9) << "BLEU-2" << std::setw(9) << "BLEU-3" << std::setw(9) << "BLEU-4"
          << std::setw(9) << "cBLEU4" << std::setw(9) << "CIDEr" << std::setw(9) << "bBLEU4"
          << std::setw(11) << "joint" << std::setw(10) << "steps" << '\n';
    nlohmann::json out_rows = nlohmann::json::array();
    for (auto& [algo, cell] : cells) {
        const double d = cell.n > 0 ? static_cast<double>(cell.n) : 1.0;
        table << std::left << std::setw(22) << algo << std::right << std::fixed
              << std::setprecision(2) << std::setw(6) << cell.ratio_sum / d << std::setw(7)
              << cell.n << std::setw(7) << cell.errors << std::setprecision(3);
        for (int n = 0; n < kMetricMaxOrder; ++n) table << std::setw(9) << cell.bleu_sum[n] / d;
        table << std::setw(9) << (cell.n ? cell.pooled.value() : 0.0) << std::setw(9)
              << cell.cider_sum / d << std::setw(9) << cell.blank_bleu4_sum / d
              << std::setprecision(2) << std::setw(11) << cell.joint_sum / d << std::setprecision(1)
              << std::setw(10) << cell.steps_sum / d << '\n';
        out_rows.push_back({{"algorithm", algo},
                            {"instances", cell.n},
                            {"errors", cell.errors},
                            {"ratio", cell.ratio_sum / d},
                            {"bleu1", cell.bleu_sum[0] / d},
                            {"bleu2", cell.bleu_sum[1] / d},
                            {"bleu3", cell.bleu_sum[2] / d},
                            {"bleu4", cell.bleu_sum[3] / d},
                            {"corpus_bleu4", cell.n ? cell.pooled.value() : 0.0},
                            {"cider", cell.cider_sum / d},
                            {"blank_bleu4", cell.blank_bleu4_sum / d},
                            {"mean_joint_logp", cell.joint_sum / d},
                            {"mean_advance_steps", cell.steps_sum / d}});
    }
    std::cout << table.str();
    if (!args.out.empty()) {
        atomic_write_file(args.out, nlohmann::json{{"version", 1}, {"cells", out_rows}}.dump(2) + "\n");
        std::cerr << "wrote " << args.out << "\n";
    }
    return 0;
}

struct BenchArgs {
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_bench(const BenchArgs& args) {
    std::cerr << "training bigram scorers on a synthetic corpus\n";
    ExperimentSpec spec;
    spec.corpus_lines = generate_synthetic_corpus(args.seed + 1, 2000);
    spec.test_count = 1;
    spec.seed = args.seed;
    spec.ngram_order = 2;
    spec.smoothing = 0.1;
    PreparedCorpus corpus = prepare_corpus(spec);
    NGramPair pair = ngram_train(corpus.train, corpus.vocab, 2, 0.1);
    auto fwd = std::make_shared<InstrumentedScorer>(std::make_shared<NGramScorer>(pair.forward));
    auto bwd = std::make_shared<InstrumentedScorer>(std::make_shared<NGramScorer>(pair.backward));

    std::cout << std::right << std::setw(4) << "B" << std::setw(4) << "M" << std::setw(4) << "w"
              << std::setw(10) << "expected" << std::setw(10) << "measured" << std::setw(10)
              << "replay" << std::setw(12) << "instrument" << std::setw(7) << "ok" << std::setw(10)
              << "ms" << '\n';
    nlohmann::json rows = nlohmann::json::array();
    bool all_ok = true;
    for (int b : {1, 3, 5}) {
        for (int m : {1, 2, 4}) {
            for (int w : {2, 5, 10}) {
                BlankedInstance inst;
                inst.id = "bench";
                inst.prefix = {3, 4};
                inst.suffix = {5, 6};
                inst.blank_width = w;
                inst.known_width = true;
                inst.has_gold = false;

                DecodeConfig config;
                config.beam_width = b;
                config.meta_iterations = m;
                config.convergence = Convergence::FixedIterations;
                FillProblem problem{&inst, fwd.get(), bwd.get(), config};

                fwd->reset_count();
                bwd->reset_count();
                const auto t0 = std::chrono::steady_clock::now();
                DecodeResult r = bibs_decode(problem);
                const auto t1 = std::chrono::steady_clock::now();
                const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

                const std::uint64_t expected = 2ull * b * m * w;
                const std::uint64_t instrumented = fwd->advance_count() + bwd->advance_count();
                const bool ok = r.diagnostics.update_steps == expected &&
                                instrumented == r.diagnostics.total_steps();
                all_ok = all_ok && ok;
                std::cout << std::setw(4) << b << std::setw(4) << m << std::setw(4) << w
                          << std::setw(10) << expected << std::setw(10)
                          << r.diagnostics.update_steps << std::setw(10)
                          << r.diagnostics.replay_steps << std::setw(12) << instrumented
                          << std::setw(7) << (ok ? "yes" : "NO") << std::fixed
                          << std::setprecision(2) << std::setw(10) << ms << '\n';
                rows.push_back({{"B", b},
                                {"M", m},
                                {"w", w},
                                {"expected", expected},
                                {"measured", r.diagnostics.update_steps},
                                {"replay", r.diagnostics.replay_steps},
                                {"instrumented", instrumented},
                                {"ok", ok},
                                {"wall_ms", ms}});
            }
        }
    }
    if (!args.out.empty()) {
        atomic_write_file(args.out,
                          nlohmann::json{{"version", 1}, {"rows", rows}, {"all_ok", all_ok}}.dump(2) +
                              "\n");
        std::cerr << "wrote " << args.out << "\n";
    }
    if (!all_ok) throw std::runtime_error("step-count verification failed");
    std::cout << "all step counts match 2*B*M*w\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fill-in-the-blank sequence decoding with bidirectional beam search"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "train forward/backward n-gram models");
    train->add_option("--corpus", train_args.corpus, "corpus file, one sentence per line")
        ->required();
    train->add_option("--order", train_args.order, "n-gram order")->check(CLI::PositiveNumber);
    train->add_option("--smoothing", train_args.smoothing, "add-k smoothing constant");
    train->add_option("--min-count", train_args.min_count, "vocabulary frequency threshold");
    train->add_option("--out", train_args.out, "output prefix")->required();

    BlankArgs blank_args;
    auto* blank = app.add_subcommand("blank", "generate fill-in-the-blank datasets");
    blank->add_option("--corpus", blank_args.corpus, "corpus file")->required();
    blank->add_option("--ratio", blank_args.ratios, "removal ratios");
    blank->add_option("--seed", blank_args.seed, "shuffle seed");
    blank->add_option("--limit", blank_args.limit, "max sentences (0 = all)");
    blank->add_option("--out", blank_args.out, "output prefix")->required();

    DecodeArgs decode_args;
    auto* decode = app.add_subcommand("decode", "decode a dataset");
    decode->add_option("--models", decode_args.models, "model prefix from train")->required();
    decode->add_option("--dataset", decode_args.dataset, "dataset JSONL")->required();
    decode->add_option("--algo", decode_args.algo, "algorithm name")->required();
    decode->add_option("--beam", decode_args.beam, "beam width");
    decode->add_option("--iters", decode_args.iters, "meta-iteration budget");
    decode->add_option("--seed", decode_args.seed, "sampling seed");
    decode->add_option("--jobs", decode_args.jobs, "worker threads (0 = hardware)");
    decode->add_option("--init-direction", decode_args.init_direction, "forward|backward");
    decode->add_option("--convergence", decode_args.convergence, "fixed|unchanged");
    decode->add_flag("--allow-sentinels", decode_args.allow_sentinels,
                     "allow sentinel tokens inside the blank");
    decode->add_option("--out", decode_args.out, "results JSONL path")->required();

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "score results against a dataset");
    eval->add_option("--results", eval_args.results, "results JSONL")->required();
    eval->add_option("--dataset", eval_args.dataset, "dataset JSONL with gold spans")->required();
    eval->add_option("--cider-corpus", eval_args.cider_corpus,
                     "corpus for CIDEr document frequencies");
    eval->add_option("--out", eval_args.out, "metrics JSON path");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "verify per-round step-count accounting");
    bench->add_option("--seed", bench_args.seed, "corpus seed");
    bench->add_option("--out", bench_args.out, "verification JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(train_args);
        if (blank->parsed()) return cmd_blank(blank_args);
        if (decode->parsed()) return cmd_decode(decode_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (bench->parsed()) return cmd_bench(bench_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
