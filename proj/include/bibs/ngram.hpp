#pragma once

// Add-k smoothed n-gram language model, the desk-scale conditional provider.
// A forward model counts left-to-right transitions over BOS-padded,
// EOS-terminated sentences. A backward model is the same machinery trained
// on reversed sentences, so its BOS marks the sentence end and its EOS the
// sentence start. Smoothing keeps every conditional strictly positive:
//
//     p(y | ctx) = (count(ctx, y) + k) / (count(ctx) + k * |V|)

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibs/io.hpp"
#include "bibs/scorer.hpp"
#include "bibs/vocab.hpp"

namespace bibs {

class NGramModel {
public:
    struct ContextCounts {
        std::map<TokenId, std::int64_t> next;
        std::int64_t total = 0;
    };

    NGramModel(std::shared_ptr<const Vocabulary> vocab, int order, double k, Direction dir)
        : vocab_(std::move(vocab)), order_(order), k_(k), dir_(dir) {
        if (!vocab_) throw std::invalid_argument("ngram: null vocabulary");
        if (order_ < 1) throw std::invalid_argument("ngram: order must be >= 1");
        if (!(k_ > 0.0)) throw std::invalid_argument("ngram: smoothing k must be > 0");
    }

    int order() const { return order_; }
    double smoothing() const { return k_; }
    Direction direction() const { return dir_; }
    const Vocabulary& vocab() const { return *vocab_; }
    std::shared_ptr<const Vocabulary> vocab_ptr() const { return vocab_; }

    // Counts one sentence, already reversed by the caller for backward
    // models. Contexts of every length up to order-1 are accumulated.
    void add_sentence(const TokenSequence& sentence) {
        TokenSequence framed;
        framed.reserve(sentence.size() + static_cast<size_t>(order_));
        for (int i = 0; i < order_ - 1; ++i) framed.push_back(Vocabulary::kBos);
        framed.insert(framed.end(), sentence.begin(), sentence.end());
        framed.push_back(Vocabulary::kEos);
        const int pad = order_ - 1;
        for (size_t pos = static_cast<size_t>(pad); pos < framed.size(); ++pos) {
            for (int len = 0; len <= pad; ++len) {
                TokenSequence ctx(framed.begin() + pos - len, framed.begin() + pos);
                auto& cell = counts_[ctx];
                ++cell.next[framed[pos]];
                ++cell.total;
            }
        }
    }

    void add_count(const TokenSequence& context, TokenId token, std::int64_t count) {
        if (static_cast<int>(context.size()) > order_ - 1) {
            throw std::invalid_argument("ngram: context longer than order-1");
        }
        auto& cell = counts_[context];
        cell.next[token] += count;
        cell.total += count;
    }

    double log_conditional(const TokenSequence& context, TokenId token) const {
        const ContextCounts* cell = find(context);
        const double v = static_cast<double>(vocab_->size());
        const double num = (cell ? count_of(*cell, token) : 0.0) + k_;
        const double den = (cell ? static_cast<double>(cell->total) : 0.0) + k_ * v;
        return std::log(num) - std::log(den);
    }

    std::vector<double> log_distribution(const TokenSequence& context) const {
        const ContextCounts* cell = find(context);
        const double v = static_cast<double>(vocab_->size());
        const double den = (cell ? static_cast<double>(cell->total) : 0.0) + k_ * v;
        std::vector<double> out(static_cast<size_t>(vocab_->size()), std::log(k_) - std::log(den));
        if (cell) {
            for (const auto& [tok, c] : cell->next) {
                out[static_cast<size_t>(tok)] = std::log(static_cast<double>(c) + k_) - std::log(den);
            }
        }
        return out;
    }

    const std::map<TokenSequence, ContextCounts>& contexts() const { return counts_; }

    nlohmann::json to_json(const std::string& vocab_ref = "") const {
        nlohmann::json tables = nlohmann::json::object();
        for (const auto& [ctx, cell] : counts_) {
            nlohmann::json row = nlohmann::json::object();
            for (const auto& [tok, c] : cell.next) row[std::to_string(tok)] = c;
            tables[join_ids(ctx)] = std::move(row);
        }
        return {{"version", 1},
                {"n", order_},
                {"k", k_},
                {"direction", to_string(dir_)},
                {"vocab", vocab_ref},
                {"vocab_size", vocab_->size()},
                {"counts", std::move(tables)}};
    }

    static NGramModel from_json(const nlohmann::json& j, std::shared_ptr<const Vocabulary> vocab) {
        if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported ngram model version");
        if (j.at("vocab_size").get<TokenId>() != vocab->size()) {
            throw std::runtime_error("ngram model vocabulary size mismatch");
        }
        Direction dir = j.at("direction").get<std::string>() == "backward" ? Direction::Backward
                                                                           : Direction::Forward;
        NGramModel model(std::move(vocab), j.at("n").get<int>(), j.at("k").get<double>(), dir);
        for (const auto& [ctx_key, row] : j.at("counts").items()) {
            TokenSequence ctx = split_ids(ctx_key);
            for (const auto& [tok_key, c] : row.items()) {
                model.add_count(ctx, static_cast<TokenId>(std::stol(tok_key)), c.get<std::int64_t>());
            }
        }
        return model;
    }

    void save(const std::string& path, const std::string& vocab_ref = "") const {
        atomic_write_file(path, to_json(vocab_ref).dump() + "\n");
    }

    static NGramModel load(const std::string& path, std::shared_ptr<const Vocabulary> vocab) {
        return from_json(nlohmann::json::parse(read_file(path)), std::move(vocab));
    }

private:
    const ContextCounts* find(const TokenSequence& ctx) const {
        auto it = counts_.find(ctx);
        return it == counts_.end() ? nullptr : &it->second;
    }

    static double count_of(const ContextCounts& cell, TokenId token) {
        auto it = cell.next.find(token);
        return it == cell.next.end() ? 0.0 : static_cast<double>(it->second);
    }

    static std::string join_ids(const TokenSequence& ids) {
        std::ostringstream ss;
        for (size_t i = 0; i < ids.size(); ++i) {
            if (i) ss << ' ';
            ss << ids[i];
        }
        return ss.str();
    }

    static TokenSequence split_ids(const std::string& key) {
        TokenSequence out;
        std::istringstream ss(key);
        long v;
        while (ss >> v) out.push_back(static_cast<TokenId>(v));
        return out;
    }

    std::shared_ptr<const Vocabulary> vocab_;
    int order_;
    double k_;
    Direction dir_;
    std::map<TokenSequence, ContextCounts> counts_;
};

// Scorer adapter. State is the last order-1 consumed ids, BOS-padded, so an
// explicit leading BOS advance is idempotent at the sequence start.
class NGramScorer : public Scorer {
public:
    explicit NGramScorer(std::shared_ptr<const NGramModel> model) : model_(std::move(model)) {
        if (!model_) throw std::invalid_argument("ngram scorer: null model");
    }

    Direction direction() const override { return model_->direction(); }
    const Vocabulary& vocab() const override { return model_->vocab(); }

    RecurrentState initial_state(const std::vector<double>* /*conditioning*/ = nullptr) const override {
        // n-gram models have no use for a dense conditioning vector.
        return make_state<TokenSequence>(
            TokenSequence(static_cast<size_t>(model_->order() - 1), Vocabulary::kBos));
    }

    RecurrentState advance(const RecurrentState& state, TokenId token) const override {
        if (!model_->vocab().contains_id(token)) throw std::out_of_range("ngram advance: bad token id");
        TokenSequence ctx = state_as<TokenSequence>(state);
        ctx.push_back(token);
        const size_t keep = static_cast<size_t>(model_->order() - 1);
        if (ctx.size() > keep) ctx.erase(ctx.begin(), ctx.end() - keep);
        return make_state<TokenSequence>(std::move(ctx));
    }

    std::vector<double> log_distribution(const RecurrentState& state) const override {
        return model_->log_distribution(state_as<TokenSequence>(state));
    }

private:
    std::shared_ptr<const NGramModel> model_;
};

struct NGramPair {
    std::shared_ptr<NGramModel> forward;
    std::shared_ptr<NGramModel> backward;
};

// Trains the forward model on the corpus and the backward model on the
// reversed corpus.
inline NGramPair ngram_train(const std::vector<TokenSequence>& corpus,
                             std::shared_ptr<const Vocabulary> vocab, int order, double k) {
    if (corpus.empty()) throw std::runtime_error("ngram_train: empty corpus");
    NGramPair pair{std::make_shared<NGramModel>(vocab, order, k, Direction::Forward),
                   std::make_shared<NGramModel>(vocab, order, k, Direction::Backward)};
    for (const auto& sentence : corpus) {
        pair.forward->add_sentence(sentence);
        TokenSequence reversed(sentence.rbegin(), sentence.rend());
        pair.backward->add_sentence(reversed);
    }
    return pair;
}

}  // namespace bibs
