#pragma once

// Minimal Elman recurrent scorer:
//
//     h' = tanh(W_x * emb(token) + W_h * h + b_h)
//     p  = softmax(W_y * h' + b_y)
//
// tanh is used for the recurrence throughout. Weights are loaded, never
// trained here; an optional dense conditioning vector x0 is consumed as
// step zero when present. LSTM/GRU cells would slot in behind the same
// scorer contract but are not shipped.

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bibs/io.hpp"
#include "bibs/scorer.hpp"
#include "bibs/vocab.hpp"

namespace bibs {

struct RnnWeights {
    int hidden = 0;     // H
    int embed = 0;      // E
    int vocab_size = 0; // V

    // row-major: w_x is H x E, w_h is H x H, w_y is V x H, emb is V x E
    std::vector<double> w_x;
    std::vector<double> w_h;
    std::vector<double> b_h;
    std::vector<double> w_y;
    std::vector<double> b_y;
    std::vector<double> emb;
    std::optional<std::vector<double>> x0;

    void validate() const {
        auto expect = [](const char* name, size_t got, size_t want) {
            if (got != want) {
                throw std::runtime_error(std::string("rnn weights: ") + name + " has " +
                                         std::to_string(got) + " entries, expected " +
                                         std::to_string(want));
            }
        };
        if (hidden < 1 || embed < 1 || vocab_size < 1) {
            throw std::runtime_error("rnn weights: non-positive dimension");
        }
        const size_t h = static_cast<size_t>(hidden);
        const size_t e = static_cast<size_t>(embed);
        const size_t v = static_cast<size_t>(vocab_size);
        expect("W_x", w_x.size(), h * e);
        expect("W_h", w_h.size(), h * h);
        expect("b_h", b_h.size(), h);
        expect("W_y", w_y.size(), v * h);
        expect("b_y", b_y.size(), v);
        expect("E_tok", emb.size(), v * e);
        if (x0) expect("x0", x0->size(), e);
        for (const auto* vec : {&w_x, &w_h, &b_h, &w_y, &b_y, &emb}) {
            for (double x : *vec) {
                if (!std::isfinite(x)) throw std::runtime_error("rnn weights: non-finite entry");
            }
        }
        if (x0) {
            for (double x : *x0) {
                if (!std::isfinite(x)) throw std::runtime_error("rnn weights: non-finite entry");
            }
        }
    }

    nlohmann::json to_json() const {
        nlohmann::json j{{"version", 1},
                         {"dims", {{"H", hidden}, {"E", embed}, {"V", vocab_size}}},
                         {"W_x", w_x},
                         {"W_h", w_h},
                         {"b_h", b_h},
                         {"W_y", w_y},
                         {"b_y", b_y},
                         {"E_tok", emb}};
        if (x0) j["x0"] = *x0;
        return j;
    }

    static RnnWeights from_json(const nlohmann::json& j) {
        if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported rnn weights version");
        RnnWeights w;
        w.hidden = j.at("dims").at("H").get<int>();
        w.embed = j.at("dims").at("E").get<int>();
        w.vocab_size = j.at("dims").at("V").get<int>();
        w.w_x = j.at("W_x").get<std::vector<double>>();
        w.w_h = j.at("W_h").get<std::vector<double>>();
        w.b_h = j.at("b_h").get<std::vector<double>>();
        w.w_y = j.at("W_y").get<std::vector<double>>();
        w.b_y = j.at("b_y").get<std::vector<double>>();
        w.emb = j.at("E_tok").get<std::vector<double>>();
        if (j.contains("x0")) w.x0 = j.at("x0").get<std::vector<double>>();
        w.validate();
        return w;
    }

    void save(const std::string& path) const { atomic_write_file(path, to_json().dump() + "\n"); }

    static RnnWeights load(const std::string& path) {
        return from_json(nlohmann::json::parse(read_file(path)));
    }
};

namespace detail {

// h_out = tanh(W_x * x + W_h * h + b_h)
inline std::vector<double> elman_cell(const RnnWeights& w, const std::vector<double>& x,
                                      const std::vector<double>& h) {
    const int hh = w.hidden;
    const int e = w.embed;
    std::vector<double> out(static_cast<size_t>(hh));
    for (int i = 0; i < hh; ++i) {
        double acc = w.b_h[static_cast<size_t>(i)];
        const double* wx_row = &w.w_x[static_cast<size_t>(i) * static_cast<size_t>(e)];
        for (int jx = 0; jx < e; ++jx) acc += wx_row[jx] * x[static_cast<size_t>(jx)];
        const double* wh_row = &w.w_h[static_cast<size_t>(i) * static_cast<size_t>(hh)];
        for (int jh = 0; jh < hh; ++jh) acc += wh_row[jh] * h[static_cast<size_t>(jh)];
        if (!std::isfinite(acc)) throw std::runtime_error("numeric overflow in rnn_step");
        out[static_cast<size_t>(i)] = std::tanh(acc);
    }
    return out;
}

}  // namespace detail

class ElmanScorer : public Scorer {
public:
    ElmanScorer(std::shared_ptr<const RnnWeights> weights, std::shared_ptr<const Vocabulary> vocab,
                Direction dir)
        : weights_(std::move(weights)), vocab_(std::move(vocab)), dir_(dir) {
        if (!weights_ || !vocab_) throw std::invalid_argument("elman scorer: null argument");
        weights_->validate();
        if (weights_->vocab_size != vocab_->size()) {
            throw std::invalid_argument("elman scorer: vocabulary size mismatch");
        }
    }

    Direction direction() const override { return dir_; }
    const Vocabulary& vocab() const override { return *vocab_; }

    RecurrentState initial_state(const std::vector<double>* conditioning = nullptr) const override {
        std::vector<double> h(static_cast<size_t>(weights_->hidden), 0.0);
        const std::vector<double>* x0 = conditioning ? conditioning : (weights_->x0 ? &*weights_->x0 : nullptr);
        if (x0) {
            if (static_cast<int>(x0->size()) != weights_->embed) {
                throw std::invalid_argument("conditioning vector dimension mismatch");
            }
            h = detail::elman_cell(*weights_, *x0, h);
        }
        return make_state<std::vector<double>>(std::move(h));
    }

    RecurrentState advance(const RecurrentState& state, TokenId token) const override {
        if (!vocab_->contains_id(token)) throw std::out_of_range("rnn advance: bad token id");
        const auto& h = state_as<std::vector<double>>(state);
        std::vector<double> x(weights_->emb.begin() + static_cast<size_t>(token) * static_cast<size_t>(weights_->embed),
                              weights_->emb.begin() + (static_cast<size_t>(token) + 1) * static_cast<size_t>(weights_->embed));
        return make_state<std::vector<double>>(detail::elman_cell(*weights_, x, h));
    }

    std::vector<double> log_distribution(const RecurrentState& state) const override {
        return log_softmax(output_logits(state, 1.0));
    }

    // W_y * h + bias_scale * b_y. bias_scale = 0.5 gives the half-bias logits
    // under which the product of two directional softmaxes reproduces a
    // single combined softmax exactly.
    std::vector<double> output_logits(const RecurrentState& state, double bias_scale) const {
        const auto& h = state_as<std::vector<double>>(state);
        const int v = weights_->vocab_size;
        const int hh = weights_->hidden;
        std::vector<double> logits(static_cast<size_t>(v));
        for (int i = 0; i < v; ++i) {
            double acc = bias_scale * weights_->b_y[static_cast<size_t>(i)];
            const double* row = &weights_->w_y[static_cast<size_t>(i) * static_cast<size_t>(hh)];
            for (int jh = 0; jh < hh; ++jh) acc += row[jh] * h[static_cast<size_t>(jh)];
            if (!std::isfinite(acc)) throw std::runtime_error("numeric overflow in rnn_step");
            logits[static_cast<size_t>(i)] = acc;
        }
        return logits;
    }

private:
    std::shared_ptr<const RnnWeights> weights_;
    std::shared_ptr<const Vocabulary> vocab_;
    Direction dir_;
};

// One recurrence step: new state plus the log distribution it induces.
inline std::pair<RecurrentState, std::vector<double>> rnn_step(const ElmanScorer& scorer,
                                                               const RecurrentState& state,
                                                               TokenId token) {
    RecurrentState next = scorer.advance(state, token);
    return {next, scorer.log_distribution(next)};
}

}  // namespace bibs
