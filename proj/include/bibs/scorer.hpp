#pragma once

// The one seam every decoder shares: a directional conditional-distribution
// provider. A forward scorer conditions on the past; a backward scorer
// conditions on the future and therefore consumes tokens right-to-left.
// Direction is metadata on the instance, not a separate code path.
//
// States are values. advance() returns a fresh state and never mutates its
// input, so beams can share histories freely.

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bibs/beam.hpp"
#include "bibs/logprob.hpp"
#include "bibs/vocab.hpp"

namespace bibs {

struct RecurrentState {
    std::shared_ptr<const void> impl;
};

template <typename T>
RecurrentState make_state(T value) {
    return RecurrentState{std::make_shared<const T>(std::move(value))};
}

template <typename T>
const T& state_as(const RecurrentState& s) {
    if (!s.impl) throw std::runtime_error("empty recurrent state");
    return *static_cast<const T*>(s.impl.get());
}

class Scorer {
public:
    virtual ~Scorer() = default;

    virtual Direction direction() const = 0;
    virtual const Vocabulary& vocab() const = 0;

    // State before any token has been consumed. `conditioning` is an optional
    // dense vector consumed as step zero by backends that support it.
    virtual RecurrentState initial_state(const std::vector<double>* conditioning = nullptr) const = 0;

    virtual RecurrentState advance(const RecurrentState& state, TokenId token) const = 0;

    // Normalized natural-log distribution over the full vocabulary for the
    // next token in this scorer's direction.
    virtual std::vector<double> log_distribution(const RecurrentState& state) const = 0;
};

// Renormalized product of two directional distributions: combining logit (or
// log-prob) vectors from two oppositely directed models by softmax of their
// sum equals the elementwise product of their softmaxes, renormalized.
inline std::vector<double> bidir_combine(const std::vector<double>& fwd_logits,
                                         const std::vector<double>& bwd_logits) {
    if (fwd_logits.size() != bwd_logits.size()) {
        throw std::invalid_argument("bidir_combine: length mismatch");
    }
    if (fwd_logits.empty()) throw std::invalid_argument("bidir_combine: empty input");
    std::vector<double> sum(fwd_logits.size());
    for (size_t i = 0; i < sum.size(); ++i) sum[i] = fwd_logits[i] + bwd_logits[i];
    return log_softmax(sum);
}

// Pass-through wrapper with an advance counter. The counter is atomic; the
// wrapped model may be shared by concurrent decode workers.
class InstrumentedScorer : public Scorer {
public:
    explicit InstrumentedScorer(std::shared_ptr<const Scorer> inner) : inner_(std::move(inner)) {
        if (!inner_) throw std::invalid_argument("instrumented: null scorer");
    }

    Direction direction() const override { return inner_->direction(); }
    const Vocabulary& vocab() const override { return inner_->vocab(); }

    RecurrentState initial_state(const std::vector<double>* conditioning = nullptr) const override {
        return inner_->initial_state(conditioning);
    }

    RecurrentState advance(const RecurrentState& state, TokenId token) const override {
        advances_.fetch_add(1, std::memory_order_relaxed);
        return inner_->advance(state, token);
    }

    std::vector<double> log_distribution(const RecurrentState& state) const override {
        return inner_->log_distribution(state);
    }

    std::uint64_t advance_count() const { return advances_.load(std::memory_order_relaxed); }
    void reset_count() { advances_.store(0, std::memory_order_relaxed); }

private:
    std::shared_ptr<const Scorer> inner_;
    mutable std::atomic<std::uint64_t> advances_{0};
};

}  // namespace bibs
