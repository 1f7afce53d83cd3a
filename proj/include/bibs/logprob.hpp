#pragma once

// Log-domain probability arithmetic shared by scorers and decoders.
// All probabilities in this library are natural-log doubles. Zero
// probability is IEEE -inf, which is absorbing under addition, so chains
// of products never underflow to garbage.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bibs {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(double x) { return std::isinf(x) && x < 0.0; }

// log(exp(a) + exp(b)) without leaving the log domain.
inline double log_add(double a, double b) {
    if (is_log_zero(a)) return b;
    if (is_log_zero(b)) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(const std::vector<double>& xs) {
    double hi = kLogZero;
    for (double x : xs) hi = std::max(hi, x);
    if (is_log_zero(hi)) return kLogZero;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

// Normalized log-probabilities from arbitrary finite scores. Entries are
// clamped to <= 0 so downstream per-position log-prob invariants hold even
// when the max entry rounds a hair above zero.
inline std::vector<double> log_softmax(const std::vector<double>& scores) {
    if (scores.empty()) throw std::invalid_argument("log_softmax: empty input");
    const double lse = log_sum_exp(scores);
    std::vector<double> out(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::min(0.0, scores[i] - lse);
    }
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& scores) {
    std::vector<double> out = log_softmax(scores);
    for (double& x : out) x = std::exp(x);
    return out;
}

}  // namespace bibs
