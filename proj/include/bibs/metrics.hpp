#pragma once

// Sentence- and corpus-level generation metrics.
//
// BLEU: geometric mean of clipped n-gram precisions times the brevity
// penalty exp(min(0, 1 - closest_ref_len / cand_len)). Sentence scores use
// no smoothing: any zero precision gives 0. Orders where the candidate is
// too short to have any n-gram are skipped, so identity scores 1.0 at every
// max_n. Corpus-level BLEU pools counts across sentence pairs; it is a
// different statistic from the mean of sentence scores and is reported
// under a separate name.
//
// CIDEr: mean over n = 1..4 of the average cosine similarity between
// TF-IDF-weighted n-gram vectors of the candidate and each reference,
// scaled by 10. IDF = log(corpus size / document frequency) with document
// frequency clamped to >= 1; a single-document corpus uses log-size 1 so a
// self-match still scores 10 (a quirk inherited from the reference
// implementations of this metric). No stemming, no length penalty.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "bibs/vocab.hpp"

namespace bibs {

inline constexpr int kMetricMaxOrder = 4;

struct NGramStats {
    // counts[n-1]: multiset of n-grams of the sequence, n = 1..kMetricMaxOrder
    std::array<std::map<TokenSequence, int>, kMetricMaxOrder> counts;

    static NGramStats of(const TokenSequence& seq, int max_n = kMetricMaxOrder) {
        NGramStats s;
        const int len = static_cast<int>(seq.size());
        for (int n = 1; n <= max_n; ++n) {
            for (int i = 0; i + n <= len; ++i) {
                TokenSequence gram(seq.begin() + i, seq.begin() + i + n);
                ++s.counts[static_cast<size_t>(n - 1)][gram];
            }
        }
        return s;
    }

    int total(int n) const {
        int t = 0;
        for (const auto& [gram, c] : counts[static_cast<size_t>(n - 1)]) t += c;
        return t;
    }
};

namespace detail {

struct ClippedCounts {
    long long matched = 0;
    long long total = 0;
};

inline ClippedCounts clipped_matches(const NGramStats& cand, const std::vector<NGramStats>& refs, int n) {
    ClippedCounts out;
    for (const auto& [gram, c] : cand.counts[static_cast<size_t>(n - 1)]) {
        int best = 0;
        for (const auto& r : refs) {
            auto it = r.counts[static_cast<size_t>(n - 1)].find(gram);
            if (it != r.counts[static_cast<size_t>(n - 1)].end()) best = std::max(best, it->second);
        }
        out.matched += std::min(c, best);
        out.total += c;
    }
    return out;
}

inline long long closest_ref_len(long long cand_len, const std::vector<TokenSequence>& refs) {
    long long best = static_cast<long long>(refs[0].size());
    for (const auto& r : refs) {
        const long long len = static_cast<long long>(r.size());
        const long long d_new = std::llabs(len - cand_len);
        const long long d_old = std::llabs(best - cand_len);
        if (d_new < d_old || (d_new == d_old && len < best)) best = len;
    }
    return best;
}

inline double brevity_penalty(long long cand_len, long long ref_len) {
    if (cand_len >= ref_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

inline double bleu_from_counts(const std::array<ClippedCounts, kMetricMaxOrder>& levels, int max_n,
                               long long cand_len, long long ref_len) {
    if (cand_len == 0) return 0.0;
    double log_prec_sum = 0.0;
    int included = 0;
    for (int n = 1; n <= max_n; ++n) {
        const auto& c = levels[static_cast<size_t>(n - 1)];
        if (c.total == 0) continue;  // candidate too short for this order
        if (c.matched == 0) return 0.0;
        log_prec_sum += std::log(static_cast<double>(c.matched) / static_cast<double>(c.total));
        ++included;
    }
    if (included == 0) return 0.0;
    return brevity_penalty(cand_len, ref_len) * std::exp(log_prec_sum / included);
}

}  // namespace detail

inline double bleu(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
                   int max_n = kMetricMaxOrder) {
    if (references.empty()) throw std::invalid_argument("bleu: no references");
    if (max_n < 1 || max_n > kMetricMaxOrder) throw std::invalid_argument("bleu: bad max_n");
    if (candidate.empty()) return 0.0;

    const NGramStats cand = NGramStats::of(candidate, max_n);
    std::vector<NGramStats> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(NGramStats::of(r, max_n));

    std::array<detail::ClippedCounts, kMetricMaxOrder> levels{};
    for (int n = 1; n <= max_n; ++n) {
        levels[static_cast<size_t>(n - 1)] = detail::clipped_matches(cand, refs, n);
    }
    return detail::bleu_from_counts(levels, max_n, static_cast<long long>(candidate.size()),
                                    detail::closest_ref_len(static_cast<long long>(candidate.size()),
                                                            references));
}

// Pooled corpus-level BLEU.
class BleuAccumulator {
public:
    explicit BleuAccumulator(int max_n = kMetricMaxOrder) : max_n_(max_n) {
        if (max_n < 1 || max_n > kMetricMaxOrder) throw std::invalid_argument("bleu: bad max_n");
    }

    void add(const TokenSequence& candidate, const std::vector<TokenSequence>& references) {
        if (references.empty()) throw std::invalid_argument("bleu: no references");
        const NGramStats cand = NGramStats::of(candidate, max_n_);
        std::vector<NGramStats> refs;
        refs.reserve(references.size());
        for (const auto& r : references) refs.push_back(NGramStats::of(r, max_n_));
        for (int n = 1; n <= max_n_; ++n) {
            const auto c = detail::clipped_matches(cand, refs, n);
            levels_[static_cast<size_t>(n - 1)].matched += c.matched;
            levels_[static_cast<size_t>(n - 1)].total += c.total;
        }
        cand_len_ += static_cast<long long>(candidate.size());
        ref_len_ += detail::closest_ref_len(static_cast<long long>(candidate.size()), references);
    }

    double value() const { return detail::bleu_from_counts(levels_, max_n_, cand_len_, ref_len_); }

private:
    int max_n_;
    std::array<detail::ClippedCounts, kMetricMaxOrder> levels_{};
    long long cand_len_ = 0;
    long long ref_len_ = 0;
};

class CiderCorpus {
public:
    // Each document is one reference set; an n-gram's document frequency is
    // the number of documents whose references contain it.
    static CiderCorpus build(const std::vector<std::vector<TokenSequence>>& documents) {
        if (documents.empty()) throw std::invalid_argument("cider corpus: empty");
        CiderCorpus c;
        c.size_ = static_cast<long long>(documents.size());
        for (const auto& refs : documents) {
            std::array<std::map<TokenSequence, int>, kMetricMaxOrder> seen;
            for (const auto& r : refs) {
                NGramStats s = NGramStats::of(r);
                for (int n = 1; n <= kMetricMaxOrder; ++n) {
                    for (const auto& [gram, cnt] : s.counts[static_cast<size_t>(n - 1)]) {
                        seen[static_cast<size_t>(n - 1)][gram] = 1;
                    }
                }
            }
            for (int n = 1; n <= kMetricMaxOrder; ++n) {
                for (const auto& [gram, one] : seen[static_cast<size_t>(n - 1)]) {
                    c.df_[static_cast<size_t>(n - 1)][gram] += 1;
                }
            }
        }
        c.log_size_ = c.size_ == 1 ? 1.0 : std::log(static_cast<double>(c.size_));
        return c;
    }

    static CiderCorpus build_single_reference(const std::vector<TokenSequence>& sentences) {
        std::vector<std::vector<TokenSequence>> docs;
        docs.reserve(sentences.size());
        for (const auto& s : sentences) docs.push_back({s});
        return build(docs);
    }

    long long size() const { return size_; }

    double idf(const TokenSequence& gram, int n) const {
        const auto& table = df_[static_cast<size_t>(n - 1)];
        auto it = table.find(gram);
        const double df = it == table.end() ? 1.0 : static_cast<double>(std::max(1LL, it->second));
        return log_size_ - std::log(df);
    }

    long long document_frequency(const TokenSequence& gram, int n) const {
        const auto& table = df_[static_cast<size_t>(n - 1)];
        auto it = table.find(gram);
        return it == table.end() ? 0 : it->second;
    }

private:
    std::array<std::map<TokenSequence, long long>, kMetricMaxOrder> df_;
    long long size_ = 0;
    double log_size_ = 0.0;
};

inline double cider(const TokenSequence& candidate, const std::vector<TokenSequence>& references,
                    const CiderCorpus& corpus) {
    if (references.empty()) throw std::invalid_argument("cider: no references");
    if (candidate.empty()) return 0.0;

    const NGramStats cand = NGramStats::of(candidate);
    auto tfidf = [&](const NGramStats& s, int n) {
        std::map<TokenSequence, double> vec;
        double norm_sq = 0.0;
        for (const auto& [gram, cnt] : s.counts[static_cast<size_t>(n - 1)]) {
            const double wgt = static_cast<double>(cnt) * corpus.idf(gram, n);
            vec[gram] = wgt;
            norm_sq += wgt * wgt;
        }
        return std::make_pair(vec, std::sqrt(norm_sq));
    };

    double total = 0.0;
    for (int n = 1; n <= kMetricMaxOrder; ++n) {
        auto [cand_vec, cand_norm] = tfidf(cand, n);
        double level = 0.0;
        for (const auto& ref : references) {
            auto [ref_vec, ref_norm] = tfidf(NGramStats::of(ref), n);
            if (cand_norm == 0.0 || ref_norm == 0.0) continue;  // all-zero vector: contributes 0
            double dot = 0.0;
            for (const auto& [gram, wgt] : cand_vec) {
                auto it = ref_vec.find(gram);
                if (it != ref_vec.end()) dot += wgt * it->second;
            }
            level += dot / (cand_norm * ref_norm);
        }
        total += level / static_cast<double>(references.size());
    }
    return 10.0 * total / static_cast<double>(kMetricMaxOrder);
}

}  // namespace bibs
