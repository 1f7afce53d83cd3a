#pragma once

// Vocabulary: a dense bijection between surface tokens and integer ids.
// Ids 0..2 are reserved for the BOS / EOS / UNK sentinels; content tokens
// occupy ids 3..size-1 ordered by descending corpus frequency, then
// lexicographically. Out-of-vocabulary lookups resolve to UNK.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bibs/io.hpp"

namespace bibs {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;

// Lowercase, strip sentence-terminal punctuation, split on whitespace.
inline std::vector<std::string> tokenize(const std::string& line) {
    std::string s = line;
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    while (!s.empty()) {
        char c = s.back();
        if (c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':' ||
            std::isspace(static_cast<unsigned char>(c))) {
            s.pop_back();
        } else {
            break;
        }
    }
    std::vector<std::string> toks;
    std::string cur;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) toks.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) toks.push_back(std::move(cur));
    return toks;
}

class Vocabulary {
public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kUnk = 2;
    static constexpr TokenId kFirstContent = 3;

    // Sentinel surfaces, then content tokens in the given order.
    explicit Vocabulary(std::vector<std::string> content_tokens) {
        tokens_ = {"<s>", "</s>", "<unk>"};
        tokens_.insert(tokens_.end(), content_tokens.begin(), content_tokens.end());
        if (tokens_.size() < 4) {
            throw std::invalid_argument("vocabulary needs at least one content token");
        }
        for (size_t i = 0; i < tokens_.size(); ++i) {
            auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
            if (!inserted) throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
        }
    }

    TokenId size() const { return static_cast<TokenId>(tokens_.size()); }
    TokenId content_count() const { return size() - kFirstContent; }

    static bool is_sentinel(TokenId id) { return id < kFirstContent; }

    TokenId id(const std::string& token) const {
        auto it = index_.find(token);
        return it == index_.end() ? kUnk : it->second;
    }

    const std::string& token(TokenId id) const {
        if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
        return tokens_[static_cast<size_t>(id)];
    }

    TokenSequence encode(const std::vector<std::string>& tokens) const {
        TokenSequence ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) ids.push_back(id(t));
        return ids;
    }

    std::vector<std::string> decode(const TokenSequence& ids) const {
        std::vector<std::string> out;
        out.reserve(ids.size());
        for (TokenId i : ids) out.push_back(token(i));
        return out;
    }

    bool contains_id(TokenId id) const { return id >= 0 && id < size(); }

    nlohmann::json to_json() const {
        return {{"version", 1},
                {"tokens", tokens_},
                {"bos", kBos},
                {"eos", kEos},
                {"unk", kUnk}};
    }

    static Vocabulary from_json(const nlohmann::json& j) {
        if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported vocabulary version");
        auto tokens = j.at("tokens").get<std::vector<std::string>>();
        if (tokens.size() < 4) throw std::runtime_error("vocabulary file too small");
        if (j.at("bos").get<TokenId>() != kBos || j.at("eos").get<TokenId>() != kEos ||
            j.at("unk").get<TokenId>() != kUnk) {
            throw std::runtime_error("unexpected sentinel layout in vocabulary file");
        }
        if (tokens[0] != "<s>" || tokens[1] != "</s>" || tokens[2] != "<unk>") {
            throw std::runtime_error("unexpected sentinel surfaces in vocabulary file");
        }
        return Vocabulary(std::vector<std::string>(tokens.begin() + kFirstContent, tokens.end()));
    }

    void save(const std::string& path) const { atomic_write_file(path, to_json().dump(2) + "\n"); }

    static Vocabulary load(const std::string& path) {
        return from_json(nlohmann::json::parse(read_file(path)));
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

// Frequency-thresholded vocabulary. Tokens below min_count are dropped and
// later resolve to UNK. Ordering is descending frequency, ties lexicographic.
inline Vocabulary build_vocabulary(const std::vector<std::string>& corpus_tokens, int min_count = 1) {
    if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
    if (corpus_tokens.empty()) throw std::runtime_error("empty corpus");
    std::map<std::string, long long> counts;
    for (const auto& t : corpus_tokens) ++counts[t];

    std::vector<std::pair<std::string, long long>> kept;
    for (const auto& [tok, c] : counts) {
        if (c >= min_count) kept.emplace_back(tok, c);
    }
    if (kept.empty()) throw std::runtime_error("no token meets min_count");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ordered;
    ordered.reserve(kept.size());
    for (auto& [tok, c] : kept) ordered.push_back(tok);
    return Vocabulary(std::move(ordered));
}

inline Vocabulary build_vocabulary_from_lines(const std::vector<std::string>& lines, int min_count = 1) {
    std::vector<std::string> stream;
    for (const auto& line : lines) {
        for (auto& t : tokenize(line)) stream.push_back(std::move(t));
    }
    return build_vocabulary(stream, min_count);
}

}  // namespace bibs
