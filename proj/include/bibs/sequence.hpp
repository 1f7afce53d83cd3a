#pragma once

// Fill-in-the-blank problem instances: a clamped prefix, a clamped suffix,
// and the removed middle span. Widths come from a removal ratio r applied
// to the sentence length with half-up rounding; the prefix keeps
// floor((T-w)/2) tokens so the blank sits in the middle.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "bibs/io.hpp"
#include "bibs/vocab.hpp"

namespace bibs {

struct BlankSpec {
    double ratio = 0.5;               // fraction of tokens removed, in [0, 1]
    std::string centering = "middle"; // placement rule; "middle" is the only one shipped
};

struct BlankedInstance {
    std::string id;
    TokenSequence prefix;
    TokenSequence suffix;
    TokenSequence gold;     // empty when unknown (blind evaluation)
    int blank_width = 0;    // w; meaningful whenever known_width or gold present
    bool known_width = true;
    bool has_gold = false;

    int prefix_len() const { return static_cast<int>(prefix.size()); }
    int suffix_len() const { return static_cast<int>(suffix.size()); }
    int sentence_len() const { return prefix_len() + blank_width + suffix_len(); }
};

inline void validate_instance(const BlankedInstance& inst) {
    if (inst.has_gold && static_cast<int>(inst.gold.size()) != inst.blank_width) {
        throw std::invalid_argument("blank_width does not match gold length");
    }
    for (TokenId t : inst.gold) {
        if (Vocabulary::is_sentinel(t)) throw std::invalid_argument("gold contains a sentinel id");
    }
    if (inst.blank_width < 0) throw std::invalid_argument("negative blank width");
}

inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

inline BlankedInstance make_blank(const TokenSequence& sentence, const BlankSpec& spec,
                                  const std::string& id = "") {
    if (sentence.empty()) throw std::invalid_argument("make_blank: empty sentence");
    if (spec.ratio < 0.0 || spec.ratio > 1.0) {
        throw std::invalid_argument("make_blank: ratio outside [0,1]");
    }
    if (spec.centering != "middle") {
        throw std::invalid_argument("make_blank: unknown centering rule " + spec.centering);
    }
    const int t = static_cast<int>(sentence.size());
    const int w = round_half_up(spec.ratio * t);
    const int prefix_len = (t - w) / 2;
    const int suffix_len = t - w - prefix_len;

    BlankedInstance inst;
    inst.id = id;
    inst.prefix.assign(sentence.begin(), sentence.begin() + prefix_len);
    inst.gold.assign(sentence.begin() + prefix_len, sentence.begin() + prefix_len + w);
    inst.suffix.assign(sentence.end() - suffix_len, sentence.end());
    inst.blank_width = w;
    inst.known_width = true;
    inst.has_gold = true;
    validate_instance(inst);
    return inst;
}

inline TokenSequence assemble(const BlankedInstance& inst, const TokenSequence& completion) {
    TokenSequence out;
    out.reserve(inst.prefix.size() + completion.size() + inst.suffix.size());
    out.insert(out.end(), inst.prefix.begin(), inst.prefix.end());
    out.insert(out.end(), completion.begin(), completion.end());
    out.insert(out.end(), inst.suffix.begin(), inst.suffix.end());
    return out;
}

inline TokenSequence original_sentence(const BlankedInstance& inst) {
    if (!inst.has_gold) throw std::runtime_error("instance has no gold span");
    return assemble(inst, inst.gold);
}

// --- JSON Lines dataset format ---------------------------------------------
// One object per line: id, prefix, suffix, gold (optional), known_width,
// and width when the gold span is withheld but the width is still known.

inline nlohmann::json instance_to_json(const BlankedInstance& inst, const Vocabulary& vocab) {
    nlohmann::json j;
    j["id"] = inst.id;
    j["prefix"] = vocab.decode(inst.prefix);
    j["suffix"] = vocab.decode(inst.suffix);
    if (inst.has_gold) j["gold"] = vocab.decode(inst.gold);
    j["known_width"] = inst.known_width;
    if (!inst.has_gold && inst.known_width) j["width"] = inst.blank_width;
    return j;
}

inline BlankedInstance instance_from_json(const nlohmann::json& j, const Vocabulary& vocab) {
    BlankedInstance inst;
    inst.id = j.at("id").get<std::string>();
    inst.prefix = vocab.encode(j.at("prefix").get<std::vector<std::string>>());
    inst.suffix = vocab.encode(j.at("suffix").get<std::vector<std::string>>());
    inst.known_width = j.at("known_width").get<bool>();
    if (j.contains("gold")) {
        inst.gold = vocab.encode(j.at("gold").get<std::vector<std::string>>());
        inst.has_gold = true;
        inst.blank_width = static_cast<int>(inst.gold.size());
    } else if (j.contains("width")) {
        inst.blank_width = j.at("width").get<int>();
    } else if (inst.known_width) {
        throw std::runtime_error("instance " + inst.id + ": known_width without gold or width");
    }
    validate_instance(inst);
    return inst;
}

inline void save_dataset(const std::string& path, const std::vector<BlankedInstance>& instances,
                         const Vocabulary& vocab) {
    std::string out;
    for (const auto& inst : instances) {
        out += instance_to_json(inst, vocab).dump();
        out += '\n';
    }
    atomic_write_file(path, out);
}

inline std::vector<BlankedInstance> load_dataset(const std::string& path, const Vocabulary& vocab) {
    std::vector<BlankedInstance> out;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        out.push_back(instance_from_json(nlohmann::json::parse(line), vocab));
    }
    return out;
}

}  // namespace bibs
