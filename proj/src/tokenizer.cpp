#include "dald/tokenizer.hpp"

#include <cctype>

namespace dald {

namespace {

bool is_word_char(unsigned char c) {
    return std::isalnum(c) || c == '\'' || c >= 0x80;
}

}  // namespace

std::vector<std::string> split_tokens(const std::string& text, const TokenizerConfig& cfg) {
    std::vector<std::string> out;
    if (cfg.policy == TokenPolicy::Char) {
        for (unsigned char c : text) {
            if (std::isspace(c)) continue;
            out.push_back(std::string(1, static_cast<char>(std::tolower(c))));
        }
        return out;
    }
    std::string cur;
    for (unsigned char c : text) {
        if (is_word_char(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
            if (!std::isspace(c)) out.push_back(std::string(1, static_cast<char>(c)));
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Vocabulary build_vocabulary(const std::vector<std::string>& texts, const TokenizerConfig& cfg) {
    std::vector<std::string> ordered;
    std::unordered_map<std::string, int> seen;
    for (const auto& text : texts) {
        for (auto& tok : split_tokens(text, cfg)) {
            if (seen.emplace(tok, 1).second) ordered.push_back(tok);
        }
    }
    if (!seen.count(kUnkToken)) ordered.push_back(kUnkToken);
    if (ordered.size() < 2) ordered.insert(ordered.begin(), "<pad>");
    return Vocabulary(std::move(ordered));
}

TokenSequence encode(const std::string& text, const Vocabulary& vocab, const TokenizerConfig& cfg) {
    std::vector<TokenId> ids;
    for (auto& tok : split_tokens(text, cfg)) ids.push_back(vocab.id_or_unk(tok));
    return TokenSequence(std::move(ids));
}

std::pair<Vocabulary, TokenSequence> tokenize(const std::string& text, const TokenizerConfig& cfg) {
    auto toks = split_tokens(text, cfg);
    if (toks.empty()) fail(ErrorKind::EmptyInput, "no tokens survive normalization");
    Vocabulary vocab = build_vocabulary({text}, cfg);
    std::vector<TokenId> ids;
    ids.reserve(toks.size());
    for (auto& tok : toks) ids.push_back(vocab.id(tok));
    return {std::move(vocab), TokenSequence(std::move(ids))};
}

std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
    std::string out;
    for (size_t i = 0; i < seq.length(); ++i) {
        if (i) out.push_back(' ');
        out += vocab.token(seq[i]);
    }
    return out;
}

}  // namespace dald
