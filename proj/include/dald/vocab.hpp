#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dald/error.hpp"

namespace dald {

using TokenId = uint32_t;

inline constexpr const char* kUnkToken = "<unk>";

// Ordered set of distinct token strings. Index <-> token is a bijection.
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
        if (tokens_.size() < 2)
            fail(ErrorKind::ConfigError, "vocabulary needs at least 2 tokens");
        for (TokenId i = 0; i < tokens_.size(); ++i) {
            auto [it, fresh] = index_.emplace(tokens_[i], i);
            if (!fresh) fail(ErrorKind::ConfigError, "duplicate token: " + tokens_[i]);
        }
    }

    size_t size() const { return tokens_.size(); }

    const std::string& token(TokenId id) const { return tokens_.at(id); }

    bool contains(const std::string& tok) const { return index_.count(tok) > 0; }

    TokenId id(const std::string& tok) const {
        auto it = index_.find(tok);
        if (it == index_.end())
            fail(ErrorKind::ConfigError, "token not in vocabulary: " + tok);
        return it->second;
    }

    // Maps unknown tokens to <unk>; requires <unk> to be present.
    TokenId id_or_unk(const std::string& tok) const {
        auto it = index_.find(tok);
        return it == index_.end() ? id(kUnkToken) : it->second;
    }

    const std::vector<std::string>& tokens() const { return tokens_; }

    bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

// Passage as token ids. Indexing is half-open everywhere in this codebase;
// sequence positions are 0-based.
class TokenSequence {
public:
    TokenSequence() = default;
    explicit TokenSequence(std::vector<TokenId> ids) : ids_(std::move(ids)) {}

    size_t length() const { return ids_.size(); }
    bool empty() const { return ids_.empty(); }

    TokenId operator[](size_t i) const { return ids_[i]; }

    const std::vector<TokenId>& ids() const { return ids_; }
    std::vector<TokenId>& ids() { return ids_; }

    void push_back(TokenId id) { ids_.push_back(id); }

    // [begin, end)
    TokenSequence slice(size_t begin, size_t end) const {
        return TokenSequence(std::vector<TokenId>(ids_.begin() + begin, ids_.begin() + end));
    }

    TokenSequence prefix(size_t n) const { return slice(0, n); }

    void validate_against(const Vocabulary& vocab) const {
        for (TokenId id : ids_)
            if (id >= vocab.size())
                fail(ErrorKind::VocabMismatch, "token id out of range");
    }

    bool operator==(const TokenSequence& o) const { return ids_ == o.ids_; }

private:
    std::vector<TokenId> ids_;
};

}  // namespace dald
