#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dald/vocab.hpp"

namespace dald {

enum class TokenPolicy {
    Word,  // lowercase; letter/digit runs are words, punctuation chars stand alone
    Char,  // lowercase; every non-space character is a token
};

struct TokenizerConfig {
    TokenPolicy policy = TokenPolicy::Word;
};

// Normalized token stream for the given policy. Deterministic and total on
// valid UTF-8 input (bytes >= 0x80 are treated as word characters).
std::vector<std::string> split_tokens(const std::string& text, const TokenizerConfig& cfg = {});

// Builds a vocabulary in first-appearance order with <unk> appended.
Vocabulary build_vocabulary(const std::vector<std::string>& texts,
                            const TokenizerConfig& cfg = {});

// Encodes against an existing vocabulary, folding unknown tokens to <unk>.
TokenSequence encode(const std::string& text, const Vocabulary& vocab,
                     const TokenizerConfig& cfg = {});

// Throws EmptyInput if no tokens survive normalization.
std::pair<Vocabulary, TokenSequence> tokenize(const std::string& text,
                                              const TokenizerConfig& cfg = {});

// Space-joined token stream; tokenize(detokenize(x)) reproduces x.
std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab);

}  // namespace dald
