#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dald/provider.hpp"
#include "dald/vocab.hpp"

namespace dald::test {

inline Vocabulary letters(size_t n) {
    std::vector<std::string> toks;
    for (size_t i = 0; i < n; ++i) toks.push_back(std::string(1, static_cast<char>('a' + i)));
    return Vocabulary(std::move(toks));
}

// Provider whose distribution is an arbitrary function of the prefix.
class FnProvider : public LanguageModelProvider {
public:
    using Fn = std::function<TokenDistribution(const TokenSequence&)>;

    FnProvider(Vocabulary vocab, Fn fn, std::string desc = "fn")
        : vocab_(std::move(vocab)), fn_(std::move(fn)), desc_(std::move(desc)) {}

    TokenDistribution next_distribution(const TokenSequence& prefix) const override {
        return fn_(prefix);
    }
    const Vocabulary& vocabulary() const override { return vocab_; }
    std::string descriptor() const override { return desc_; }

private:
    Vocabulary vocab_;
    Fn fn_;
    std::string desc_;
};

inline FnProvider fixed_provider(Vocabulary vocab, std::vector<double> probs,
                                 std::string desc = "fixed") {
    auto d = TokenDistribution::from_probs(probs);
    return FnProvider(std::move(vocab), [d](const TokenSequence&) { return d; },
                      std::move(desc));
}

inline TokenSequence seq(std::initializer_list<TokenId> ids) {
    return TokenSequence(std::vector<TokenId>(ids));
}

}  // namespace dald::test
