#include "dald/sampling.hpp"

#include <cmath>
#include <limits>

namespace dald {

TokenDistribution apply_temperature(const TokenDistribution& d, double temperature) {
    if (temperature < 0.0) fail(ErrorKind::ConfigError, "temperature must be >= 0");
    if (temperature == 1.0) return d;
    if (temperature == 0.0) {
        size_t best = 0;
        double best_lp = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < d.size(); ++i) {
            if (d.logprob(i) > best_lp) {
                best_lp = d.logprob(i);
                best = i;
            }
        }
        std::vector<double> probs(d.size(), 0.0);
        probs[best] = 1.0;
        return TokenDistribution::from_probs(probs);
    }
    std::vector<double> scaled(d.size());
    for (size_t i = 0; i < d.size(); ++i) scaled[i] = d.logprob(i) / temperature;
    return TokenDistribution::from_logits(scaled);
}

TokenId sample_token(const TokenDistribution& d, Rng& rng) {
    double u = rng.next_double();
    double acc = 0.0;
    size_t last_positive = 0;
    for (size_t i = 0; i < d.size(); ++i) {
        double p = d.prob(i);
        if (p > 0.0) last_positive = i;
        acc += p;
        if (u < acc) return static_cast<TokenId>(i);
    }
    return static_cast<TokenId>(last_positive);  // guards rounding at u ~ 1
}

TokenSequence sample_completion(const LanguageModelProvider& provider,
                                const TokenSequence& prompt, const GenerationConfig& cfg) {
    cfg.validate();
    if (prompt.empty()) fail(ErrorKind::EmptyInput, "prompt must be non-empty");
    Rng rng(cfg.seed);
    TokenSequence out = prompt;
    for (size_t i = 0; i < cfg.max_new_tokens; ++i) {
        TokenDistribution d = apply_temperature(provider.next_distribution(out), cfg.temperature);
        out.push_back(sample_token(d, rng));
    }
    return out;
}

}  // namespace dald
