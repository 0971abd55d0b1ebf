#pragma once

#include "dald/provider.hpp"
#include "dald/rng.hpp"

namespace dald {

// Temperature-scaled view of a distribution. T = 1 is the identity;
// T = 0 puts all mass on the argmax (lowest index wins ties).
TokenDistribution apply_temperature(const TokenDistribution& d, double temperature);

// One draw by inverse CDF; deterministic given the rng state.
TokenId sample_token(const TokenDistribution& d, Rng& rng);

// Extends the prompt by cfg.max_new_tokens tokens, each sampled from the
// provider's temperature-scaled next-token distribution.
TokenSequence sample_completion(const LanguageModelProvider& provider,
                                const TokenSequence& prompt, const GenerationConfig& cfg);

}  // namespace dald
