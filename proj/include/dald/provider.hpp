#pragma once

#include <cstdint>
#include <string>

#include "dald/distribution.hpp"
#include "dald/vocab.hpp"

namespace dald {

struct GenerationConfig {
    double temperature = 1.0;   // 0 = greedy argmax, lowest-index tie-break
    size_t max_new_tokens = 1;
    uint64_t seed = 0;

    void validate() const {
        if (temperature < 0.0) fail(ErrorKind::ConfigError, "temperature must be >= 0");
        if (max_new_tokens < 1) fail(ErrorKind::ConfigError, "max_new_tokens must be >= 1");
    }
};

// The "prefix -> next-token distribution" contract. Implementations must be
// pure with respect to the prefix and safe to share across scoring threads.
class LanguageModelProvider {
public:
    virtual ~LanguageModelProvider() = default;

    virtual TokenDistribution next_distribution(const TokenSequence& prefix) const = 0;
    virtual const Vocabulary& vocabulary() const = 0;
    virtual std::string descriptor() const = 0;
};

}  // namespace dald
