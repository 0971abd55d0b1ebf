#pragma once

#include <condition_variable>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "dald/provider.hpp"

namespace dald {

struct RemoteProviderConfig {
    std::string host;  // e.g. "localhost"
    int port = 80;
    std::string path = "/v1/logprobs";
    std::string vocab_manifest;  // JSON array of token strings
    int timeout_ms = 5000;
    size_t retries = 2;        // additional attempts after the first
    size_t cache_capacity = 4096;

    void validate() const;
};

// LanguageModelProvider over the wire: POST {"prefix": [ids], "want":
// "logprobs"} -> {"logprobs": [W floats]}. Full-vocabulary logprobs only;
// top-k responses would break analytic curvature. Responses whose probability
// mass is off by more than 1e-4 are rejected (ProtocolError); smaller drift
// is renormalized. Thread-safe: LRU cache with in-flight coalescing per
// prefix, so concurrent scorers issue one request per distinct prefix.
class RemoteProvider : public LanguageModelProvider {
public:
    explicit RemoteProvider(RemoteProviderConfig cfg);
    ~RemoteProvider() override;

    TokenDistribution next_distribution(const TokenSequence& prefix) const override;
    const Vocabulary& vocabulary() const override { return vocab_; }
    std::string descriptor() const override;

    size_t request_count() const;  // network round-trips actually made

private:
    TokenDistribution fetch(const std::vector<TokenId>& prefix) const;

    RemoteProviderConfig cfg_;
    Vocabulary vocab_;

    struct Cache;
    std::unique_ptr<Cache> cache_;
};

Vocabulary load_vocab_manifest(const std::string& path);

}  // namespace dald
