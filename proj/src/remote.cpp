#include "dald/remote.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

namespace dald {

void RemoteProviderConfig::validate() const {
    if (host.empty()) fail(ErrorKind::ConfigError, "remote host is empty");
    if (timeout_ms <= 0) fail(ErrorKind::ConfigError, "timeout must be > 0");
    if (cache_capacity < 1) fail(ErrorKind::ConfigError, "cache capacity must be >= 1");
}

Vocabulary load_vocab_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::IoError, "cannot open vocab manifest: " + path);
    nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        fail(ErrorKind::ParseError, "vocab manifest must be a JSON array");
    std::vector<std::string> tokens;
    for (const auto& t : j) {
        if (!t.is_string()) fail(ErrorKind::ParseError, "vocab manifest entries must be strings");
        tokens.push_back(t.get<std::string>());
    }
    return Vocabulary(std::move(tokens));
}

// LRU cache keyed by prefix, with per-key in-flight coalescing: the first
// requester fetches while later ones wait on the condition variable.
struct RemoteProvider::Cache {
    struct Entry {
        TokenDistribution dist;
        std::list<std::vector<TokenId>>::iterator lru_it;
    };

    mutable std::mutex mu;
    mutable std::condition_variable cv;
    size_t capacity;
    std::map<std::vector<TokenId>, Entry> entries;
    std::list<std::vector<TokenId>> lru;  // front = most recent
    std::map<std::vector<TokenId>, int> in_flight;
    size_t requests = 0;

    explicit Cache(size_t cap) : capacity(cap) {}
};

RemoteProvider::RemoteProvider(RemoteProviderConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    vocab_ = load_vocab_manifest(cfg_.vocab_manifest);
    cache_ = std::make_unique<Cache>(cfg_.cache_capacity);
}

RemoteProvider::~RemoteProvider() = default;

std::string RemoteProvider::descriptor() const {
    return "remote:" + cfg_.host + ":" + std::to_string(cfg_.port) + cfg_.path;
}

size_t RemoteProvider::request_count() const {
    std::lock_guard<std::mutex> lock(cache_->mu);
    return cache_->requests;
}

TokenDistribution RemoteProvider::fetch(const std::vector<TokenId>& prefix) const {
    nlohmann::json req;
    req["prefix"] = prefix;
    req["want"] = "logprobs";
    std::string body = req.dump();

    std::string last_error;
    for (size_t attempt = 0; attempt <= cfg_.retries; ++attempt) {
        httplib::Client client(cfg_.host, cfg_.port);
        client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
        client.set_read_timeout(0, cfg_.timeout_ms * 1000);
        auto res = client.Post(cfg_.path, body, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "http status " + std::to_string(res->status);
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("logprobs") || !j["logprobs"].is_array())
            fail(ErrorKind::ProtocolError, "response missing logprobs array");
        const auto& lp = j["logprobs"];
        if (lp.size() != vocab_.size())
            fail(ErrorKind::VocabMismatch,
                 "server returned " + std::to_string(lp.size()) + " logprobs for vocabulary of " +
                     std::to_string(vocab_.size()));
        std::vector<double> logprobs;
        logprobs.reserve(lp.size());
        double mass = 0.0;
        for (const auto& v : lp) {
            if (!v.is_number()) fail(ErrorKind::ProtocolError, "non-numeric logprob");
            double x = v.get<double>();
            logprobs.push_back(x);
            mass += std::exp(x);
        }
        if (std::abs(mass - 1.0) > 1e-4)
            fail(ErrorKind::ProtocolError,
                 "logprob mass " + std::to_string(mass) + " outside tolerance");
        // renormalize residual drift so downstream invariants hold exactly
        double log_mass = std::log(mass);
        for (double& x : logprobs) x -= log_mass;
        return TokenDistribution::from_logprobs(logprobs);
    }
    fail(ErrorKind::Transport, "request failed after " + std::to_string(cfg_.retries + 1) +
                                   " attempts: " + last_error);
}

TokenDistribution RemoteProvider::next_distribution(const TokenSequence& prefix) const {
    if (prefix.empty()) fail(ErrorKind::EmptyInput, "remote scoring needs a non-empty prefix");
    prefix.validate_against(vocab_);
    const std::vector<TokenId>& key = prefix.ids();
    Cache& c = *cache_;

    std::unique_lock<std::mutex> lock(c.mu);
    for (;;) {
        auto it = c.entries.find(key);
        if (it != c.entries.end()) {
            c.lru.splice(c.lru.begin(), c.lru, it->second.lru_it);
            return it->second.dist;
        }
        auto fl = c.in_flight.find(key);
        if (fl == c.in_flight.end()) break;
        c.cv.wait(lock);  // another thread is fetching this prefix
    }
    c.in_flight[key] = 1;
    ++c.requests;
    lock.unlock();

    TokenDistribution dist;
    try {
        dist = fetch(key);
    } catch (...) {
        lock.lock();
        c.in_flight.erase(key);
        c.cv.notify_all();
        throw;
    }

    lock.lock();
    c.in_flight.erase(key);
    c.lru.push_front(key);
    c.entries[key] = {dist, c.lru.begin()};
    while (c.entries.size() > c.capacity) {
        c.entries.erase(c.lru.back());
        c.lru.pop_back();
    }
    c.cv.notify_all();
    return dist;
}

}  // namespace dald
