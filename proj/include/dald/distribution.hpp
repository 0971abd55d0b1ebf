#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "dald/error.hpp"
#include "dald/vocab.hpp"

namespace dald {

// Normalized next-token distribution stored as natural-log probabilities.
// All information quantities in this codebase are in nats.
class TokenDistribution {
public:
    TokenDistribution() = default;

    static TokenDistribution from_probs(const std::vector<double>& probs) {
        double sum = 0.0;
        for (double p : probs) {
            if (std::isnan(p) || p < 0.0)
                fail(ErrorKind::ProtocolError, "invalid probability entry");
            sum += p;
        }
        if (sum <= 0.0) fail(ErrorKind::ProtocolError, "zero-mass distribution");
        TokenDistribution d;
        d.logprobs_.resize(probs.size());
        for (size_t i = 0; i < probs.size(); ++i)
            d.logprobs_[i] = probs[i] > 0.0 ? std::log(probs[i] / sum)
                                            : -std::numeric_limits<double>::infinity();
        return d;
    }

    static TokenDistribution from_logits(const std::vector<double>& logits) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : logits) {
            if (std::isnan(v)) fail(ErrorKind::ProtocolError, "NaN logit");
            mx = std::max(mx, v);
        }
        double sum = 0.0;
        for (double v : logits) sum += std::exp(v - mx);
        double lse = mx + std::log(sum);
        TokenDistribution d;
        d.logprobs_.resize(logits.size());
        for (size_t i = 0; i < logits.size(); ++i) d.logprobs_[i] = logits[i] - lse;
        return d;
    }

    // Takes already-normalized natural-log probabilities; validates.
    static TokenDistribution from_logprobs(std::vector<double> logprobs) {
        TokenDistribution d;
        d.logprobs_ = std::move(logprobs);
        d.validate();
        return d;
    }

    size_t size() const { return logprobs_.size(); }
    double logprob(size_t i) const { return logprobs_[i]; }
    double prob(size_t i) const { return std::exp(logprobs_[i]); }
    const std::vector<double>& logprobs() const { return logprobs_; }

    std::vector<double> probs() const {
        std::vector<double> out(logprobs_.size());
        for (size_t i = 0; i < logprobs_.size(); ++i) out[i] = std::exp(logprobs_[i]);
        return out;
    }

    void validate() const {
        double sum = 0.0;
        for (double lp : logprobs_) {
            if (std::isnan(lp) || lp > 1e-9)
                fail(ErrorKind::ProtocolError, "invalid log-probability entry");
            sum += std::exp(lp);
        }
        if (std::abs(sum - 1.0) > 1e-9)
            fail(ErrorKind::ProtocolError, "distribution does not normalize");
    }

private:
    std::vector<double> logprobs_;
};

// H(d) = -sum p log p, zero-probability entries contribute 0.
double entropy(const TokenDistribution& d);

// H(p, q) = -sum_j p_j log q_j. Throws SupportMismatch when q has zero
// mass where p > 0; a degenerate scorer should surface early, not as inf.
double cross_entropy(const TokenDistribution& p, const TokenDistribution& q);

// KL(p || q) >= 0, equals H(p, q) - H(p).
double kl_divergence(const TokenDistribution& p, const TokenDistribution& q);

// TV(p, q) = 0.5 * sum |p_j - q_j|, in [0, 1].
double total_variation(const TokenDistribution& p, const TokenDistribution& q);

}  // namespace dald
