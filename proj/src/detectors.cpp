#include "dald/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dald/rng.hpp"
#include "dald/sampling.hpp"

namespace dald {

namespace {

constexpr double kVarianceFloor = 1e-12;

void require_scorable(const TokenSequence& x, size_t min_len) {
    if (x.length() < min_len) fail(ErrorKind::TooShort, "passage too short to score");
}

// 1-based rank of the observed token by descending probability,
// ties broken toward the lower token index.
size_t token_rank(const TokenDistribution& d, TokenId observed) {
    double p_obs = d.logprob(observed);
    size_t rank = 1;
    for (size_t j = 0; j < d.size(); ++j) {
        if (d.logprob(j) > p_obs) ++rank;
        else if (d.logprob(j) == p_obs && j < observed) ++rank;
    }
    return rank;
}

double sum_logprob(const TokenSequence& x, const LanguageModelProvider& scorer) {
    double total = 0.0;
    for (size_t i = 1; i < x.length(); ++i)
        total += scorer.next_distribution(x.prefix(i)).logprob(x[i]);
    return total;
}

double mean_log_rank(const TokenSequence& x, const LanguageModelProvider& scorer) {
    double total = 0.0;
    for (size_t i = 1; i < x.length(); ++i) {
        auto d = scorer.next_distribution(x.prefix(i));
        total += std::log(static_cast<double>(token_rank(d, x[i])));
    }
    return total / static_cast<double>(x.length() - 1);
}

}  // namespace

double score_likelihood(const TokenSequence& x, const LanguageModelProvider& scorer) {
    require_scorable(x, 2);
    return sum_logprob(x, scorer) / static_cast<double>(x.length() - 1);
}

double score_entropy_raw(const TokenSequence& x, const LanguageModelProvider& scorer) {
    require_scorable(x, 2);
    double total = 0.0;
    for (size_t i = 1; i < x.length(); ++i)
        total += entropy(scorer.next_distribution(x.prefix(i)));
    return total / static_cast<double>(x.length() - 1);
}

double score_entropy(const TokenSequence& x, const LanguageModelProvider& scorer) {
    return -score_entropy_raw(x, scorer);
}

double score_logrank(const TokenSequence& x, const LanguageModelProvider& scorer) {
    require_scorable(x, 2);
    return -mean_log_rank(x, scorer);
}

Score score_lrr(const TokenSequence& x, const LanguageModelProvider& scorer) {
    require_scorable(x, 2);
    double log_p = 0.0, log_rank = 0.0;
    for (size_t i = 1; i < x.length(); ++i) {
        auto d = scorer.next_distribution(x.prefix(i));
        log_p += d.logprob(x[i]);
        log_rank += std::log(static_cast<double>(token_rank(d, x[i])));
    }
    if (log_rank < kVarianceFloor)
        return {std::numeric_limits<double>::infinity(), true};
    return {-log_p / log_rank, false};
}

CurvatureStats conditional_curvature(const TokenSequence& x, const LanguageModelProvider& scorer,
                                     const LanguageModelProvider* sampler, size_t l0) {
    require_scorable(x, l0 + 1);
    CurvatureStats stats;
    double var = 0.0;
    for (size_t i = l0; i < x.length(); ++i) {
        auto prefix = x.prefix(i);
        TokenDistribution p = scorer.next_distribution(prefix);
        stats.log_p += p.logprob(x[i]);
        // per-position expectation/variance of log p under the sampling
        // distribution; positions are independent by the product form
        const TokenDistribution& q = sampler ? sampler->next_distribution(prefix) : p;
        double mean = 0.0, second = 0.0;
        for (size_t j = 0; j < p.size(); ++j) {
            double qj = q.prob(j);
            if (qj <= 0.0) continue;
            double lp = p.logprob(j);
            if (std::isinf(lp))
                fail(ErrorKind::SupportMismatch, "sampler mass on scorer zero-probability token");
            mean += qj * lp;
            second += qj * lp * lp;
        }
        stats.mu += mean;
        var += second - mean * mean;
    }
    if (var < kVarianceFloor)
        fail(ErrorKind::ZeroVariance, "scorer gives zero curvature variance on this text");
    stats.sigma = std::sqrt(var);
    stats.d = (stats.log_p - stats.mu) / stats.sigma;
    return stats;
}

CurvatureStats conditional_curvature_mc(const TokenSequence& x,
                                        const LanguageModelProvider& scorer,
                                        const LanguageModelProvider& sampler, size_t n_samples,
                                        uint64_t seed, size_t l0) {
    require_scorable(x, l0 + 1);
    if (n_samples < 2) fail(ErrorKind::ConfigError, "n_samples must be >= 2");

    // per-position distributions depend only on x, so compute them once
    std::vector<TokenDistribution> score_dists, sample_dists;
    for (size_t i = l0; i < x.length(); ++i) {
        auto prefix = x.prefix(i);
        score_dists.push_back(scorer.next_distribution(prefix));
        sample_dists.push_back(sampler.next_distribution(prefix));
    }

    CurvatureStats stats;
    for (size_t i = l0; i < x.length(); ++i)
        stats.log_p += score_dists[i - l0].logprob(x[i]);

    Rng rng(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (size_t s = 0; s < n_samples; ++s) {
        double lp = 0.0;
        for (size_t i = 0; i < sample_dists.size(); ++i)
            lp += score_dists[i].logprob(sample_token(sample_dists[i], rng));
        sum += lp;
        sum_sq += lp * lp;
    }
    double n = static_cast<double>(n_samples);
    stats.mu = sum / n;
    double var = sum_sq / n - stats.mu * stats.mu;
    if (var < kVarianceFloor)
        fail(ErrorKind::ZeroVariance, "sampled passages are all identical");
    stats.sigma = std::sqrt(var);
    stats.d = (stats.log_p - stats.mu) / stats.sigma;
    return stats;
}

namespace {

std::vector<TokenSequence> perturbations(const TokenSequence& x,
                                         const LanguageModelProvider& fill_model,
                                         const PerturbConfig& cfg) {
    std::vector<TokenSequence> out;
    out.reserve(cfg.count);
    for (size_t i = 0; i < cfg.count; ++i) {
        uint64_t s = derive_seed(cfg.seed, i);
        MaskedSequence masked = mask_spans(x, cfg.mask_ratio, cfg.span_len, s);
        GenerationConfig fill_cfg;
        fill_cfg.temperature = cfg.fill_temperature;
        fill_cfg.seed = derive_seed(s, 1);
        out.push_back(fill_masks(masked, fill_model, fill_cfg));
    }
    return out;
}

}  // namespace

Score perturbation_discrepancy(const TokenSequence& x, const LanguageModelProvider& scorer,
                               const LanguageModelProvider& fill_model,
                               const PerturbConfig& cfg) {
    require_scorable(x, 2);
    if (cfg.count < 2) fail(ErrorKind::ConfigError, "need at least 2 perturbations");
    double lp = sum_logprob(x, scorer);
    std::vector<double> values;
    values.reserve(cfg.count);
    for (const auto& pert : perturbations(x, fill_model, cfg))
        values.push_back(sum_logprob(pert, scorer));
    double n = static_cast<double>(cfg.count);
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    // two-pass variance: the E[v^2] - mean^2 form cancels catastrophically
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;
    if (var < kVarianceFloor) return {0.0, true};
    return {(lp - mean) / std::sqrt(var), false};
}

Score score_npr(const TokenSequence& x, const LanguageModelProvider& scorer,
                const LanguageModelProvider& fill_model, const PerturbConfig& cfg) {
    require_scorable(x, 2);
    if (cfg.count < 1) fail(ErrorKind::ConfigError, "need at least 1 perturbation");
    double denom = mean_log_rank(x, scorer);
    double num = 0.0;
    for (const auto& pert : perturbations(x, fill_model, cfg))
        num += mean_log_rank(pert, scorer);
    num /= static_cast<double>(cfg.count);
    if (denom < kVarianceFloor) {
        if (num < kVarianceFloor) return {1.0, true};
        return {std::numeric_limits<double>::infinity(), true};
    }
    return {num / denom, false};
}

double dna_bscore(const TokenSequence& x, const LanguageModelProvider& regenerator,
                  const DnaConfig& cfg) {
    if (cfg.truncation <= 0.0 || cfg.truncation >= 1.0)
        fail(ErrorKind::ConfigError, "truncation fraction must be in (0,1)");
    if (cfg.ngram_min < 1 || cfg.ngram_max < cfg.ngram_min)
        fail(ErrorKind::ConfigError, "invalid n-gram range");
    size_t cut = static_cast<size_t>(cfg.truncation * static_cast<double>(x.length()));
    if (cut < 1 || x.length() - cut < 5)
        fail(ErrorKind::TooShort, "remainder after truncation too short");
    TokenSequence prompt = x.prefix(cut);
    TokenSequence remainder = x.slice(cut, x.length());

    double weight_total = 0.0;
    for (size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n)
        weight_total += static_cast<double>(n);

    // reference n-gram multisets
    std::vector<std::map<std::vector<TokenId>, size_t>> ref(cfg.ngram_max - cfg.ngram_min + 1);
    for (size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n)
        for (size_t i = 0; i + n <= remainder.length(); ++i)
            ++ref[n - cfg.ngram_min][std::vector<TokenId>(remainder.ids().begin() + i,
                                                          remainder.ids().begin() + i + n)];

    double total = 0.0;
    for (size_t r = 0; r < cfg.regenerations; ++r) {
        GenerationConfig gen;
        gen.temperature = cfg.temperature;
        gen.max_new_tokens = remainder.length();
        gen.seed = derive_seed(cfg.seed, r);
        TokenSequence cont = sample_completion(regenerator, prompt, gen).slice(cut, x.length());

        for (size_t n = cfg.ngram_min; n <= cfg.ngram_max; ++n) {
            std::map<std::vector<TokenId>, size_t> got;
            for (size_t i = 0; i + n <= cont.length(); ++i)
                ++got[std::vector<TokenId>(cont.ids().begin() + i, cont.ids().begin() + i + n)];
            size_t inter = 0, denom = 0;
            for (const auto& [gram, c] : ref[n - cfg.ngram_min]) {
                denom += c;
                auto it = got.find(gram);
                if (it != got.end()) inter += std::min(c, it->second);
            }
            if (denom == 0) continue;
            total += (static_cast<double>(n) / weight_total) * static_cast<double>(inter) /
                     static_cast<double>(denom);
        }
    }
    return total / static_cast<double>(cfg.regenerations);
}

}  // namespace dald
