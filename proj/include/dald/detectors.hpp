#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dald/perturb.hpp"
#include "dald/provider.hpp"

namespace dald {

// All detection scores are oriented so that larger = more machine-like.

struct CurvatureStats {
    double log_p = 0.0;  // sum of scored-token log-probabilities
    double mu = 0.0;     // expected log-probability of resampled tokens
    double sigma = 0.0;
    double d = 0.0;      // (log_p - mu) / sigma
};

struct Score {
    double value = 0.0;
    bool degenerate = false;
};

struct PerturbConfig {
    size_t count = 20;
    double mask_ratio = 0.15;
    size_t span_len = 2;
    double fill_temperature = 1.0;
    uint64_t seed = 0;
};

struct DnaConfig {
    double truncation = 0.5;  // keep fraction gamma as the regeneration prompt
    size_t regenerations = 10;
    size_t ngram_min = 2;
    size_t ngram_max = 4;
    double temperature = 0.8;
    uint64_t seed = 0;
};

// Mean log P(x_l | x_{<l}) over positions l >= 2 (1-based).
double score_likelihood(const TokenSequence& x, const LanguageModelProvider& scorer);

// Mean predictive entropy over the same positions. The raw mean runs the
// wrong way (machine text sits in low-entropy regions), so the oriented
// score is its negation; the raw value is also exposed.
double score_entropy_raw(const TokenSequence& x, const LanguageModelProvider& scorer);
double score_entropy(const TokenSequence& x, const LanguageModelProvider& scorer);

// -mean log(rank of observed token), rank 1-based by descending probability
// with token-index tie-break.
double score_logrank(const TokenSequence& x, const LanguageModelProvider& scorer);

// -sum log p / sum log rank; DegenerateRank (flagged +inf) when every
// observed token is rank 1.
Score score_lrr(const TokenSequence& x, const LanguageModelProvider& scorer);

// Analytic, sampling-free conditional probability curvature. Expectations
// are taken under the sampler's per-position distributions when one is
// supplied, while log-probabilities always come from the scorer. Scoring
// covers 1-based positions l0+1 .. L. Throws ZeroVariance when sigma
// collapses (deterministic or exactly uniform scorer).
CurvatureStats conditional_curvature(const TokenSequence& x, const LanguageModelProvider& scorer,
                                     const LanguageModelProvider* sampler = nullptr,
                                     size_t l0 = 1);

// Monte Carlo estimate of the same statistic; the oracle counterpart and
// the route for providers that only expose sampled paths.
CurvatureStats conditional_curvature_mc(const TokenSequence& x,
                                        const LanguageModelProvider& scorer,
                                        const LanguageModelProvider& sampler, size_t n_samples,
                                        uint64_t seed, size_t l0 = 1);

// DetectGPT-style discrepancy: (log p(x) - mean log p(x~)) / std, with
// mask-and-fill perturbations. Degenerate (score 0, flagged) when the
// perturbation spread vanishes.
Score perturbation_discrepancy(const TokenSequence& x, const LanguageModelProvider& scorer,
                               const LanguageModelProvider& fill_model, const PerturbConfig& cfg);

// Normalized log-rank perturbation ratio: mean perturbed log-rank over the
// original log-rank.
Score score_npr(const TokenSequence& x, const LanguageModelProvider& scorer,
                const LanguageModelProvider& fill_model, const PerturbConfig& cfg);

// DNA-style regeneration overlap: truncate at gamma * L, regenerate the
// remainder, and average weighted n-gram overlap with the true remainder.
double dna_bscore(const TokenSequence& x, const LanguageModelProvider& regenerator,
                  const DnaConfig& cfg);

}  // namespace dald
