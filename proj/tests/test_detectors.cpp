#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dald/detectors.hpp"
#include "dald/ngram.hpp"
#include "dald/rng.hpp"
#include "dald/sampling.hpp"

#include "helpers.hpp"

using namespace dald;
using namespace dald::test;

namespace {

// scorer whose distribution depends on the last prefix token, so curvature
// variance does not collapse
FnProvider last_token_provider(size_t W = 3) {
    Vocabulary vocab = letters(W);
    return FnProvider(vocab, [W](const TokenSequence& prefix) {
        std::vector<double> probs(W);
        TokenId last = prefix.empty() ? 0 : prefix[prefix.length() - 1];
        for (size_t j = 0; j < W; ++j)
            probs[j] = 1.0 + static_cast<double>((j + last) % W);
        return TokenDistribution::from_probs(probs);
    });
}

NGramModel toy_ngram(uint64_t seed, size_t W = 4, size_t order = 2) {
    Rng rng(seed);
    std::vector<TokenId> ids(400);
    // sticky walk: a peaked model, so perturbations visibly move log p
    ids[0] = 0;
    for (size_t i = 1; i < ids.size(); ++i)
        ids[i] = rng.next_double() < 0.7 ? ids[i - 1]
                                         : static_cast<TokenId>(rng.next_index(W));
    NGramModel::Options opt;
    opt.order = order;
    opt.smoothing_k = 0.1;
    return NGramModel::train({TokenSequence(ids)}, letters(W), opt);
}

}  // namespace

TEST_CASE("curvature single-position hand case") {
    auto scorer = fixed_provider(letters(2), {0.9, 0.1});
    CurvatureStats s = conditional_curvature(seq({0, 0}), scorer);
    CHECK(s.log_p == doctest::Approx(-0.10536).epsilon(1e-4));
    CHECK(s.mu == doctest::Approx(-0.32508).epsilon(1e-4));
    CHECK(s.sigma * s.sigma == doctest::Approx(0.43450).epsilon(1e-4));
    CHECK(s.d == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("curvature error cases") {
    auto uniform = fixed_provider(letters(2), {0.5, 0.5});
    CHECK_THROWS_AS(conditional_curvature(seq({0, 1}), uniform), DaldError);  // ZeroVariance
    auto scorer = fixed_provider(letters(2), {0.9, 0.1});
    CHECK_THROWS_AS(conditional_curvature(seq({0}), scorer), DaldError);  // TooShort
}

TEST_CASE("curvature sampler mass on scorer zero-probability token") {
    auto scorer = fixed_provider(letters(2), {1.0, 0.0});
    auto sampler = fixed_provider(letters(2), {0.5, 0.5});
    CHECK_THROWS_AS(conditional_curvature(seq({0, 0}), scorer, &sampler), DaldError);
}

TEST_CASE("analytic curvature matches Monte Carlo") {
    auto scorer = last_token_provider();
    Rng rng(41);
    for (int t = 0; t < 5; ++t) {
        std::vector<TokenId> ids(8);
        for (auto& id : ids) id = static_cast<TokenId>(rng.next_index(3));
        TokenSequence x(ids);
        CurvatureStats a = conditional_curvature(x, scorer);
        CurvatureStats mc = conditional_curvature_mc(x, scorer, scorer, 100000, 17 + t);
        CHECK(std::abs(a.d - mc.d) < 0.02);
    }
}

TEST_CASE("monte carlo curvature is seed-reproducible") {
    auto scorer = last_token_provider();
    TokenSequence x = seq({0, 1, 2, 0, 1});
    auto a = conditional_curvature_mc(x, scorer, scorer, 500, 7);
    auto b = conditional_curvature_mc(x, scorer, scorer, 500, 7);
    CHECK(a.d == b.d);
    auto one_hot = fixed_provider(letters(2), {1.0, 0.0});
    CHECK_THROWS_AS(conditional_curvature_mc(seq({0, 0, 0}), one_hot, one_hot, 100, 1),
                    DaldError);
}

TEST_CASE("likelihood oracles") {
    auto uniform = fixed_provider(letters(4), {0.25, 0.25, 0.25, 0.25});
    CHECK(score_likelihood(seq({0, 1, 2}), uniform) ==
          doctest::Approx(std::log(0.25)).epsilon(1e-12));
    auto one_hot = fixed_provider(letters(2), {1.0, 0.0});
    CHECK(score_likelihood(seq({0, 0, 0}), one_hot) == doctest::Approx(0.0));
    CHECK_THROWS_AS(score_likelihood(seq({0}), uniform), DaldError);
}

TEST_CASE("entropy score orientation") {
    auto uniform = fixed_provider(letters(4), {0.25, 0.25, 0.25, 0.25});
    CHECK(score_entropy_raw(seq({0, 1, 2}), uniform) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(score_entropy(seq({0, 1, 2}), uniform) ==
          doctest::Approx(-std::log(4.0)).epsilon(1e-12));
    auto one_hot = fixed_provider(letters(2), {1.0, 0.0});
    CHECK(score_entropy_raw(seq({0, 0, 0}), one_hot) == doctest::Approx(0.0));
}

TEST_CASE("logrank oracles and tie rule") {
    // [.5,.3,.2]: observed index 1 has rank 2
    auto scorer = fixed_provider(letters(3), {0.5, 0.3, 0.2});
    CHECK(score_logrank(seq({0, 1}), scorer) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    // always-argmax text scores 0
    CHECK(score_logrank(seq({0, 0, 0}), scorer) == doctest::Approx(0.0));
    // tied [.5,.5]: index 1 gets rank 2 by the tie-break
    auto tied = fixed_provider(letters(2), {0.5, 0.5});
    CHECK(score_logrank(seq({0, 1}), tied) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("lrr value and degenerate sentinel") {
    auto scorer = fixed_provider(letters(3), {0.5, 0.3, 0.2});
    Score s = score_lrr(seq({0, 1, 2}), scorer);
    CHECK_FALSE(s.degenerate);
    double expected = -(std::log(0.3) + std::log(0.2)) / (std::log(2.0) + std::log(3.0));
    CHECK(s.value == doctest::Approx(expected).epsilon(1e-12));
    // every observed token rank 1 -> flagged +inf
    Score deg = score_lrr(seq({0, 0, 0}), scorer);
    CHECK(deg.degenerate);
    CHECK(std::isinf(deg.value));
}

TEST_CASE("perturbation discrepancy: ratio 0 degenerate, seeded reproducible") {
    NGramModel scorer = toy_ngram(43);
    Rng rng(44);
    std::vector<TokenId> ids(40);
    for (auto& id : ids) id = static_cast<TokenId>(rng.next_index(4));
    TokenSequence x(ids);

    PerturbConfig cfg;
    cfg.mask_ratio = 0.0;
    Score zero = perturbation_discrepancy(x, scorer, scorer, cfg);
    CHECK(zero.degenerate);
    CHECK(zero.value == 0.0);

    cfg.mask_ratio = 0.3;
    cfg.seed = 5;
    Score a = perturbation_discrepancy(x, scorer, scorer, cfg);
    Score b = perturbation_discrepancy(x, scorer, scorer, cfg);
    CHECK(a.value == b.value);
    CHECK_FALSE(a.degenerate);
}

TEST_CASE("machine text scores positive discrepancy under its generator") {
    NGramModel gen = toy_ngram(45);
    GenerationConfig sample_cfg;
    sample_cfg.temperature = 0.8;
    sample_cfg.max_new_tokens = 39;
    PerturbConfig cfg;
    cfg.mask_ratio = 0.3;
    cfg.span_len = 2;
    int positive = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        sample_cfg.seed = derive_seed(46, i);
        TokenSequence x = sample_completion(gen, seq({0}), sample_cfg);
        cfg.seed = derive_seed(47, i);
        Score s = perturbation_discrepancy(x, gen, gen, cfg);
        if (!s.degenerate && s.value > 0.0) ++positive;
    }
    CHECK(positive >= n * 80 / 100);
}

TEST_CASE("npr: ratio 0 gives 1, machine text ratio above 1") {
    NGramModel gen = toy_ngram(48);
    GenerationConfig sample_cfg;
    sample_cfg.temperature = 0.8;
    sample_cfg.max_new_tokens = 39;
    PerturbConfig cfg;
    cfg.mask_ratio = 0.0;
    sample_cfg.seed = 1;
    TokenSequence x = sample_completion(gen, seq({0}), sample_cfg);
    Score unit = score_npr(x, gen, gen, cfg);
    CHECK(unit.value == doctest::Approx(1.0));

    cfg.mask_ratio = 0.3;
    int above = 0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        sample_cfg.seed = derive_seed(49, i);
        TokenSequence xi = sample_completion(gen, seq({0}), sample_cfg);
        cfg.seed = derive_seed(50, i);
        Score s = score_npr(xi, gen, gen, cfg);
        if (!s.degenerate && s.value > 1.0) ++above;
    }
    CHECK(above >= n * 75 / 100);
}

TEST_CASE("dna bscore extremes") {
    // deterministic regenerator reproducing the remainder exactly -> 1
    Vocabulary vocab = letters(2);
    auto deterministic = FnProvider(vocab, [](const TokenSequence& prefix) {
        TokenId last = prefix[prefix.length() - 1];
        std::vector<double> p(2, 0.0);
        p[1 - last] = 1.0;  // alternate forever
        return TokenDistribution::from_probs(p);
    });
    std::vector<TokenId> alt(16);
    for (size_t i = 0; i < alt.size(); ++i) alt[i] = static_cast<TokenId>(i % 2);
    DnaConfig cfg;
    cfg.temperature = 0.0;
    CHECK(dna_bscore(TokenSequence(alt), deterministic, cfg) == doctest::Approx(1.0));

    // regenerator that only ever emits token c, remainder uses a/b -> 0
    Vocabulary vocab3 = letters(3);
    auto disjoint = fixed_provider(vocab3, {0.0, 0.0, 1.0});
    std::vector<TokenId> ab(16);
    for (size_t i = 0; i < ab.size(); ++i) ab[i] = static_cast<TokenId>(i % 2);
    CHECK(dna_bscore(TokenSequence(ab), disjoint, cfg) == doctest::Approx(0.0));

    CHECK_THROWS_AS(dna_bscore(seq({0, 1, 0, 1}), disjoint, cfg), DaldError);  // TooShort
}

TEST_CASE("dna bscore is stable in the regeneration count") {
    NGramModel gen = toy_ngram(51);
    GenerationConfig sample_cfg;
    sample_cfg.temperature = 0.8;
    sample_cfg.max_new_tokens = 39;
    DnaConfig k10, k100;
    k100.regenerations = 100;
    double diff = 0.0;
    const int n = 20;
    for (int i = 0; i < n; ++i) {
        sample_cfg.seed = derive_seed(52, i);
        TokenSequence x = sample_completion(gen, seq({0}), sample_cfg);
        k10.seed = k100.seed = derive_seed(53, i);
        diff += std::abs(dna_bscore(x, gen, k10) - dna_bscore(x, gen, k100));
    }
    CHECK(diff / n < 0.05);
}

TEST_CASE("temperature-0 self-text maximizes likelihood") {
    NGramModel gen = toy_ngram(54);
    GenerationConfig greedy;
    greedy.temperature = 0.0;
    greedy.max_new_tokens = 30;
    TokenSequence self_text = sample_completion(gen, seq({0}), greedy);
    double self_score = score_likelihood(self_text, gen);
    Rng rng(55);
    for (int i = 0; i < 50; ++i) {
        std::vector<TokenId> ids(31);
        ids[0] = 0;
        for (size_t j = 1; j < ids.size(); ++j) ids[j] = static_cast<TokenId>(rng.next_index(4));
        CHECK(score_likelihood(TokenSequence(ids), gen) <= self_score + 1e-12);
    }
}
