#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dald/provider.hpp"
#include "dald/train.hpp"
#include "dald/vocab.hpp"

namespace dald {

// Interpolated add-k smoothed n-gram model.
//
// P(t | c) mixes per-order add-k estimates. Interpolation weights are
// geometric with the top order heaviest (weight_ratio^(order - o), normalized)
// and are renormalized over the orders whose context was actually observed,
// so a context unseen at every order >= 2 degrades to the smoothed unigram.
class NGramModel : public LanguageModelProvider, public TrainableModel {
public:
    struct Options {
        size_t order = 3;
        double smoothing_k = 0.1;
        double weight_ratio = 0.6;  // per-order geometric falloff below the top
        std::vector<double> weights;  // explicit per-order weights override, low->high
    };

    static NGramModel train(const std::vector<TokenSequence>& corpus, const Vocabulary& vocab,
                            const Options& opts, const std::string& descriptor = "ngram");

    TokenDistribution next_distribution(const TokenSequence& prefix) const override;
    const Vocabulary& vocabulary() const override { return vocab_; }
    std::string descriptor() const override { return descriptor_; }

    // Count-space fine-tuning: per order, new = (1-lambda)*old + lambda*align,
    // with alignment counts rescaled to the old total mass. Each sequence
    // counts predictions from loss_start (0 = whole sequence; a positive
    // offset masks the prompt region while keeping it as context).
    NGramModel blend_finetune(const std::vector<TokenSequence>& alignment_corpus,
                              double lambda, const std::vector<size_t>& loss_starts = {}) const;

    std::shared_ptr<LanguageModelProvider> finetuned(const AlignmentDataset& data,
                                                     const TrainConfig& cfg) const override;

    // Multiplicative count noise: each count scaled by 1 + frac * U(-1, 1).
    // Models a slightly different "version" of the same source model.
    NGramModel jittered(double frac, uint64_t seed, const std::string& suffix = "'") const;

    size_t order() const { return opts_.order; }
    const Options& options() const { return opts_; }

    void save(std::ostream& os) const;
    static NGramModel load(std::istream& is);
    void save_file(const std::string& path) const;
    static NGramModel load_file(const std::string& path);

    bool operator==(const NGramModel& o) const {
        return vocab_ == o.vocab_ && counts_ == o.counts_ && opts_.order == o.opts_.order;
    }

private:
    NGramModel() = default;

    // counts_[c]: context of length c -> per-token counts; c in [0, order).
    using ContextTable = std::map<std::vector<TokenId>, std::vector<double>>;

    TokenDistribution distribution_for(const std::vector<TokenId>& prefix) const;
    void accumulate(const TokenSequence& seq, size_t loss_start);
    std::vector<double> normalized_weights() const;

    Vocabulary vocab_;
    Options opts_;
    std::vector<ContextTable> counts_;
    std::string descriptor_;
};

}  // namespace dald
