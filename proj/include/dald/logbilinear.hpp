#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "dald/provider.hpp"
#include "dald/train.hpp"

namespace dald {

// Fixed-context log-bilinear model.
//
// Context is the last `context_window` tokens (BOS-padded on the left).
// Score(w) = e_w . h + b_w with h = sum_j C_j e_{ctx_j}; output is the
// softmax over the vocabulary. Zero-initialized parameters give the exact
// uniform distribution.
class LogBilinearLM : public LanguageModelProvider, public TrainableModel {
public:
    struct Options {
        size_t context_window = 2;
        size_t embed_dim = 8;
        double init_scale = 0.0;  // 0 = zero init; > 0 seeds uniform(-s, s)
        uint64_t init_seed = 0;
    };

    // A masked sequence: mask[i] == true means position i contributes loss.
    struct MaskedExample {
        TokenSequence seq;
        std::vector<bool> mask;
    };

    LogBilinearLM(const Vocabulary& vocab, const Options& opts,
                  const std::string& descriptor = "logbilinear");

    TokenDistribution next_distribution(const TokenSequence& prefix) const override;
    const Vocabulary& vocabulary() const override { return vocab_; }
    std::string descriptor() const override { return descriptor_; }

    // Exact gradient of the mean masked cross-entropy over the batch, in the
    // flat parameter layout. Throws AllMasked when nothing contributes.
    std::vector<double> gradient(const std::vector<MaskedExample>& batch) const;

    double masked_cross_entropy(const std::vector<MaskedExample>& batch) const;

    // Seeded plain SGD; returns a new model, *this is unchanged. If the final
    // training-set loss exceeds the initial one the input parameters win.
    LogBilinearLM trained(const std::vector<MaskedExample>& data, const TrainConfig& cfg) const;

    LogBilinearLM trained_on_corpus(const std::vector<TokenSequence>& corpus,
                                    const TrainConfig& cfg) const;

    std::shared_ptr<LanguageModelProvider> finetuned(const AlignmentDataset& data,
                                                     const TrainConfig& cfg) const override;

    static std::vector<MaskedExample> to_examples(const AlignmentDataset& data,
                                                  bool prompt_masking);

    // Flat parameter access: embeddings (W+1 rows, BOS last), then
    // context_window d*d matrices, then W biases.
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

    const Options& options() const { return opts_; }

    void save(std::ostream& os) const;
    static LogBilinearLM load(std::istream& is);
    void save_file(const std::string& path) const;
    static LogBilinearLM load_file(const std::string& path);

private:
    std::vector<TokenId> context_of(const TokenSequence& prefix) const;
    std::vector<double> logits_for(const std::vector<TokenId>& ctx,
                                   std::vector<double>* h_out) const;

    size_t emb_index(size_t token, size_t j) const { return token * opts_.embed_dim + j; }
    size_t ctx_index(size_t m, size_t r, size_t c) const {
        return emb_count_ + m * opts_.embed_dim * opts_.embed_dim + r * opts_.embed_dim + c;
    }
    size_t bias_index(size_t w) const { return emb_count_ + ctx_count_ + w; }

    Vocabulary vocab_;
    Options opts_;
    std::string descriptor_;
    size_t emb_count_ = 0;
    size_t ctx_count_ = 0;
    std::vector<double> params_;
};

}  // namespace dald
