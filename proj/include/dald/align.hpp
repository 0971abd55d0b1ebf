#pragma once

#include <memory>
#include <vector>

#include "dald/align_data.hpp"
#include "dald/provider.hpp"
#include "dald/train.hpp"

namespace dald {

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<uint64_t> bins;
};

// Figure-level distribution-alignment diagnostics: divergence between target
// and surrogate over sampled contexts, plus curvature distributions of the
// evaluation texts under both models.
struct AlignmentDiagnostics {
    double mean_kl = 0.0;  // KL(target || surrogate), nats
    double mean_tv = 0.0;
    Histogram hist_target_human, hist_target_machine;
    Histogram hist_surrogate_human, hist_surrogate_machine;
    // mean machine curvature - mean human curvature, per scorer
    double curvature_gap_target = 0.0;
    double curvature_gap_surrogate = 0.0;
    // mean |d(X, surrogate) - d(X, target)| over all texts
    double mean_abs_curvature_diff = 0.0;
    // smallest next-token probability assigned to any scored token
    double min_observed_prob = 1.0;
};

// One sample per prompt via sample_completion; responses keep only the
// generated continuation. Deterministic given cfg.seed (per-prompt seeds are
// derived from it by index).
AlignmentDataset collect_alignment_dataset(const LanguageModelProvider& target,
                                           const std::vector<TokenSequence>& prompts,
                                           const GenerationConfig& cfg);

// Dispatches to the provider's own fine-tuning realization. Throws
// NotTrainable for providers without one (e.g. remote clients).
std::shared_ptr<LanguageModelProvider> finetune_surrogate(const LanguageModelProvider& surrogate,
                                                          const AlignmentDataset& data,
                                                          const TrainConfig& cfg);

// Samples n_contexts prefixes (uniform text, uniform position >= 1) from the
// pooled texts and fills the diagnostics above. Deterministic given seed.
AlignmentDiagnostics alignment_report(const LanguageModelProvider& target,
                                      const LanguageModelProvider& surrogate,
                                      const std::vector<TokenSequence>& human_texts,
                                      const std::vector<TokenSequence>& machine_texts,
                                      size_t n_contexts, uint64_t seed);

std::string alignment_diagnostics_json(const AlignmentDiagnostics& d);

}  // namespace dald
