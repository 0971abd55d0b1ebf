#include "dald/perturb.hpp"

#include <algorithm>
#include <cmath>

#include "dald/rng.hpp"
#include "dald/sampling.hpp"

namespace dald {

MaskedSequence mask_spans(const TokenSequence& x, double ratio, size_t span_len, uint64_t seed) {
    if (ratio < 0.0 || ratio > 1.0) fail(ErrorKind::ConfigError, "mask ratio must be in [0,1]");
    if (span_len < 1) fail(ErrorKind::ConfigError, "span_len must be >= 1");
    const size_t L = x.length();
    const size_t needed =
        static_cast<size_t>(std::ceil(ratio * static_cast<double>(L) / static_cast<double>(span_len)));
    MaskedSequence out{x, {}};
    if (needed == 0) return out;
    if (L < 1 + span_len || needed * span_len > L - 1)
        fail(ErrorKind::Infeasible, "spans cannot fit after position 0");

    Rng rng(seed);
    // valid starts: [1, L - span_len]
    const size_t n_starts = L - span_len;
    std::vector<size_t> placed;
    const size_t max_attempts = 10 * needed * (n_starts ? n_starts : 1);
    size_t attempts = 0;
    while (placed.size() < needed && attempts < max_attempts) {
        ++attempts;
        size_t s = 1 + rng.next_index(n_starts);
        bool ok = true;
        for (size_t t : placed)
            if (s < t + span_len && t < s + span_len) {
                ok = false;
                break;
            }
        if (ok) placed.push_back(s);
    }
    if (placed.size() < needed)
        fail(ErrorKind::Infeasible, "could not place disjoint spans");
    std::sort(placed.begin(), placed.end());
    for (size_t s : placed) out.spans.push_back({s, span_len});
    return out;
}

TokenSequence fill_masks(const MaskedSequence& m, const LanguageModelProvider& fill_model,
                         const GenerationConfig& cfg) {
    cfg.validate();
    // spans must be sorted, disjoint, in bounds, and clear of position 0
    size_t prev_end = 1;
    for (const auto& sp : m.spans) {
        if (sp.start < prev_end || sp.start + sp.length > m.base.length())
            fail(ErrorKind::ConfigError, "invalid span layout");
        prev_end = sp.start + sp.length;
    }
    Rng rng(cfg.seed);
    TokenSequence out = m.base;
    for (const auto& sp : m.spans) {
        for (size_t i = sp.start; i < sp.start + sp.length; ++i) {
            TokenDistribution d =
                apply_temperature(fill_model.next_distribution(out.prefix(i)), cfg.temperature);
            out.ids()[i] = sample_token(d, rng);
        }
    }
    return out;
}

}  // namespace dald
