#pragma once

#include <cstdint>
#include <vector>

#include "dald/provider.hpp"

namespace dald {

struct Span {
    size_t start;
    size_t length;
};

// A sequence with disjoint masked spans, sorted by start. Spans never cover
// position 0, which is needed as scoring context.
struct MaskedSequence {
    TokenSequence base;
    std::vector<Span> spans;
};

// Places ceil(ratio * L / span_len) non-overlapping spans at uniformly random
// valid starts (rejection sampling, capped). Deterministic per seed; throws
// Infeasible when the spans cannot be placed disjointly.
MaskedSequence mask_spans(const TokenSequence& x, double ratio, size_t span_len, uint64_t seed);

// Regenerates each span left to right, conditioning on everything to the
// left (already-filled tokens included). Unmasked tokens are untouched and
// the output length equals the input length.
TokenSequence fill_masks(const MaskedSequence& m, const LanguageModelProvider& fill_model,
                         const GenerationConfig& cfg);

}  // namespace dald
