#pragma once

#include <string>
#include <vector>

#include "dald/tokenizer.hpp"
#include "dald/vocab.hpp"

namespace dald {

// One prompt/response pair generated by the target model. The source
// descriptor carries the exact model identity/version the sample came from.
struct AlignmentSample {
    TokenSequence prompt;
    TokenSequence response;
    std::string source;
};

struct AlignmentDataset {
    std::vector<AlignmentSample> samples;

    size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
};

// JSON Lines, one {"prompt": ..., "response": ..., "source": ...} per line.
void save_alignment_jsonl(const AlignmentDataset& data, const Vocabulary& vocab,
                          const std::string& path);
AlignmentDataset load_alignment_jsonl(const std::string& path, const Vocabulary& vocab,
                                      const TokenizerConfig& cfg = {});

}  // namespace dald
