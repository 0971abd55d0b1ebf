#pragma once

#include <cstdint>
#include <memory>

#include "dald/align_data.hpp"
#include "dald/error.hpp"
#include "dald/provider.hpp"

namespace dald {

struct TrainConfig {
    size_t epochs = 1;
    double learning_rate = 0.1;
    size_t batch_size = 16;
    uint64_t seed = 0;
    bool prompt_masking = true;
    // Count-space realization for the n-gram path; ignored by gradient models.
    double blend_lambda = 0.7;

    void validate() const {
        if (learning_rate <= 0.0) fail(ErrorKind::ConfigError, "learning_rate must be > 0");
        if (batch_size < 1) fail(ErrorKind::ConfigError, "batch_size must be >= 1");
    }
};

// Built-in models that support alignment fine-tuning. The returned provider
// is a new model; the input is never mutated.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;
    virtual std::shared_ptr<LanguageModelProvider> finetuned(const AlignmentDataset& data,
                                                             const TrainConfig& cfg) const = 0;
};

}  // namespace dald
