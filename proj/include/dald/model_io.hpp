#pragma once

#include <memory>
#include <string>

#include "dald/provider.hpp"

namespace dald {

// Loads either built-in model kind from the shared container format,
// dispatching on the type tag after the magic.
std::shared_ptr<LanguageModelProvider> load_model_file(const std::string& path);

}  // namespace dald
