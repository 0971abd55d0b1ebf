#include "dald/model_io.hpp"

#include <cstring>
#include <fstream>

#include "dald/binio.hpp"
#include "dald/logbilinear.hpp"
#include "dald/ngram.hpp"

namespace dald {

std::shared_ptr<LanguageModelProvider> load_model_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::IoError, "cannot open: " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, "DALDLM1\0", 8) != 0)
        fail(ErrorKind::ParseError, "not a model file: " + path);
    uint32_t tag = read_u32(is);
    is.seekg(0);
    switch (tag) {
        case 1:
            return std::make_shared<NGramModel>(NGramModel::load(is));
        case 2:
            return std::make_shared<LogBilinearLM>(LogBilinearLM::load(is));
        default:
            fail(ErrorKind::ParseError, "unknown model tag " + std::to_string(tag));
    }
}

}  // namespace dald
