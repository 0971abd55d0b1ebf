#include "dald/align_data.hpp"

#include <fstream>

#include <json.hpp>

#include "dald/error.hpp"

namespace dald {

void save_alignment_jsonl(const AlignmentDataset& data, const Vocabulary& vocab,
                          const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::IoError, "cannot open for write: " + path);
    for (const auto& s : data.samples) {
        nlohmann::json j;
        j["prompt"] = detokenize(s.prompt, vocab);
        j["response"] = detokenize(s.response, vocab);
        j["source"] = s.source;
        os << j.dump() << "\n";
    }
}

AlignmentDataset load_alignment_jsonl(const std::string& path, const Vocabulary& vocab,
                                      const TokenizerConfig& cfg) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::IoError, "cannot open: " + path);
    AlignmentDataset out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("prompt") || !j.contains("response"))
            fail(ErrorKind::ParseError,
                 "bad alignment sample at line " + std::to_string(lineno));
        AlignmentSample s;
        s.prompt = encode(j["prompt"].get<std::string>(), vocab, cfg);
        s.response = encode(j["response"].get<std::string>(), vocab, cfg);
        s.source = j.value("source", "");
        if (s.response.empty())
            fail(ErrorKind::ParseError,
                 "empty response at line " + std::to_string(lineno));
        out.samples.push_back(std::move(s));
    }
    if (out.empty()) fail(ErrorKind::EmptyCorpus, "no alignment samples in " + path);
    return out;
}

}  // namespace dald
