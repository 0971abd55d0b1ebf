#include "dald/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "dald/util.hpp"

namespace dald {

using nlohmann::json;

namespace {

json benchmark_to_json(const BenchmarkConfig& b) {
    return {{"vocab_size", b.vocab_size},
            {"chain_concentration", b.chain_concentration},
            {"chain_seed_a", b.chain_seed_a},
            {"chain_seed_b", b.chain_seed_b},
            {"corpus_a_tokens", b.corpus_a_tokens},
            {"corpus_b_tokens", b.corpus_b_tokens},
            {"order_target", b.order_target},
            {"order_humanity", b.order_humanity},
            {"order_surrogate", b.order_surrogate},
            {"smoothing_k", b.smoothing_k},
            {"weight_ratio", b.weight_ratio},
            {"n_pairs", b.n_pairs},
            {"doc_len", b.doc_len},
            {"prefix_len", b.prefix_len},
            {"machine_temperature", b.machine_temperature},
            {"align_count", b.align_count},
            {"align_prompt_len", b.align_prompt_len},
            {"align_response_len", b.align_response_len},
            {"align_temperature", b.align_temperature},
            {"seed", b.seed}};
}

json experiment_to_json(const ExperimentConfig& c) {
    return {{"benchmark", benchmark_to_json(c.benchmark)},
            {"detectors", c.detectors},
            {"perturb",
             {{"count", c.perturb.count},
              {"mask_ratio", c.perturb.mask_ratio},
              {"span_len", c.perturb.span_len},
              {"fill_temperature", c.perturb.fill_temperature}}},
            {"dna",
             {{"truncation", c.dna.truncation},
              {"regenerations", c.dna.regenerations},
              {"ngram_min", c.dna.ngram_min},
              {"ngram_max", c.dna.ngram_max},
              {"temperature", c.dna.temperature}}},
            {"train",
             {{"epochs", c.train.epochs},
              {"learning_rate", c.train.learning_rate},
              {"batch_size", c.train.batch_size},
              {"seed", c.train.seed},
              {"prompt_masking", c.train.prompt_masking},
              {"blend_lambda", c.train.blend_lambda}}},
            {"diag_contexts", c.diag_contexts},
            {"sweep_sizes", c.sweep_sizes},
            {"attack_ratios", c.attack_ratios},
            {"attack_span_len", c.attack_span_len},
            {"seed", c.seed}};
}

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception&) {
            fail(ErrorKind::ConfigError, std::string("bad value for key: ") + key);
        }
    }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(ErrorKind::ConfigError, "unknown config key " + where + key);
    }
}

void parse_benchmark(const json& j, BenchmarkConfig& b) {
    check_keys(j,
               {"vocab_size", "chain_concentration", "chain_seed_a", "chain_seed_b",
                "corpus_a_tokens", "corpus_b_tokens", "order_target", "order_humanity",
                "order_surrogate", "smoothing_k", "weight_ratio", "n_pairs", "doc_len",
                "prefix_len", "machine_temperature", "align_count", "align_prompt_len",
                "align_response_len", "align_temperature", "seed"},
               "benchmark.");
    take(j, "vocab_size", b.vocab_size);
    take(j, "chain_concentration", b.chain_concentration);
    take(j, "chain_seed_a", b.chain_seed_a);
    take(j, "chain_seed_b", b.chain_seed_b);
    take(j, "corpus_a_tokens", b.corpus_a_tokens);
    take(j, "corpus_b_tokens", b.corpus_b_tokens);
    take(j, "order_target", b.order_target);
    take(j, "order_humanity", b.order_humanity);
    take(j, "order_surrogate", b.order_surrogate);
    take(j, "smoothing_k", b.smoothing_k);
    take(j, "weight_ratio", b.weight_ratio);
    take(j, "n_pairs", b.n_pairs);
    take(j, "doc_len", b.doc_len);
    take(j, "prefix_len", b.prefix_len);
    take(j, "machine_temperature", b.machine_temperature);
    take(j, "align_count", b.align_count);
    take(j, "align_prompt_len", b.align_prompt_len);
    take(j, "align_response_len", b.align_response_len);
    take(j, "align_temperature", b.align_temperature);
    take(j, "seed", b.seed);
}

}  // namespace

ExperimentConfig experiment_config_from_json(const std::string& json_text) {
    json j = json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        fail(ErrorKind::ParseError, "config is not a JSON object");
    check_keys(j,
               {"benchmark", "detectors", "perturb", "dna", "train", "diag_contexts",
                "sweep_sizes", "attack_ratios", "attack_span_len", "seed", "jobs", "out_dir"},
               "");
    ExperimentConfig c;
    if (j.contains("benchmark")) parse_benchmark(j["benchmark"], c.benchmark);
    take(j, "detectors", c.detectors);
    if (j.contains("perturb")) {
        const json& p = j["perturb"];
        check_keys(p, {"count", "mask_ratio", "span_len", "fill_temperature"}, "perturb.");
        take(p, "count", c.perturb.count);
        take(p, "mask_ratio", c.perturb.mask_ratio);
        take(p, "span_len", c.perturb.span_len);
        take(p, "fill_temperature", c.perturb.fill_temperature);
    }
    if (j.contains("dna")) {
        const json& p = j["dna"];
        check_keys(p, {"truncation", "regenerations", "ngram_min", "ngram_max", "temperature"},
                   "dna.");
        take(p, "truncation", c.dna.truncation);
        take(p, "regenerations", c.dna.regenerations);
        take(p, "ngram_min", c.dna.ngram_min);
        take(p, "ngram_max", c.dna.ngram_max);
        take(p, "temperature", c.dna.temperature);
    }
    if (j.contains("train")) {
        const json& p = j["train"];
        check_keys(p,
                   {"epochs", "learning_rate", "batch_size", "seed", "prompt_masking",
                    "blend_lambda"},
                   "train.");
        take(p, "epochs", c.train.epochs);
        take(p, "learning_rate", c.train.learning_rate);
        take(p, "batch_size", c.train.batch_size);
        take(p, "seed", c.train.seed);
        take(p, "prompt_masking", c.train.prompt_masking);
        take(p, "blend_lambda", c.train.blend_lambda);
    }
    take(j, "diag_contexts", c.diag_contexts);
    take(j, "sweep_sizes", c.sweep_sizes);
    take(j, "attack_ratios", c.attack_ratios);
    take(j, "attack_span_len", c.attack_span_len);
    take(j, "seed", c.seed);
    take(j, "jobs", c.jobs);
    take(j, "out_dir", c.out_dir);
    for (const auto& det : c.detectors) {
        bool known = false;
        for (const auto& name : kDetectorNames) known = known || det == name;
        if (!known) fail(ErrorKind::ConfigError, "unknown detector: " + det);
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::IoError, "cannot open config: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    std::string text = buf.str();
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".toml")
        text = toml_to_json(text);
    return experiment_config_from_json(text);
}

std::string experiment_config_canonical_json(const ExperimentConfig& cfg) {
    return experiment_to_json(cfg).dump();
}

std::string experiment_config_digest(const ExperimentConfig& cfg) {
    return hex64(fnv1a(experiment_config_canonical_json(cfg)));
}

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

json parse_toml_scalar(const std::string& raw, size_t lineno) {
    std::string v = trim(raw);
    if (v.empty()) fail(ErrorKind::ParseError, "empty value at line " + std::to_string(lineno));
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            fail(ErrorKind::ParseError, "unterminated string at line " + std::to_string(lineno));
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    json num = json::parse(v, nullptr, false);
    if (num.is_discarded() || !num.is_number())
        fail(ErrorKind::ParseError, "bad value at line " + std::to_string(lineno));
    return num;
}

json parse_toml_value(const std::string& raw, size_t lineno) {
    std::string v = trim(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']')
            fail(ErrorKind::ParseError, "unterminated array at line " + std::to_string(lineno));
        json arr = json::array();
        std::string inner = v.substr(1, v.size() - 2);
        size_t start = 0;
        while (start <= inner.size()) {
            size_t comma = inner.find(',', start);
            std::string item = inner.substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item, lineno));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return arr;
    }
    return parse_toml_scalar(v, lineno);
}

// strips a trailing # comment, respecting quoted strings
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

}  // namespace

std::string toml_to_json(const std::string& toml_text) {
    json root = json::object();
    json* section = &root;
    std::istringstream is(toml_text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                fail(ErrorKind::ParseError, "bad section at line " + std::to_string(lineno));
            std::string name = trim(s.substr(1, s.size() - 2));
            section = &root;
            size_t start = 0;
            while (start <= name.size()) {
                size_t dot = name.find('.', start);
                std::string part = trim(name.substr(
                    start, dot == std::string::npos ? std::string::npos : dot - start));
                if (part.empty())
                    fail(ErrorKind::ParseError, "bad section at line " + std::to_string(lineno));
                section = &(*section)[part];
                if (dot == std::string::npos) break;
                start = dot + 1;
            }
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            fail(ErrorKind::ParseError, "expected key = value at line " + std::to_string(lineno));
        std::string key = trim(s.substr(0, eq));
        if (key.empty())
            fail(ErrorKind::ParseError, "empty key at line " + std::to_string(lineno));
        (*section)[key] = parse_toml_value(s.substr(eq + 1), lineno);
    }
    return root.dump();
}

}  // namespace dald
