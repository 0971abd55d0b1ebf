#include "dald/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dald/perturb.hpp"
#include "dald/rng.hpp"
#include "dald/sampling.hpp"
#include "dald/util.hpp"

namespace dald {

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::vector<std::string> load_documents(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorKind::IoError, "cannot open: " + path);
    std::vector<std::string> docs;
    std::string line;
    size_t lineno = 0;
    bool jsonl = false, probed = false;
    std::string pending;
    while (std::getline(is, line)) {
        ++lineno;
        if (!probed) {
            // first non-empty line decides the framing
            size_t p = line.find_first_not_of(" \t\r");
            if (p == std::string::npos) continue;
            probed = true;
            jsonl = line[p] == '{';
        }
        if (jsonl) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("text") || !j["text"].is_string())
                fail(ErrorKind::ParseError, "bad document at line " + std::to_string(lineno));
            docs.push_back(j["text"].get<std::string>());
        } else {
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                if (!pending.empty()) docs.push_back(std::move(pending));
                pending.clear();
            } else {
                if (!pending.empty()) pending += ' ';
                pending += line;
            }
        }
    }
    if (!pending.empty()) docs.push_back(std::move(pending));
    if (docs.empty()) fail(ErrorKind::EmptyCorpus, "no documents in " + path);
    return docs;
}

std::vector<TokenSequence> ingest_corpus(const std::string& path, const Vocabulary& vocab,
                                         const TokenizerConfig& tok, size_t min_tokens,
                                         size_t* n_dropped) {
    std::vector<TokenSequence> out;
    size_t dropped = 0;
    for (const auto& doc : load_documents(path)) {
        TokenSequence seq = encode(doc, vocab, tok);
        if (seq.length() < min_tokens) {
            ++dropped;
            continue;
        }
        out.push_back(std::move(seq));
    }
    if (n_dropped) *n_dropped = dropped;
    if (out.empty()) fail(ErrorKind::EmptyCorpus, "all documents filtered from " + path);
    return out;
}

DetectionDataset build_pairs(const std::vector<TokenSequence>& human_docs,
                             const LanguageModelProvider& target, size_t prefix_len,
                             size_t n_pairs, const GenerationConfig& cfg) {
    cfg.validate();
    std::vector<size_t> eligible;
    for (size_t i = 0; i < human_docs.size(); ++i)
        if (human_docs[i].length() > prefix_len) eligible.push_back(i);
    if (eligible.size() < n_pairs)
        fail(ErrorKind::InsufficientCorpus,
             "need " + std::to_string(n_pairs) + " documents longer than " +
                 std::to_string(prefix_len) + " tokens, have " + std::to_string(eligible.size()));

    Rng rng(cfg.seed);
    rng.shuffle(eligible);
    eligible.resize(n_pairs);
    std::sort(eligible.begin(), eligible.end());

    DetectionDataset out;
    out.provenance = target.descriptor();
    out.pairs.reserve(n_pairs);
    for (size_t k = 0; k < n_pairs; ++k) {
        const TokenSequence& human = human_docs[eligible[k]];
        DetectionPair pair;
        char buf[16];
        std::snprintf(buf, sizeof buf, "d%04zu", eligible[k]);
        pair.id = buf;
        pair.human_text = human;
        pair.prompt_prefix = human.prefix(prefix_len);
        GenerationConfig per = cfg;
        per.max_new_tokens = human.length() - prefix_len;
        per.seed = derive_seed(cfg.seed, k);
        pair.machine_text = sample_completion(target, pair.prompt_prefix, per);
        out.pairs.push_back(std::move(pair));
    }
    return out;
}

namespace {

double gaussian(Rng& rng) {
    double u1;
    do {
        u1 = rng.next_double();
    } while (u1 <= 0.0);
    double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Order-2 Markov source with softmax(concentration * N(0,1)) transition rows.
struct MarkovSource {
    uint32_t W;
    std::vector<std::vector<double>> rows;  // (prev2 * W + prev1) -> probs

    MarkovSource(uint32_t vocab_size, double concentration, uint64_t seed) : W(vocab_size) {
        Rng rng(seed);
        rows.resize(static_cast<size_t>(W) * W);
        for (auto& row : rows) {
            row.resize(W);
            double mx = -1e300;
            for (auto& v : row) {
                v = concentration * gaussian(rng);
                mx = std::max(mx, v);
            }
            double sum = 0.0;
            for (auto& v : row) {
                v = std::exp(v - mx);
                sum += v;
            }
            for (auto& v : row) v /= sum;
        }
    }

    TokenId draw(const std::vector<double>& probs, Rng& rng) const {
        double u = rng.next_double();
        double acc = 0.0;
        for (TokenId j = 0; j < W; ++j) {
            acc += probs[j];
            if (u < acc) return j;
        }
        return W - 1;
    }

    TokenSequence sample(size_t n, uint64_t seed) const {
        Rng rng(seed);
        TokenSequence out;
        out.push_back(static_cast<TokenId>(rng.next_index(W)));
        if (n > 1) out.push_back(static_cast<TokenId>(rng.next_index(W)));
        while (out.length() < n) {
            size_t L = out.length();
            out.push_back(draw(rows[static_cast<size_t>(out[L - 2]) * W + out[L - 1]], rng));
        }
        return out;
    }
};

TokenSequence sample_doc(const LanguageModelProvider& model, size_t len, TokenId start,
                         double temperature, uint64_t seed) {
    GenerationConfig cfg;
    cfg.temperature = temperature;
    cfg.max_new_tokens = len - 1;
    cfg.seed = seed;
    TokenSequence prompt;
    prompt.push_back(start);
    return sample_completion(model, prompt, cfg);
}

}  // namespace

SyntheticBenchmark build_synthetic_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.vocab_size < 2) fail(ErrorKind::ConfigError, "vocab_size must be >= 2");
    SyntheticBenchmark bench;
    std::vector<std::string> tokens;
    tokens.reserve(cfg.vocab_size);
    for (uint32_t i = 0; i < cfg.vocab_size; ++i) tokens.push_back("w" + std::to_string(i));
    bench.vocab = Vocabulary(std::move(tokens));

    MarkovSource source_a(cfg.vocab_size, cfg.chain_concentration, cfg.chain_seed_a);
    MarkovSource source_b(cfg.vocab_size, cfg.chain_concentration, cfg.chain_seed_b);
    TokenSequence corpus_a = source_a.sample(cfg.corpus_a_tokens, derive_seed(cfg.seed, 0));
    TokenSequence corpus_b = source_b.sample(cfg.corpus_b_tokens, derive_seed(cfg.seed, 1));

    size_t target_tokens = cfg.corpus_a_tokens * 2 / 3;
    TokenSequence target_corpus = corpus_a.prefix(target_tokens);
    TokenSequence humanity_corpus = corpus_a.slice(target_tokens, corpus_a.length());

    NGramModel::Options opt;
    opt.smoothing_k = cfg.smoothing_k;
    opt.weight_ratio = cfg.weight_ratio;

    opt.order = cfg.order_target;
    bench.target = std::make_shared<NGramModel>(
        NGramModel::train({target_corpus}, bench.vocab, opt, "target"));
    opt.order = cfg.order_humanity;
    bench.humanity = std::make_shared<NGramModel>(
        NGramModel::train({humanity_corpus}, bench.vocab, opt, "humanity"));
    opt.order = cfg.order_surrogate;
    bench.surrogate = std::make_shared<NGramModel>(
        NGramModel::train({corpus_b}, bench.vocab, opt, "surrogate"));

    // "human" documents come from the held-out humanity model
    Rng start_rng(derive_seed(cfg.seed, 10));
    std::vector<TokenSequence> docs;
    docs.reserve(cfg.n_pairs);
    for (size_t i = 0; i < cfg.n_pairs; ++i)
        docs.push_back(sample_doc(*bench.humanity, cfg.doc_len,
                                  static_cast<TokenId>(start_rng.next_index(cfg.vocab_size)), 1.0,
                                  derive_seed(derive_seed(cfg.seed, 11), i)));

    GenerationConfig gen;
    gen.temperature = cfg.machine_temperature;
    gen.seed = derive_seed(cfg.seed, 12);
    bench.pairs = build_pairs(docs, *bench.target, cfg.prefix_len, cfg.n_pairs, gen);

    // alignment prompts are short humanity snippets; responses come from the
    // target at sampling temperature so the collected data reflects its
    // unsharpened next-token distribution
    Rng prompt_rng(derive_seed(cfg.seed, 20));
    std::vector<TokenSequence> prompts;
    prompts.reserve(cfg.align_count);
    for (size_t i = 0; i < cfg.align_count; ++i)
        prompts.push_back(sample_doc(*bench.humanity, cfg.align_prompt_len,
                                     static_cast<TokenId>(prompt_rng.next_index(cfg.vocab_size)),
                                     1.0, derive_seed(derive_seed(cfg.seed, 21), i)));
    GenerationConfig collect;
    collect.temperature = cfg.align_temperature;
    collect.max_new_tokens = cfg.align_response_len;
    collect.seed = derive_seed(cfg.seed, 22);
    bench.alignment = collect_alignment_dataset(*bench.target, prompts, collect);
    return bench;
}

const std::vector<std::string> kDetectorNames = {"likelihood", "entropy", "logrank", "lrr",
                                                 "curvature",  "detectgpt", "npr",   "dna"};

ScoreRecord score_text(const TokenSequence& x, const std::string& detector,
                       const LanguageModelProvider& scorer, const LanguageModelProvider& fill,
                       PerturbConfig pcfg, DnaConfig dcfg) {
    ScoreRecord r;
    if (detector == "likelihood") {
        r.score = score_likelihood(x, scorer);
    } else if (detector == "entropy") {
        r.score = score_entropy(x, scorer);
    } else if (detector == "logrank") {
        r.score = score_logrank(x, scorer);
    } else if (detector == "lrr") {
        Score s = score_lrr(x, scorer);
        r.score = s.value;
        if (s.degenerate) r.flags.push_back("degenerate");
    } else if (detector == "curvature") {
        CurvatureStats stats = conditional_curvature(x, scorer);
        r.score = stats.d;
        r.components = stats;
    } else if (detector == "detectgpt") {
        Score s = perturbation_discrepancy(x, scorer, fill, pcfg);
        r.score = s.value;
        if (s.degenerate) r.flags.push_back("degenerate");
    } else if (detector == "npr") {
        Score s = score_npr(x, scorer, fill, pcfg);
        r.score = s.value;
        if (s.degenerate) r.flags.push_back("degenerate");
    } else if (detector == "dna") {
        r.score = dna_bscore(x, scorer, dcfg);
    } else {
        fail(ErrorKind::ConfigError, "unknown detector: " + detector);
    }
    return r;
}

std::vector<ScoreRecord> score_dataset(const DetectionDataset& data, const std::string& detector,
                                       const LanguageModelProvider& scorer,
                                       const LanguageModelProvider& fill_model,
                                       const PerturbConfig& perturb, const DnaConfig& dna,
                                       uint64_t seed, size_t jobs) {
    if (data.pairs.empty()) fail(ErrorKind::EmptyCorpus, "no pairs to score");
    size_t n = data.pairs.size() * 2;
    std::vector<ScoreRecord> records(n);
    std::vector<std::exception_ptr> errors(n);
    parallel_for(n, jobs, [&](size_t i) {
        try {
            const DetectionPair& pair = data.pairs[i / 2];
            bool machine = i % 2 == 1;
            const TokenSequence& x = machine ? pair.machine_text : pair.human_text;
            PerturbConfig pcfg = perturb;
            pcfg.seed = derive_seed(seed, i);
            DnaConfig dcfg = dna;
            dcfg.seed = derive_seed(seed, i);
            records[i] = score_text(x, detector, scorer, fill_model, pcfg, dcfg);
            records[i].id = pair.id + (machine ? "/machine" : "/human");
            records[i].label = machine ? Label::machine : Label::human;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return records;
}

LabeledScoreSet to_score_set(const std::vector<ScoreRecord>& records) {
    LabeledScoreSet s;
    s.entries.reserve(records.size());
    for (const auto& r : records) s.entries.push_back({r.id, r.score, r.label});
    return s;
}

std::string scores_jsonl(const std::vector<ScoreRecord>& records, const std::string& detector) {
    std::ostringstream os;
    for (const auto& r : records) {
        nlohmann::json j;
        j["id"] = r.id;
        j["detector"] = detector;
        j["score"] = r.score;
        j["label"] = r.label == Label::machine ? "machine" : "human";
        j["flags"] = r.flags;
        if (r.components)
            j["components"] = {{"log_p", r.components->log_p},
                               {"mu", r.components->mu},
                               {"sigma", r.components->sigma}};
        os << j.dump() << "\n";
    }
    return os.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::IoError, "cannot open for write: " + path.string());
    os << content;
}

std::vector<TokenSequence> human_texts(const DetectionDataset& d) {
    std::vector<TokenSequence> out;
    for (const auto& p : d.pairs) out.push_back(p.human_text);
    return out;
}

std::vector<TokenSequence> machine_texts(const DetectionDataset& d) {
    std::vector<TokenSequence> out;
    for (const auto& p : d.pairs) out.push_back(p.machine_text);
    return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    ExperimentResult result;
    result.config_digest = experiment_config_digest(cfg);

    std::filesystem::path out_dir;
    if (!cfg.out_dir.empty()) {
        out_dir = cfg.out_dir;
        std::filesystem::create_directories(out_dir);
    }

    nlohmann::json manifest;
    manifest["config_digest"] = result.config_digest;
    manifest["detectors"] = cfg.detectors;
    manifest["status"] = "running";

    try {
        SyntheticBenchmark bench = build_synthetic_benchmark(cfg.benchmark);
        std::shared_ptr<LanguageModelProvider> aligned =
            finetune_surrogate(*bench.surrogate, bench.alignment, cfg.train);

        std::vector<TokenSequence> humans = human_texts(bench.pairs);
        std::vector<TokenSequence> machines = machine_texts(bench.pairs);
        result.diag_unaligned = alignment_report(*bench.target, *bench.surrogate, humans, machines,
                                                 cfg.diag_contexts, derive_seed(cfg.seed, 100));
        result.diag_aligned = alignment_report(*bench.target, *aligned, humans, machines,
                                               cfg.diag_contexts, derive_seed(cfg.seed, 100));

        for (size_t d = 0; d < cfg.detectors.size(); ++d) {
            const std::string& det = cfg.detectors[d];
            uint64_t det_seed = derive_seed(cfg.seed, 7000 + d);
            DetectorRun run;
            run.detector = det;
            run.unaligned_records = score_dataset(bench.pairs, det, *bench.surrogate,
                                                  *bench.surrogate, cfg.perturb, cfg.dna,
                                                  det_seed, cfg.jobs);
            run.aligned_records = score_dataset(bench.pairs, det, *aligned, *bench.surrogate,
                                                cfg.perturb, cfg.dna, det_seed, cfg.jobs);
            run.unaligned = evaluate(to_score_set(run.unaligned_records), det,
                                     "synthetic/unaligned", result.config_digest);
            run.aligned = evaluate(to_score_set(run.aligned_records), det, "synthetic/aligned",
                                   result.config_digest);
            result.detectors.push_back(std::move(run));
        }
    } catch (const DaldError& e) {
        if (!cfg.out_dir.empty()) {
            manifest["status"] = "failed";
            manifest["error"] = e.what();
            write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
        }
        throw;
    }

    if (!cfg.out_dir.empty()) {
        for (const auto& run : result.detectors) {
            write_file(out_dir / ("scores_" + run.detector + "_unaligned.jsonl"),
                       scores_jsonl(run.unaligned_records, run.detector));
            write_file(out_dir / ("scores_" + run.detector + "_aligned.jsonl"),
                       scores_jsonl(run.aligned_records, run.detector));
            write_file(out_dir / ("report_" + run.detector + "_unaligned.json"),
                       eval_report_json(run.unaligned) + "\n");
            write_file(out_dir / ("report_" + run.detector + "_aligned.json"),
                       eval_report_json(run.aligned) + "\n");
            write_file(out_dir / ("roc_" + run.detector + "_unaligned.csv"),
                       roc_csv(run.unaligned.roc));
            write_file(out_dir / ("roc_" + run.detector + "_aligned.csv"),
                       roc_csv(run.aligned.roc));
        }
        write_file(out_dir / "diagnostics_unaligned.json",
                   alignment_diagnostics_json(result.diag_unaligned) + "\n");
        write_file(out_dir / "diagnostics_aligned.json",
                   alignment_diagnostics_json(result.diag_aligned) + "\n");
        manifest["status"] = "ok";
        write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    }
    return result;
}

std::vector<SizeSweepRow> alignment_size_sweep(const ExperimentConfig& cfg) {
    SyntheticBenchmark bench = build_synthetic_benchmark(cfg.benchmark);
    std::vector<TokenSequence> humans = human_texts(bench.pairs);
    std::vector<TokenSequence> machines = machine_texts(bench.pairs);
    std::string digest = experiment_config_digest(cfg);

    std::vector<SizeSweepRow> rows;
    for (size_t size : cfg.sweep_sizes) {
        if (size > bench.alignment.size())
            fail(ErrorKind::ConfigError, "sweep size exceeds master alignment dataset");
        std::shared_ptr<LanguageModelProvider> model;
        if (size == 0) {
            model = bench.surrogate;
        } else {
            // nested subsets: the first `size` samples of the master dataset
            AlignmentDataset subset;
            subset.samples.assign(bench.alignment.samples.begin(),
                                  bench.alignment.samples.begin() + size);
            model = finetune_surrogate(*bench.surrogate, subset, cfg.train);
        }
        std::vector<ScoreRecord> records =
            score_dataset(bench.pairs, "curvature", *model, *bench.surrogate, cfg.perturb,
                          cfg.dna, derive_seed(cfg.seed, 7000), cfg.jobs);
        AlignmentDiagnostics diag = alignment_report(*bench.target, *model, humans, machines,
                                                     cfg.diag_contexts, derive_seed(cfg.seed, 100));
        SizeSweepRow row;
        row.size = size;
        row.auroc = auroc(to_score_set(records));
        row.mean_abs_curvature_diff = diag.mean_abs_curvature_diff;
        row.mean_kl = diag.mean_kl;
        rows.push_back(row);
    }
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_file(std::filesystem::path(cfg.out_dir) / "sweep_align_size.csv",
                   size_sweep_csv(rows));
    }
    return rows;
}

std::string size_sweep_csv(const std::vector<SizeSweepRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "size,auroc,mean_abs_curvature_diff,mean_kl\n";
    for (const auto& r : rows)
        os << r.size << "," << r.auroc << "," << r.mean_abs_curvature_diff << "," << r.mean_kl
           << "\n";
    return os.str();
}

std::vector<AttackSweepRow> attack_sweep(const ExperimentConfig& cfg) {
    SyntheticBenchmark bench = build_synthetic_benchmark(cfg.benchmark);
    std::shared_ptr<LanguageModelProvider> aligned =
        finetune_surrogate(*bench.surrogate, bench.alignment, cfg.train);

    std::vector<AttackSweepRow> rows;
    for (size_t ri = 0; ri < cfg.attack_ratios.size(); ++ri) {
        double ratio = cfg.attack_ratios[ri];
        if (ratio < 0.0 || ratio > 1.0) fail(ErrorKind::ConfigError, "attack ratio outside [0,1]");
        DetectionDataset attacked = bench.pairs;
        if (ratio > 0.0) {
            uint64_t ratio_seed = derive_seed(cfg.seed, 9000 + ri);
            GenerationConfig fill_cfg;
            fill_cfg.temperature = 1.0;
            for (size_t i = 0; i < attacked.pairs.size(); ++i) {
                MaskedSequence m = mask_spans(attacked.pairs[i].machine_text, ratio,
                                              cfg.attack_span_len, derive_seed(ratio_seed, i));
                fill_cfg.seed = derive_seed(ratio_seed, attacked.pairs.size() + i);
                // the attacker paraphrases with human-like text, so spans are
                // refilled from the humanity model
                attacked.pairs[i].machine_text = fill_masks(m, *bench.humanity, fill_cfg);
            }
        }
        for (size_t d = 0; d < cfg.detectors.size(); ++d) {
            const std::string& det = cfg.detectors[d];
            uint64_t det_seed = derive_seed(cfg.seed, 7000 + d);
            AttackSweepRow row;
            row.ratio = ratio;
            row.detector = det;
            row.auroc_unaligned =
                auroc(to_score_set(score_dataset(attacked, det, *bench.surrogate,
                                                 *bench.surrogate, cfg.perturb, cfg.dna,
                                                 det_seed, cfg.jobs)));
            row.auroc_aligned =
                auroc(to_score_set(score_dataset(attacked, det, *aligned, *bench.surrogate,
                                                 cfg.perturb, cfg.dna, det_seed, cfg.jobs)));
            rows.push_back(std::move(row));
        }
    }
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        write_file(std::filesystem::path(cfg.out_dir) / "sweep_attack.csv",
                   attack_sweep_csv(rows));
    }
    return rows;
}

std::string attack_sweep_csv(const std::vector<AttackSweepRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "ratio,detector,auroc_unaligned,auroc_aligned\n";
    for (const auto& r : rows)
        os << r.ratio << "," << r.detector << "," << r.auroc_unaligned << "," << r.auroc_aligned
           << "\n";
    return os.str();
}

}  // namespace dald
