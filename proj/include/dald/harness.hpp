#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dald/align.hpp"
#include "dald/detectors.hpp"
#include "dald/eval.hpp"
#include "dald/ngram.hpp"
#include "dald/tokenizer.hpp"

namespace dald {

struct DetectionPair {
    std::string id;
    TokenSequence human_text;
    TokenSequence machine_text;  // begins with prompt_prefix
    TokenSequence prompt_prefix;
};

struct DetectionDataset {
    std::vector<DetectionPair> pairs;
    std::string provenance;
};

// JSONL {"text": ...} one document per line, or plain text with blank-line
// document separators. Documents shorter than min_tokens are dropped;
// n_dropped reports how many.
std::vector<TokenSequence> ingest_corpus(const std::string& path, const Vocabulary& vocab,
                                         const TokenizerConfig& tok = {}, size_t min_tokens = 60,
                                         size_t* n_dropped = nullptr);

// Raw document strings with the same framing rules, for vocabulary building.
std::vector<std::string> load_documents(const std::string& path);

// Samples n_pairs documents without replacement (seeded by cfg.seed) and
// pairs each with a machine continuation of its first prefix_len tokens,
// matched in length to the human remainder.
DetectionDataset build_pairs(const std::vector<TokenSequence>& human_docs,
                             const LanguageModelProvider& target, size_t prefix_len,
                             size_t n_pairs, const GenerationConfig& cfg);

// Desk-scale stand-in for real text corpora: two disjoint order-2 Markov
// "text sources"; a held-out humanity model and the target share source A,
// the surrogate base trains on source B.
struct BenchmarkConfig {
    uint32_t vocab_size = 40;
    double chain_concentration = 2.0;  // logit scale of the Markov sources
    uint64_t chain_seed_a = 1;
    uint64_t chain_seed_b = 2;
    size_t corpus_a_tokens = 60000;  // first 2/3 -> target, rest -> humanity
    size_t corpus_b_tokens = 40000;
    size_t order_target = 3;
    size_t order_humanity = 4;
    size_t order_surrogate = 3;
    double smoothing_k = 0.1;
    double weight_ratio = 0.1;
    size_t n_pairs = 150;
    size_t doc_len = 120;
    size_t prefix_len = 30;
    double machine_temperature = 0.8;
    size_t align_count = 2000;
    size_t align_prompt_len = 30;
    size_t align_response_len = 20;
    double align_temperature = 1.0;
    uint64_t seed = 42;
};

struct SyntheticBenchmark {
    Vocabulary vocab;
    std::shared_ptr<NGramModel> target;
    std::shared_ptr<NGramModel> humanity;  // fill model for attack perturbations
    std::shared_ptr<NGramModel> surrogate;
    DetectionDataset pairs;
    AlignmentDataset alignment;  // master dataset; sweeps take nested prefixes
};

SyntheticBenchmark build_synthetic_benchmark(const BenchmarkConfig& cfg);

struct ExperimentConfig {
    BenchmarkConfig benchmark;
    std::vector<std::string> detectors = {"curvature"};
    PerturbConfig perturb;
    DnaConfig dna;
    TrainConfig train = [] {
        TrainConfig t;
        t.blend_lambda = 1.0;  // full replacement works best for count blending
        return t;
    }();
    size_t diag_contexts = 512;
    std::vector<size_t> sweep_sizes = {0, 250, 500, 1000, 2000};
    std::vector<double> attack_ratios = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    size_t attack_span_len = 5;
    uint64_t seed = 42;
    size_t jobs = 0;  // 0 = hardware concurrency
    std::string out_dir;
};

// Per-text score with its evaluation label and any detector flags.
struct ScoreRecord {
    std::string id;
    double score = 0.0;
    Label label = Label::human;
    std::vector<std::string> flags;
    std::optional<CurvatureStats> components;  // curvature detector only
};

extern const std::vector<std::string> kDetectorNames;

// One text, one detector; the building block of score_dataset. id and label
// are left for the caller to fill.
ScoreRecord score_text(const TokenSequence& x, const std::string& detector,
                       const LanguageModelProvider& scorer, const LanguageModelProvider& fill,
                       PerturbConfig pcfg, DnaConfig dcfg);

// Scores every text of the dataset with one detector. scorer provides the
// log-probabilities; fill_model drives mask-and-fill perturbations (detectgpt,
// npr). Texts fan out over a worker pool; per-text seeds derive from seed by
// dataset index, so results are independent of jobs.
std::vector<ScoreRecord> score_dataset(const DetectionDataset& data, const std::string& detector,
                                       const LanguageModelProvider& scorer,
                                       const LanguageModelProvider& fill_model,
                                       const PerturbConfig& perturb, const DnaConfig& dna,
                                       uint64_t seed, size_t jobs);

LabeledScoreSet to_score_set(const std::vector<ScoreRecord>& records);

struct DetectorRun {
    std::string detector;
    EvalReport unaligned;
    EvalReport aligned;
    std::vector<ScoreRecord> unaligned_records;
    std::vector<ScoreRecord> aligned_records;
};

struct ExperimentResult {
    std::string config_digest;
    std::vector<DetectorRun> detectors;
    AlignmentDiagnostics diag_unaligned;
    AlignmentDiagnostics diag_aligned;
};

std::string experiment_config_digest(const ExperimentConfig& cfg);

// Full paired pipeline: build benchmark, align surrogate, run each detector
// with both scorer variants, compute diagnostics, and (when out_dir is set)
// write scores/reports/ROC/diagnostics plus a manifest under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

struct SizeSweepRow {
    size_t size = 0;
    double auroc = 0.0;
    double mean_abs_curvature_diff = 0.0;  // Theorem-1 diagnostic
    double mean_kl = 0.0;
};

// Curvature AUROC over nested alignment subsets (first `size` samples of the
// master dataset; size 0 is the unaligned baseline).
std::vector<SizeSweepRow> alignment_size_sweep(const ExperimentConfig& cfg);
std::string size_sweep_csv(const std::vector<SizeSweepRow>& rows);

struct AttackSweepRow {
    double ratio = 0.0;
    std::string detector;
    double auroc_unaligned = 0.0;
    double auroc_aligned = 0.0;
};

// Masks ratio * L tokens of each machine text in attack_span_len spans and
// refills them from the humanity model; human texts are untouched.
std::vector<AttackSweepRow> attack_sweep(const ExperimentConfig& cfg);
std::string attack_sweep_csv(const std::vector<AttackSweepRow>& rows);

std::string scores_jsonl(const std::vector<ScoreRecord>& records, const std::string& detector);

}  // namespace dald
