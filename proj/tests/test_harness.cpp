#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dald/config.hpp"
#include "dald/harness.hpp"
#include "dald/rng.hpp"
#include "dald/sampling.hpp"

#include "helpers.hpp"

using namespace dald;
using namespace dald::test;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

// small benchmark for fast pipeline tests
BenchmarkConfig small_benchmark() {
    BenchmarkConfig b;
    b.corpus_a_tokens = 15000;
    b.corpus_b_tokens = 10000;
    b.n_pairs = 40;
    b.doc_len = 80;
    b.align_count = 400;
    return b;
}

}  // namespace

TEST_CASE("ingest_corpus JSONL and plain text framings") {
    {
        std::ofstream os("corpus.jsonl");
        os << R"({"text": "a b c d e f"})" << "\n";
        os << R"({"text": "a b"})" << "\n";
        os << R"({"text": "f e d c b a"})" << "\n";
    }
    auto [vocab, ids] = tokenize("a b c d e f");
    size_t dropped = 0;
    auto docs = ingest_corpus("corpus.jsonl", vocab, {}, 3, &dropped);
    CHECK(docs.size() == 2);
    CHECK(dropped == 1);
    CHECK(docs[0].length() == 6);

    {
        std::ofstream os("corpus.txt");
        os << "a b c\nd e f\n\nf e d\n\n\nc b a\n";
    }
    auto plain = ingest_corpus("corpus.txt", vocab, {}, 1);
    CHECK(plain.size() == 3);
    CHECK(plain[0].length() == 6);  // blank line joins the first two lines

    {
        std::ofstream os("corpus_bad.jsonl");
        os << R"({"text": "a b"})" << "\n";
        os << "{oops\n";
    }
    try {
        ingest_corpus("corpus_bad.jsonl", vocab, {}, 1);
        CHECK(false);
    } catch (const DaldError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("build_pairs protocol") {
    SyntheticBenchmark bench = build_synthetic_benchmark(small_benchmark());
    CHECK(bench.pairs.pairs.size() == 40);
    for (const auto& p : bench.pairs.pairs) {
        CHECK(p.machine_text.prefix(30) == p.prompt_prefix);
        CHECK(p.human_text.prefix(30) == p.prompt_prefix);
        CHECK(p.machine_text.length() == p.human_text.length());
    }
    // fixed seed -> identical ids across runs
    SyntheticBenchmark again = build_synthetic_benchmark(small_benchmark());
    for (size_t i = 0; i < bench.pairs.pairs.size(); ++i)
        CHECK(bench.pairs.pairs[i].id == again.pairs.pairs[i].id);

    // insufficient corpus
    std::vector<TokenSequence> tiny{bench.pairs.pairs[0].human_text};
    GenerationConfig gen;
    CHECK_THROWS_AS(build_pairs(tiny, *bench.target, 30, 5, gen), DaldError);
    CHECK_THROWS_AS(build_pairs({seq({0, 1})}, *bench.target, 30, 1, gen), DaldError);
}

TEST_CASE("benchmark alignment dataset shape") {
    SyntheticBenchmark bench = build_synthetic_benchmark(small_benchmark());
    CHECK(bench.alignment.size() == 400);
    for (const auto& s : bench.alignment.samples) {
        CHECK(s.prompt.length() == 30);
        CHECK(s.response.length() == 20);
        CHECK(s.source == "target");
    }
}

TEST_CASE("config digest ignores execution details, tracks semantics") {
    ExperimentConfig a, b;
    b.out_dir = "elsewhere";
    b.jobs = 7;
    CHECK(experiment_config_digest(a) == experiment_config_digest(b));
    b.benchmark.seed = 43;
    CHECK(experiment_config_digest(a) != experiment_config_digest(b));
}

TEST_CASE("config loads from JSON and TOML equivalently") {
    std::string json_text = R"({
        "detectors": ["curvature", "dna"],
        "seed": 99,
        "benchmark": {"vocab_size": 20, "n_pairs": 50},
        "train": {"blend_lambda": 0.9},
        "attack_ratios": [0.0, 0.25]
    })";
    {
        std::ofstream os("cfg.json");
        os << json_text;
    }
    {
        std::ofstream os("cfg.toml");
        os << "detectors = [\"curvature\", \"dna\"]  # detector list\n";
        os << "seed = 99\n";
        os << "attack_ratios = [0.0, 0.25]\n";
        os << "[benchmark]\n";
        os << "vocab_size = 20\n";
        os << "n_pairs = 50\n";
        os << "[train]\n";
        os << "blend_lambda = 0.9\n";
    }
    ExperimentConfig a = load_experiment_config("cfg.json");
    ExperimentConfig b = load_experiment_config("cfg.toml");
    CHECK(a.benchmark.vocab_size == 20);
    CHECK(a.benchmark.n_pairs == 50);
    CHECK(a.detectors == std::vector<std::string>{"curvature", "dna"});
    CHECK(a.train.blend_lambda == 0.9);
    CHECK(experiment_config_digest(a) == experiment_config_digest(b));

    {
        std::ofstream os("cfg_bad.json");
        os << R"({"detectors": ["warp-drive"]})";
    }
    CHECK_THROWS_AS(load_experiment_config("cfg_bad.json"), DaldError);
    {
        std::ofstream os("cfg_unknown.json");
        os << R"({"no_such_key": 1})";
    }
    CHECK_THROWS_AS(load_experiment_config("cfg_unknown.json"), DaldError);
}

TEST_CASE("score_dataset is independent of the worker count") {
    SyntheticBenchmark bench = build_synthetic_benchmark(small_benchmark());
    auto serial = score_dataset(bench.pairs, "curvature", *bench.surrogate, *bench.surrogate,
                                {}, {}, 7, 1);
    auto parallel = score_dataset(bench.pairs, "curvature", *bench.surrogate, *bench.surrogate,
                                  {}, {}, 7, 4);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].score == parallel[i].score);
        CHECK(serial[i].id == parallel[i].id);
    }
    CHECK(serial.size() == 80);
    CHECK(serial[0].label == Label::human);
    CHECK(serial[1].label == Label::machine);
    REQUIRE(serial[0].components.has_value());
    CHECK(serial[0].components->d == serial[0].score);
}

TEST_CASE("scores jsonl schema") {
    SyntheticBenchmark bench = build_synthetic_benchmark(small_benchmark());
    auto records = score_dataset(bench.pairs, "curvature", *bench.surrogate, *bench.surrogate,
                                 {}, {}, 7, 0);
    std::string jsonl = scores_jsonl(records, "curvature");
    CHECK(jsonl.find("\"detector\":\"curvature\"") != std::string::npos);
    CHECK(jsonl.find("\"components\"") != std::string::npos);
    CHECK(jsonl.find("\"log_p\"") != std::string::npos);
    CHECK(jsonl.find("\"flags\"") != std::string::npos);
}

TEST_CASE("run_experiment writes a complete, byte-identical artifact set") {
    ExperimentConfig cfg;
    cfg.benchmark = small_benchmark();
    cfg.diag_contexts = 128;
    cfg.detectors = {"curvature"};
    fs::remove_all("exp_run1");
    fs::remove_all("exp_run2");
    cfg.out_dir = "exp_run1";
    ExperimentResult r1 = run_experiment(cfg);
    cfg.out_dir = "exp_run2";
    ExperimentResult r2 = run_experiment(cfg);
    CHECK(r1.config_digest == r2.config_digest);

    for (const char* name :
         {"manifest.json", "scores_curvature_unaligned.jsonl", "scores_curvature_aligned.jsonl",
          "report_curvature_unaligned.json", "report_curvature_aligned.json",
          "roc_curvature_unaligned.csv", "roc_curvature_aligned.csv",
          "diagnostics_unaligned.json", "diagnostics_aligned.json"}) {
        INFO(name);
        CHECK(slurp(fs::path("exp_run1") / name) == slurp(fs::path("exp_run2") / name));
    }
    CHECK(slurp("exp_run1/manifest.json").find("\"ok\"") != std::string::npos);
    CHECK(r1.detectors[0].aligned.auroc >= r1.detectors[0].unaligned.auroc);
}

TEST_CASE("identity experiment: white-box curvature is near-perfect") {
    SyntheticBenchmark bench = build_synthetic_benchmark(small_benchmark());
    auto records =
        score_dataset(bench.pairs, "curvature", *bench.target, *bench.target, {}, {}, 7, 0);
    CHECK(auroc(to_score_set(records)) >= 0.95);
}

TEST_CASE("alignment size sweep: size 0 is the unaligned baseline, subsets nested") {
    ExperimentConfig cfg;
    cfg.benchmark = small_benchmark();
    cfg.diag_contexts = 64;
    cfg.sweep_sizes = {0, 100, 400};
    auto rows = alignment_size_sweep(cfg);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].size == 0);

    SyntheticBenchmark bench = build_synthetic_benchmark(cfg.benchmark);
    auto baseline = score_dataset(bench.pairs, "curvature", *bench.surrogate, *bench.surrogate,
                                  {}, {}, derive_seed(cfg.seed, 7000), 0);
    CHECK(rows[0].auroc == auroc(to_score_set(baseline)));
    CHECK(rows[2].auroc > rows[0].auroc);
    CHECK(rows[2].mean_abs_curvature_diff < rows[0].mean_abs_curvature_diff);
    CHECK(rows[2].mean_kl < rows[0].mean_kl);

    std::string csv = size_sweep_csv(rows);
    CHECK(csv.rfind("size,auroc,mean_abs_curvature_diff,mean_kl\n", 0) == 0);
}

TEST_CASE("attack sweep: ratio 0 equals the unattacked run, aligned dominates") {
    ExperimentConfig cfg;
    cfg.benchmark = small_benchmark();
    cfg.attack_ratios = {0.0, 0.3};
    auto rows = attack_sweep(cfg);
    REQUIRE(rows.size() == 2);

    ExperimentConfig plain = cfg;
    plain.diag_contexts = 16;
    ExperimentResult base = run_experiment(plain);
    CHECK(rows[0].auroc_unaligned == base.detectors[0].unaligned.auroc);
    CHECK(rows[0].auroc_aligned == base.detectors[0].aligned.auroc);
    for (const auto& r : rows) CHECK(r.auroc_aligned >= r.auroc_unaligned);
}

TEST_CASE("multi-source alignment transfers to both targets") {
    BenchmarkConfig b1 = small_benchmark(), b2 = small_benchmark();
    b2.chain_seed_a = 3;
    SyntheticBenchmark bench1 = build_synthetic_benchmark(b1);
    SyntheticBenchmark bench2 = build_synthetic_benchmark(b2);
    TrainConfig tc;
    tc.blend_lambda = 1.0;

    AlignmentDataset mixed;
    mixed.samples.assign(bench1.alignment.samples.begin(),
                         bench1.alignment.samples.begin() + 200);
    mixed.samples.insert(mixed.samples.end(), bench2.alignment.samples.begin(),
                         bench2.alignment.samples.begin() + 200);
    auto single1 = finetune_surrogate(*bench1.surrogate, bench1.alignment, tc);
    auto single2 = finetune_surrogate(*bench2.surrogate, bench2.alignment, tc);
    auto mixed_model = finetune_surrogate(*bench1.surrogate, mixed, tc);

    auto auroc_on = [](const DetectionDataset& pairs, const LanguageModelProvider& scorer,
                       const LanguageModelProvider& fill) {
        return auroc(to_score_set(score_dataset(pairs, "curvature", scorer, fill, {}, {}, 7, 0)));
    };
    double s1 = auroc_on(bench1.pairs, *single1, *bench1.surrogate);
    double m1 = auroc_on(bench1.pairs, *mixed_model, *bench1.surrogate);
    double s2 = auroc_on(bench2.pairs, *single2, *bench2.surrogate);
    double m2 = auroc_on(bench2.pairs, *mixed_model, *bench2.surrogate);
    CHECK(std::abs(s1 - m1) <= 0.05);
    CHECK(std::abs(s2 - m2) <= 0.05);
}

TEST_CASE("one-for-all: alignment to A transfers to a jittered A'") {
    BenchmarkConfig b = small_benchmark();
    SyntheticBenchmark bench = build_synthetic_benchmark(b);
    TrainConfig tc;
    tc.blend_lambda = 1.0;
    auto aligned_to_a = finetune_surrogate(*bench.surrogate, bench.alignment, tc);

    NGramModel target_a2 = bench.target->jittered(0.1, 99);
    std::vector<TokenSequence> prompts;
    for (const auto& s : bench.alignment.samples) prompts.push_back(s.prompt);
    GenerationConfig collect;
    collect.max_new_tokens = 20;
    collect.seed = 1234;
    auto aligned_to_a2 = finetune_surrogate(
        *bench.surrogate, collect_alignment_dataset(target_a2, prompts, collect), tc);

    std::vector<TokenSequence> humans;
    for (const auto& p : bench.pairs.pairs) humans.push_back(p.human_text);
    GenerationConfig gen;
    gen.temperature = 0.8;
    gen.seed = 555;
    DetectionDataset pairs_a2 = build_pairs(humans, target_a2, 30, 40, gen);

    auto auroc_on = [&](const LanguageModelProvider& scorer) {
        return auroc(to_score_set(
            score_dataset(pairs_a2, "curvature", scorer, *bench.surrogate, {}, {}, 7, 0)));
    };
    CHECK(auroc_on(*aligned_to_a) >= auroc_on(*aligned_to_a2) - 0.05);
}

TEST_CASE("failed experiments flush a manifest marking the failure") {
    ExperimentConfig cfg;
    cfg.benchmark = small_benchmark();
    cfg.detectors = {"curvature"};
    cfg.benchmark.vocab_size = 1;  // invalid: triggers ConfigError inside the run
    fs::remove_all("exp_fail");
    cfg.out_dir = "exp_fail";
    CHECK_THROWS_AS(run_experiment(cfg), DaldError);
    std::string manifest = slurp("exp_fail/manifest.json");
    CHECK(manifest.find("\"failed\"") != std::string::npos);
    CHECK(manifest.find("\"error\"") != std::string::npos);
}
