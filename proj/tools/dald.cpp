#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dald/config.hpp"
#include "dald/harness.hpp"
#include "dald/logbilinear.hpp"
#include "dald/model_io.hpp"
#include "dald/ngram.hpp"
#include "dald/sampling.hpp"
#include "dald/tokenizer.hpp"
#include "dald/util.hpp"

namespace fs = std::filesystem;
using namespace dald;

namespace {

struct Global {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
    std::string out = ".";
    size_t jobs = 0;
};

TokenizerConfig tok_config(const std::string& policy) {
    TokenizerConfig cfg;
    if (policy == "word") cfg.policy = TokenPolicy::Word;
    else if (policy == "char") cfg.policy = TokenPolicy::Char;
    else fail(ErrorKind::ConfigError, "unknown token policy: " + policy);
    return cfg;
}

fs::path out_file(const Global& g, const std::string& name) {
    fs::create_directories(g.out);
    return fs::path(g.out) / name;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::IoError, "cannot open for write: " + path.string());
    os << content;
}

ExperimentConfig sweep_config(const Global& g) {
    ExperimentConfig cfg;
    if (!g.config_path.empty()) cfg = load_experiment_config(g.config_path);
    if (g.seed_set) cfg.seed = g.seed;
    cfg.out_dir = g.out;
    cfg.jobs = g.jobs;
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"logits-based machine-text detection with surrogate alignment"};
    app.require_subcommand(1);

    Global g;
    app.add_option("--config", g.config_path, "experiment config file (TOML or JSON)");
    app.add_option("--seed", g.seed, "seed override")->each([&](const std::string&) {
        g.seed_set = true;
    });
    app.add_option("--out", g.out, "output directory");
    app.add_option("--jobs", g.jobs, "worker threads (0 = hardware)");

    // train-lm
    auto* train = app.add_subcommand("train-lm", "train a model on a text corpus");
    std::string train_corpus, train_kind = "ngram", train_policy = "word";
    size_t train_order = 3, train_ctx = 2, train_dim = 8, train_epochs = 2, train_batch = 16;
    size_t train_min_tokens = 1;
    double train_k = 0.1, train_ratio = 0.6, train_lr = 0.1;
    train->add_option("--corpus", train_corpus, "training corpus")->required();
    train->add_option("--kind", train_kind, "ngram | logbilinear");
    train->add_option("--policy", train_policy, "word | char tokenization");
    train->add_option("--order", train_order, "n-gram order");
    train->add_option("--k", train_k, "add-k smoothing");
    train->add_option("--ratio", train_ratio, "interpolation weight ratio");
    train->add_option("--ctx", train_ctx, "log-bilinear context window");
    train->add_option("--dim", train_dim, "log-bilinear embedding dim");
    train->add_option("--epochs", train_epochs, "log-bilinear epochs");
    train->add_option("--lr", train_lr, "log-bilinear learning rate");
    train->add_option("--batch", train_batch, "log-bilinear batch size");
    train->add_option("--min-tokens", train_min_tokens, "drop shorter documents");

    // generate
    auto* gen = app.add_subcommand("generate", "sample a continuation from a model");
    std::string gen_model, gen_prompt, gen_policy = "word";
    double gen_temperature = 1.0;
    size_t gen_max_new = 50;
    gen->add_option("--model", gen_model, "model file")->required();
    gen->add_option("--prompt", gen_prompt, "prompt text")->required();
    gen->add_option("--policy", gen_policy, "word | char tokenization");
    gen->add_option("--temperature", gen_temperature, "sampling temperature");
    gen->add_option("--max-new", gen_max_new, "tokens to generate");

    // collect-align
    auto* collect = app.add_subcommand("collect-align", "collect target responses for alignment");
    std::string col_target, col_prompts, col_policy = "word";
    size_t col_count = 2000, col_prompt_len = 30, col_response_len = 20;
    double col_temperature = 1.0;
    collect->add_option("--target", col_target, "target model file")->required();
    collect->add_option("--prompts", col_prompts, "prompt corpus")->required();
    collect->add_option("--policy", col_policy, "word | char tokenization");
    collect->add_option("--count", col_count, "number of samples");
    collect->add_option("--prompt-len", col_prompt_len, "tokens kept per prompt");
    collect->add_option("--response-len", col_response_len, "tokens generated per prompt");
    collect->add_option("--temperature", col_temperature, "collection temperature");

    // align
    auto* align_cmd = app.add_subcommand("align", "fine-tune a surrogate on alignment data");
    std::string al_surrogate, al_data, al_policy = "word";
    TrainConfig al_train;
    al_train.blend_lambda = 1.0;
    bool al_no_masking = false;
    align_cmd->add_option("--surrogate", al_surrogate, "surrogate model file")->required();
    align_cmd->add_option("--data", al_data, "alignment dataset (JSONL)")->required();
    align_cmd->add_option("--policy", al_policy, "word | char tokenization");
    align_cmd->add_option("--lambda", al_train.blend_lambda, "count blend weight");
    align_cmd->add_option("--epochs", al_train.epochs, "gradient epochs");
    align_cmd->add_option("--lr", al_train.learning_rate, "learning rate");
    align_cmd->add_option("--batch", al_train.batch_size, "batch size");
    align_cmd->add_flag("--no-prompt-masking", al_no_masking, "include prompt tokens in the loss");

    // score
    auto* score = app.add_subcommand("score", "score documents with one detector");
    std::string sc_model, sc_corpus, sc_detector = "curvature", sc_label = "human";
    std::string sc_fill, sc_policy = "word";
    size_t sc_min_tokens = 60;
    score->add_option("--model", sc_model, "scorer model file")->required();
    score->add_option("--corpus", sc_corpus, "documents to score")->required();
    score->add_option("--detector", sc_detector, "detector name");
    score->add_option("--label", sc_label, "human | machine label for the documents");
    score->add_option("--fill", sc_fill, "fill model for perturbation detectors");
    score->add_option("--policy", sc_policy, "word | char tokenization");
    score->add_option("--min-tokens", sc_min_tokens, "drop shorter documents");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "AUROC/AUPR from score files");
    std::vector<std::string> ev_scores;
    eval_cmd->add_option("--scores", ev_scores, "score JSONL files")->required();

    // sweeps
    auto* sweep_size = app.add_subcommand("sweep-align-size", "AUROC vs alignment dataset size");
    auto* sweep_attack_cmd = app.add_subcommand("sweep-attack", "AUROC vs mask-and-fill ratio");

    // report
    auto* report_cmd = app.add_subcommand("report", "render plot data from experiment artifacts");
    std::string rp_in;
    report_cmd->add_option("--in", rp_in, "experiment artifact directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (train->parsed()) {
        TokenizerConfig tok = tok_config(train_policy);
        std::vector<std::string> docs = load_documents(train_corpus);
        Vocabulary vocab = build_vocabulary(docs, tok);
        std::vector<TokenSequence> corpus;
        for (const auto& d : docs) {
            TokenSequence seq = encode(d, vocab, tok);
            if (seq.length() >= train_min_tokens) corpus.push_back(std::move(seq));
        }
        if (corpus.empty()) fail(ErrorKind::EmptyCorpus, "all documents filtered");
        fs::path out = out_file(g, "model.bin");
        if (train_kind == "ngram") {
            NGramModel::Options opt;
            opt.order = train_order;
            opt.smoothing_k = train_k;
            opt.weight_ratio = train_ratio;
            NGramModel::train(corpus, vocab, opt).save_file(out.string());
        } else if (train_kind == "logbilinear") {
            LogBilinearLM::Options opt;
            opt.context_window = train_ctx;
            opt.embed_dim = train_dim;
            LogBilinearLM base(vocab, opt);
            TrainConfig tc;
            tc.epochs = train_epochs;
            tc.learning_rate = train_lr;
            tc.batch_size = train_batch;
            tc.seed = g.seed;
            base.trained_on_corpus(corpus, tc).save_file(out.string());
        } else {
            fail(ErrorKind::ConfigError, "unknown model kind: " + train_kind);
        }
        std::cout << out.string() << "\n";
    } else if (gen->parsed()) {
        auto model = load_model_file(gen_model);
        TokenSequence prompt = encode(gen_prompt, model->vocabulary(), tok_config(gen_policy));
        if (prompt.empty()) fail(ErrorKind::EmptyInput, "prompt has no tokens");
        GenerationConfig cfg;
        cfg.temperature = gen_temperature;
        cfg.max_new_tokens = gen_max_new;
        cfg.seed = g.seed;
        std::cout << detokenize(sample_completion(*model, prompt, cfg), model->vocabulary())
                  << "\n";
    } else if (collect->parsed()) {
        auto target = load_model_file(col_target);
        TokenizerConfig tok = tok_config(col_policy);
        std::vector<TokenSequence> docs =
            ingest_corpus(col_prompts, target->vocabulary(), tok, col_prompt_len);
        if (docs.size() < col_count)
            fail(ErrorKind::InsufficientCorpus, "need " + std::to_string(col_count) +
                                                    " prompts, have " + std::to_string(docs.size()));
        std::vector<TokenSequence> prompts;
        for (size_t i = 0; i < col_count; ++i) prompts.push_back(docs[i].prefix(col_prompt_len));
        GenerationConfig cfg;
        cfg.temperature = col_temperature;
        cfg.max_new_tokens = col_response_len;
        cfg.seed = g.seed;
        AlignmentDataset data = collect_alignment_dataset(*target, prompts, cfg);
        fs::path out = out_file(g, "align.jsonl");
        save_alignment_jsonl(data, target->vocabulary(), out.string());
        std::cout << out.string() << "\n";
    } else if (align_cmd->parsed()) {
        auto surrogate = load_model_file(al_surrogate);
        AlignmentDataset data =
            load_alignment_jsonl(al_data, surrogate->vocabulary(), tok_config(al_policy));
        al_train.prompt_masking = !al_no_masking;
        al_train.seed = g.seed;
        auto aligned = finetune_surrogate(*surrogate, data, al_train);
        fs::path out = out_file(g, "aligned.bin");
        if (auto* ng = dynamic_cast<NGramModel*>(aligned.get())) ng->save_file(out.string());
        else if (auto* lb = dynamic_cast<LogBilinearLM*>(aligned.get()))
            lb->save_file(out.string());
        else fail(ErrorKind::NotTrainable, "aligned model is not serializable");
        std::cout << out.string() << "\n";
    } else if (score->parsed()) {
        auto model = load_model_file(sc_model);
        if (sc_label != "human" && sc_label != "machine")
            fail(ErrorKind::ConfigError, "label must be human or machine");
        std::shared_ptr<LanguageModelProvider> fill = model;
        if (!sc_fill.empty()) fill = load_model_file(sc_fill);
        TokenizerConfig tok = tok_config(sc_policy);
        std::vector<TokenSequence> docs =
            ingest_corpus(sc_corpus, model->vocabulary(), tok, sc_min_tokens);
        std::vector<ScoreRecord> records(docs.size());
        std::vector<std::exception_ptr> errors(docs.size());
        parallel_for(docs.size(), g.jobs, [&](size_t i) {
            try {
                PerturbConfig pcfg;
                pcfg.seed = derive_seed(g.seed, i);
                DnaConfig dcfg;
                dcfg.seed = derive_seed(g.seed, i);
                records[i] = score_text(docs[i], sc_detector, *model, *fill, pcfg, dcfg);
                char buf[16];
                std::snprintf(buf, sizeof buf, "doc%04zu", i);
                records[i].id = buf;
                records[i].label = sc_label == "machine" ? Label::machine : Label::human;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
        fs::path out = out_file(g, "scores_" + sc_label + ".jsonl");
        write_text(out, scores_jsonl(records, sc_detector));
        std::cout << out.string() << "\n";
    } else if (eval_cmd->parsed()) {
        LabeledScoreSet set;
        std::string detector;
        for (const auto& path : ev_scores) {
            std::ifstream is(path);
            if (!is) fail(ErrorKind::IoError, "cannot open: " + path);
            std::string line;
            size_t lineno = 0;
            while (std::getline(is, line)) {
                ++lineno;
                if (line.empty()) continue;
                nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.contains("score") || !j.contains("label"))
                    fail(ErrorKind::ParseError,
                         path + ": bad score line " + std::to_string(lineno));
                set.entries.push_back({j.value("id", ""), j["score"].get<double>(),
                                       j["label"] == "machine" ? Label::machine : Label::human});
                detector = j.value("detector", detector);
            }
        }
        EvalReport report = evaluate(set, detector, "cli", "");
        write_text(out_file(g, "report.json"), eval_report_json(report) + "\n");
        write_text(out_file(g, "roc.csv"), roc_csv(report.roc));
        std::cout << "auroc " << report.auroc << " aupr " << report.aupr << "\n";
    } else if (sweep_size->parsed()) {
        auto rows = alignment_size_sweep(sweep_config(g));
        std::cout << size_sweep_csv(rows);
    } else if (sweep_attack_cmd->parsed()) {
        auto rows = attack_sweep(sweep_config(g));
        std::cout << attack_sweep_csv(rows);
    } else if (report_cmd->parsed()) {
        if (!fs::is_directory(rp_in)) fail(ErrorKind::IoError, "not a directory: " + rp_in);
        // summary table from paired eval reports
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(rp_in)) files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        std::cout << "detector,variant,auroc,aupr\n";
        for (const auto& path : files) {
            std::string name = path.filename().string();
            if (name.rfind("report_", 0) == 0 && path.extension() == ".json") {
                std::ifstream is(path);
                nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
                if (j.is_discarded()) fail(ErrorKind::ParseError, "bad report: " + name);
                std::string variant =
                    name.find("_unaligned") != std::string::npos ? "unaligned" : "aligned";
                std::cout << j.value("detector", "?") << "," << variant << ","
                          << j.value("auroc", 0.0) << "," << j.value("aupr", 0.0) << "\n";
            }
            if (name.rfind("diagnostics_", 0) == 0 && path.extension() == ".json") {
                std::ifstream is(path);
                nlohmann::json j = nlohmann::json::parse(is, nullptr, false);
                if (j.is_discarded() || !j.contains("histograms")) continue;
                const auto& h = j["histograms"];
                std::ostringstream csv;
                csv.precision(17);
                csv << "bin_lo,bin_hi,target_human,target_machine,surrogate_human,"
                       "surrogate_machine\n";
                const auto& th = h["target_human"];
                double lo = th["lo"].get<double>(), hi = th["hi"].get<double>();
                size_t n = th["bins"].size();
                for (size_t b = 0; b < n; ++b) {
                    double w = (hi - lo) / static_cast<double>(n);
                    csv << lo + w * static_cast<double>(b) << ","
                        << lo + w * static_cast<double>(b + 1);
                    for (const char* key : {"target_human", "target_machine", "surrogate_human",
                                            "surrogate_machine"})
                        csv << "," << h[key]["bins"][b].get<uint64_t>();
                    csv << "\n";
                }
                fs::path out = out_file(
                    g, "curvature_hist_" + name.substr(12, name.size() - 17) + ".csv");
                write_text(out, csv.str());
            }
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const DaldError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
