#include "dald/align.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dald/detectors.hpp"
#include "dald/rng.hpp"
#include "dald/sampling.hpp"

namespace dald {

AlignmentDataset collect_alignment_dataset(const LanguageModelProvider& target,
                                           const std::vector<TokenSequence>& prompts,
                                           const GenerationConfig& cfg) {
    if (prompts.empty()) fail(ErrorKind::EmptyPromptSet, "no prompts to collect from");
    cfg.validate();
    AlignmentDataset out;
    out.samples.reserve(prompts.size());
    for (size_t i = 0; i < prompts.size(); ++i) {
        GenerationConfig per = cfg;
        per.seed = derive_seed(cfg.seed, i);
        TokenSequence full = sample_completion(target, prompts[i], per);
        AlignmentSample sample;
        sample.prompt = prompts[i];
        sample.response = full.slice(prompts[i].length(), full.length());
        sample.source = target.descriptor();
        out.samples.push_back(std::move(sample));
    }
    return out;
}

std::shared_ptr<LanguageModelProvider> finetune_surrogate(const LanguageModelProvider& surrogate,
                                                          const AlignmentDataset& data,
                                                          const TrainConfig& cfg) {
    const auto* trainable = dynamic_cast<const TrainableModel*>(&surrogate);
    if (!trainable)
        fail(ErrorKind::NotTrainable, "provider '" + surrogate.descriptor() +
                                          "' does not support fine-tuning");
    if (data.empty()) fail(ErrorKind::EmptyCorpus, "alignment dataset is empty");
    return trainable->finetuned(data, cfg);
}

namespace {

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, size_t n_bins) {
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    h.bins.assign(n_bins, 0);
    double width = (hi - lo) / static_cast<double>(n_bins);
    for (double v : values) {
        size_t b;
        if (width <= 0.0 || v <= lo) b = 0;
        else if (v >= hi) b = n_bins - 1;
        else b = static_cast<size_t>((v - lo) / width);
        ++h.bins[std::min(b, n_bins - 1)];
    }
    return h;
}

double min_prob_on(const TokenSequence& x, const LanguageModelProvider& scorer) {
    double mn = 1.0;
    for (size_t i = 1; i < x.length(); ++i)
        mn = std::min(mn, scorer.next_distribution(x.prefix(i)).prob(x[i]));
    return mn;
}

}  // namespace

AlignmentDiagnostics alignment_report(const LanguageModelProvider& target,
                                      const LanguageModelProvider& surrogate,
                                      const std::vector<TokenSequence>& human_texts,
                                      const std::vector<TokenSequence>& machine_texts,
                                      size_t n_contexts, uint64_t seed) {
    AlignmentDiagnostics diag;

    std::vector<TokenSequence> pool = human_texts;
    pool.insert(pool.end(), machine_texts.begin(), machine_texts.end());
    if (pool.empty()) fail(ErrorKind::EmptyCorpus, "no texts to diagnose");

    Rng rng(seed);
    size_t used = 0;
    for (size_t c = 0; c < n_contexts; ++c) {
        const TokenSequence& doc = pool[rng.next_index(pool.size())];
        if (doc.length() < 2) continue;
        size_t pos = 1 + rng.next_index(doc.length() - 1);
        TokenSequence prefix = doc.prefix(pos);
        TokenDistribution p = target.next_distribution(prefix);
        TokenDistribution q = surrogate.next_distribution(prefix);
        diag.mean_kl += kl_divergence(p, q);
        diag.mean_tv += total_variation(p, q);
        ++used;
    }
    if (used > 0) {
        diag.mean_kl /= static_cast<double>(used);
        diag.mean_tv /= static_cast<double>(used);
    }

    auto curvatures = [](const std::vector<TokenSequence>& texts,
                         const LanguageModelProvider& scorer) {
        std::vector<double> out;
        out.reserve(texts.size());
        for (const auto& x : texts) out.push_back(conditional_curvature(x, scorer).d);
        return out;
    };
    std::vector<double> d_tar_h = curvatures(human_texts, target);
    std::vector<double> d_tar_m = curvatures(machine_texts, target);
    std::vector<double> d_sur_h = curvatures(human_texts, surrogate);
    std::vector<double> d_sur_m = curvatures(machine_texts, surrogate);

    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return 0.0;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    diag.curvature_gap_target = mean(d_tar_m) - mean(d_tar_h);
    diag.curvature_gap_surrogate = mean(d_sur_m) - mean(d_sur_h);

    double abs_diff = 0.0;
    for (size_t i = 0; i < d_tar_h.size(); ++i) abs_diff += std::abs(d_sur_h[i] - d_tar_h[i]);
    for (size_t i = 0; i < d_tar_m.size(); ++i) abs_diff += std::abs(d_sur_m[i] - d_tar_m[i]);
    size_t n_texts = d_tar_h.size() + d_tar_m.size();
    diag.mean_abs_curvature_diff = n_texts ? abs_diff / static_cast<double>(n_texts) : 0.0;

    double lo = 0.0, hi = 0.0;
    for (const auto* v : {&d_tar_h, &d_tar_m, &d_sur_h, &d_sur_m}) {
        for (double x : *v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    if (hi <= lo) hi = lo + 1.0;
    constexpr size_t kBins = 20;
    diag.hist_target_human = make_histogram(d_tar_h, lo, hi, kBins);
    diag.hist_target_machine = make_histogram(d_tar_m, lo, hi, kBins);
    diag.hist_surrogate_human = make_histogram(d_sur_h, lo, hi, kBins);
    diag.hist_surrogate_machine = make_histogram(d_sur_m, lo, hi, kBins);

    for (const auto& x : pool)
        diag.min_observed_prob = std::min(diag.min_observed_prob, min_prob_on(x, target));
    return diag;
}

namespace {
nlohmann::json histogram_json(const Histogram& h) {
    return {{"lo", h.lo}, {"hi", h.hi}, {"bins", h.bins}};
}
}  // namespace

std::string alignment_diagnostics_json(const AlignmentDiagnostics& d) {
    nlohmann::json j;
    j["mean_kl"] = d.mean_kl;
    j["mean_tv"] = d.mean_tv;
    j["curvature_gap_target"] = d.curvature_gap_target;
    j["curvature_gap_surrogate"] = d.curvature_gap_surrogate;
    j["mean_abs_curvature_diff"] = d.mean_abs_curvature_diff;
    j["min_observed_prob"] = d.min_observed_prob;
    j["histograms"] = {{"target_human", histogram_json(d.hist_target_human)},
                       {"target_machine", histogram_json(d.hist_target_machine)},
                       {"surrogate_human", histogram_json(d.hist_surrogate_human)},
                       {"surrogate_machine", histogram_json(d.hist_surrogate_machine)}};
    return j.dump(2);
}

}  // namespace dald
