#include "dald/ngram.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "dald/binio.hpp"
#include "dald/rng.hpp"

namespace dald {

namespace {
constexpr char kMagic[8] = {'D', 'A', 'L', 'D', 'L', 'M', '1', '\0'};
constexpr uint32_t kNgramTag = 1;
}  // namespace

std::vector<double> NGramModel::normalized_weights() const {
    std::vector<double> w(opts_.order);
    if (!opts_.weights.empty()) {
        if (opts_.weights.size() != opts_.order)
            fail(ErrorKind::ConfigError, "weights size must equal order");
        w = opts_.weights;
    } else {
        for (size_t o = 1; o <= opts_.order; ++o)
            w[o - 1] = std::pow(opts_.weight_ratio, static_cast<double>(opts_.order - o));
    }
    double sum = 0.0;
    for (double x : w) {
        if (x < 0.0) fail(ErrorKind::ConfigError, "negative interpolation weight");
        sum += x;
    }
    if (sum <= 0.0) fail(ErrorKind::ConfigError, "interpolation weights sum to zero");
    for (double& x : w) x /= sum;
    return w;
}

void NGramModel::accumulate(const TokenSequence& seq, size_t loss_start) {
    for (size_t i = loss_start; i < seq.length(); ++i) {
        for (size_t c = 0; c < opts_.order && c <= i; ++c) {
            std::vector<TokenId> ctx(seq.ids().begin() + (i - c), seq.ids().begin() + i);
            auto& row = counts_[c][ctx];
            if (row.empty()) row.assign(vocab_.size(), 0.0);
            row[seq[i]] += 1.0;
        }
    }
}

NGramModel NGramModel::train(const std::vector<TokenSequence>& corpus, const Vocabulary& vocab,
                             const Options& opts, const std::string& descriptor) {
    if (corpus.empty()) fail(ErrorKind::EmptyCorpus, "n-gram training corpus is empty");
    if (opts.order < 1) fail(ErrorKind::ConfigError, "order must be >= 1");
    if (opts.smoothing_k <= 0.0) fail(ErrorKind::ConfigError, "smoothing k must be > 0");
    NGramModel m;
    m.vocab_ = vocab;
    m.opts_ = opts;
    m.descriptor_ = descriptor;
    m.counts_.resize(opts.order);
    for (const auto& seq : corpus) {
        seq.validate_against(vocab);
        m.accumulate(seq, 0);
    }
    m.normalized_weights();  // validates
    return m;
}

TokenDistribution NGramModel::distribution_for(const std::vector<TokenId>& prefix) const {
    const size_t W = vocab_.size();
    const double k = opts_.smoothing_k;
    auto weights = normalized_weights();

    std::vector<double> probs(W, 0.0);
    double total_w = 0.0;
    std::vector<TokenId> ctx;
    for (size_t c = 0; c < opts_.order; ++c) {
        if (c > prefix.size()) break;
        ctx.assign(prefix.end() - static_cast<ptrdiff_t>(c), prefix.end());
        auto it = counts_[c].find(ctx);
        if (it == counts_[c].end()) continue;
        double total = 0.0;
        for (double v : it->second) total += v;
        double denom = total + k * static_cast<double>(W);
        for (size_t j = 0; j < W; ++j)
            probs[j] += weights[c] * (it->second[j] + k) / denom;
        total_w += weights[c];
    }
    if (total_w <= 0.0) {
        // context unseen at every weighted order: smoothed unigram
        auto it = counts_[0].find({});
        double total = 0.0;
        std::vector<double> uni(W, 0.0);
        if (it != counts_[0].end()) {
            uni = it->second;
            for (double v : uni) total += v;
        }
        double denom = total + k * static_cast<double>(W);
        for (size_t j = 0; j < W; ++j) probs[j] = (uni[j] + k) / denom;
        return TokenDistribution::from_probs(probs);
    }
    for (double& p : probs) p /= total_w;
    return TokenDistribution::from_probs(probs);
}

TokenDistribution NGramModel::next_distribution(const TokenSequence& prefix) const {
    prefix.validate_against(vocab_);
    return distribution_for(prefix.ids());
}

NGramModel NGramModel::blend_finetune(const std::vector<TokenSequence>& alignment_corpus,
                                      double lambda,
                                      const std::vector<size_t>& loss_starts) const {
    if (lambda < 0.0 || lambda > 1.0) fail(ErrorKind::InvalidBlend, "lambda must be in [0,1]");
    if (alignment_corpus.empty()) fail(ErrorKind::EmptyCorpus, "alignment corpus is empty");
    if (!loss_starts.empty() && loss_starts.size() != alignment_corpus.size())
        fail(ErrorKind::ConfigError, "loss_starts size mismatch");

    NGramModel out = *this;
    out.descriptor_ = descriptor_ + "+aligned";
    if (lambda == 0.0) return out;

    NGramModel align;
    align.vocab_ = vocab_;
    align.opts_ = opts_;
    align.counts_.resize(opts_.order);
    for (size_t i = 0; i < alignment_corpus.size(); ++i) {
        alignment_corpus[i].validate_against(vocab_);
        align.accumulate(alignment_corpus[i], loss_starts.empty() ? 0 : loss_starts[i]);
    }

    for (size_t c = 0; c < opts_.order; ++c) {
        double old_total = 0.0, new_total = 0.0;
        for (const auto& [ctx, row] : counts_[c])
            for (double v : row) old_total += v;
        for (const auto& [ctx, row] : align.counts_[c])
            for (double v : row) new_total += v;
        double scale = new_total > 0.0 ? old_total / new_total : 0.0;

        ContextTable blended;
        for (const auto& [ctx, row] : counts_[c]) {
            auto& dst = blended[ctx];
            dst.assign(vocab_.size(), 0.0);
            for (size_t j = 0; j < row.size(); ++j) dst[j] = (1.0 - lambda) * row[j];
        }
        for (const auto& [ctx, row] : align.counts_[c]) {
            auto& dst = blended[ctx];
            if (dst.empty()) dst.assign(vocab_.size(), 0.0);
            for (size_t j = 0; j < row.size(); ++j) dst[j] += lambda * scale * row[j];
        }
        out.counts_[c] = std::move(blended);
    }
    return out;
}

NGramModel NGramModel::jittered(double frac, uint64_t seed, const std::string& suffix) const {
    if (frac < 0.0 || frac >= 1.0) fail(ErrorKind::ConfigError, "jitter fraction must be in [0,1)");
    NGramModel out = *this;
    out.descriptor_ = descriptor_ + suffix;
    Rng rng(seed);
    for (auto& table : out.counts_)
        for (auto& [ctx, row] : table)
            for (double& v : row) v *= 1.0 + frac * (2.0 * rng.next_double() - 1.0);
    return out;
}

std::shared_ptr<LanguageModelProvider> NGramModel::finetuned(const AlignmentDataset& data,
                                                             const TrainConfig& cfg) const {
    if (data.empty()) fail(ErrorKind::EmptyCorpus, "alignment dataset is empty");
    cfg.validate();
    std::vector<TokenSequence> corpus;
    std::vector<size_t> starts;
    corpus.reserve(data.size());
    for (const auto& s : data.samples) {
        std::vector<TokenId> ids = s.prompt.ids();
        ids.insert(ids.end(), s.response.ids().begin(), s.response.ids().end());
        corpus.emplace_back(std::move(ids));
        starts.push_back(cfg.prompt_masking ? s.prompt.length() : 0);
    }
    return std::make_shared<NGramModel>(blend_finetune(corpus, cfg.blend_lambda, starts));
}

void NGramModel::save(std::ostream& os) const {
    os.write(kMagic, 8);
    write_u32(os, kNgramTag);
    write_string(os, descriptor_);
    write_u64(os, vocab_.size());
    for (const auto& tok : vocab_.tokens()) write_string(os, tok);
    write_u64(os, opts_.order);
    write_f64(os, opts_.smoothing_k);
    write_f64(os, opts_.weight_ratio);
    write_u64(os, opts_.weights.size());
    for (double w : opts_.weights) write_f64(os, w);
    for (const auto& table : counts_) {
        write_u64(os, table.size());
        for (const auto& [ctx, row] : table) {
            write_u64(os, ctx.size());
            for (TokenId id : ctx) write_u32(os, id);
            for (double v : row) write_f64(os, v);
        }
    }
}

NGramModel NGramModel::load(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        fail(ErrorKind::ParseError, "bad model magic");
    if (read_u32(is) != kNgramTag) fail(ErrorKind::ParseError, "not an n-gram model");
    NGramModel m;
    m.descriptor_ = read_string(is);
    uint64_t W = read_u64(is);
    std::vector<std::string> tokens(W);
    for (auto& t : tokens) t = read_string(is);
    m.vocab_ = Vocabulary(std::move(tokens));
    m.opts_.order = read_u64(is);
    m.opts_.smoothing_k = read_f64(is);
    m.opts_.weight_ratio = read_f64(is);
    uint64_t nw = read_u64(is);
    m.opts_.weights.resize(nw);
    for (auto& w : m.opts_.weights) w = read_f64(is);
    m.counts_.resize(m.opts_.order);
    for (auto& table : m.counts_) {
        uint64_t n = read_u64(is);
        for (uint64_t i = 0; i < n; ++i) {
            std::vector<TokenId> ctx(read_u64(is));
            for (auto& id : ctx) id = read_u32(is);
            std::vector<double> row(W);
            for (auto& v : row) v = read_f64(is);
            table.emplace(std::move(ctx), std::move(row));
        }
    }
    return m;
}

void NGramModel::save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::IoError, "cannot open for write: " + path);
    save(os);
}

NGramModel NGramModel::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::IoError, "cannot open: " + path);
    return load(is);
}

}  // namespace dald
