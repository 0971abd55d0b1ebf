#include "dald/logbilinear.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "dald/binio.hpp"
#include "dald/rng.hpp"

namespace dald {

namespace {
constexpr char kMagic[8] = {'D', 'A', 'L', 'D', 'L', 'M', '1', '\0'};
constexpr uint32_t kLogBilinearTag = 2;
}  // namespace

LogBilinearLM::LogBilinearLM(const Vocabulary& vocab, const Options& opts,
                             const std::string& descriptor)
    : vocab_(vocab), opts_(opts), descriptor_(descriptor) {
    if (opts_.context_window < 1) fail(ErrorKind::ConfigError, "context_window must be >= 1");
    if (opts_.embed_dim < 1) fail(ErrorKind::ConfigError, "embed_dim must be >= 1");
    const size_t d = opts_.embed_dim;
    emb_count_ = (vocab_.size() + 1) * d;  // +1 row for BOS
    ctx_count_ = opts_.context_window * d * d;
    params_.assign(emb_count_ + ctx_count_ + vocab_.size(), 0.0);
    if (opts_.init_scale > 0.0) {
        Rng rng(opts_.init_seed);
        for (double& p : params_)
            p = (2.0 * rng.next_double() - 1.0) * opts_.init_scale;
    }
}

std::vector<TokenId> LogBilinearLM::context_of(const TokenSequence& prefix) const {
    const size_t k = opts_.context_window;
    const TokenId bos = static_cast<TokenId>(vocab_.size());
    std::vector<TokenId> ctx(k, bos);
    size_t take = std::min(k, prefix.length());
    for (size_t j = 0; j < take; ++j)
        ctx[k - 1 - j] = prefix[prefix.length() - 1 - j];  // ctx.back() = most recent
    return ctx;
}

std::vector<double> LogBilinearLM::logits_for(const std::vector<TokenId>& ctx,
                                              std::vector<double>* h_out) const {
    const size_t d = opts_.embed_dim;
    const size_t W = vocab_.size();
    std::vector<double> h(d, 0.0);
    for (size_t m = 0; m < opts_.context_window; ++m) {
        // C_m applies to the token m steps back from the position
        TokenId tok = ctx[opts_.context_window - 1 - m];
        for (size_t r = 0; r < d; ++r) {
            double acc = 0.0;
            for (size_t c = 0; c < d; ++c)
                acc += params_[ctx_index(m, r, c)] * params_[emb_index(tok, c)];
            h[r] += acc;
        }
    }
    std::vector<double> logits(W);
    for (size_t w = 0; w < W; ++w) {
        double acc = params_[bias_index(w)];
        for (size_t j = 0; j < d; ++j) acc += params_[emb_index(w, j)] * h[j];
        logits[w] = acc;
    }
    if (h_out) *h_out = std::move(h);
    return logits;
}

TokenDistribution LogBilinearLM::next_distribution(const TokenSequence& prefix) const {
    prefix.validate_against(vocab_);
    return TokenDistribution::from_logits(logits_for(context_of(prefix), nullptr));
}

std::vector<double> LogBilinearLM::gradient(const std::vector<MaskedExample>& batch) const {
    const size_t d = opts_.embed_dim;
    const size_t W = vocab_.size();
    const size_t k = opts_.context_window;
    std::vector<double> grad(params_.size(), 0.0);
    size_t contributing = 0;

    for (const auto& ex : batch) {
        if (ex.mask.size() != ex.seq.length())
            fail(ErrorKind::ConfigError, "mask length mismatch");
        for (size_t i = 0; i < ex.seq.length(); ++i)
            if (ex.mask[i]) ++contributing;
    }
    if (contributing == 0) fail(ErrorKind::AllMasked, "no position contributes loss");
    const double inv_m = 1.0 / static_cast<double>(contributing);

    for (const auto& ex : batch) {
        for (size_t i = 0; i < ex.seq.length(); ++i) {
            if (!ex.mask[i]) continue;
            auto ctx = context_of(ex.seq.prefix(i));
            std::vector<double> h;
            auto logits = logits_for(ctx, &h);
            TokenDistribution dist = TokenDistribution::from_logits(logits);
            TokenId target = ex.seq[i];

            // dlogit_w = p_w - 1[w == target], scaled by 1/M
            std::vector<double> dh(d, 0.0);
            for (size_t w = 0; w < W; ++w) {
                double dl = (dist.prob(w) - (w == target ? 1.0 : 0.0)) * inv_m;
                grad[bias_index(w)] += dl;
                for (size_t j = 0; j < d; ++j) {
                    grad[emb_index(w, j)] += dl * h[j];
                    dh[j] += dl * params_[emb_index(w, j)];
                }
            }
            for (size_t m = 0; m < k; ++m) {
                TokenId tok = ctx[k - 1 - m];
                for (size_t r = 0; r < d; ++r) {
                    for (size_t c = 0; c < d; ++c)
                        grad[ctx_index(m, r, c)] += dh[r] * params_[emb_index(tok, c)];
                }
                // chain rule through the context embedding itself
                for (size_t c = 0; c < d; ++c) {
                    double acc = 0.0;
                    for (size_t r = 0; r < d; ++r)
                        acc += params_[ctx_index(m, r, c)] * dh[r];
                    grad[emb_index(tok, c)] += acc;
                }
            }
        }
    }
    return grad;
}

double LogBilinearLM::masked_cross_entropy(const std::vector<MaskedExample>& batch) const {
    double loss = 0.0;
    size_t contributing = 0;
    for (const auto& ex : batch) {
        if (ex.mask.size() != ex.seq.length())
            fail(ErrorKind::ConfigError, "mask length mismatch");
        for (size_t i = 0; i < ex.seq.length(); ++i) {
            if (!ex.mask[i]) continue;
            TokenDistribution dist = next_distribution(ex.seq.prefix(i));
            loss -= dist.logprob(ex.seq[i]);
            ++contributing;
        }
    }
    if (contributing == 0) fail(ErrorKind::AllMasked, "no position contributes loss");
    return loss / static_cast<double>(contributing);
}

LogBilinearLM LogBilinearLM::trained(const std::vector<MaskedExample>& data,
                                     const TrainConfig& cfg) const {
    if (data.empty()) fail(ErrorKind::EmptyCorpus, "training data is empty");
    cfg.validate();
    LogBilinearLM model = *this;
    if (cfg.epochs == 0) return model;

    const double before = masked_cross_entropy(data);
    Rng rng(cfg.seed);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t b = 0; b < order.size(); b += cfg.batch_size) {
            std::vector<MaskedExample> batch;
            for (size_t i = b; i < std::min(b + cfg.batch_size, order.size()); ++i)
                batch.push_back(data[order[i]]);
            bool any = false;
            for (const auto& ex : batch)
                for (bool m : ex.mask) any = any || m;
            if (!any) continue;
            auto grad = model.gradient(batch);
            for (size_t i = 0; i < grad.size(); ++i) {
                model.params_[i] -= cfg.learning_rate * grad[i];
                if (!std::isfinite(model.params_[i]))
                    fail(ErrorKind::ConfigError, "parameters diverged; lower the learning rate");
            }
        }
    }
    if (model.masked_cross_entropy(data) > before) return *this;
    return model;
}

LogBilinearLM LogBilinearLM::trained_on_corpus(const std::vector<TokenSequence>& corpus,
                                               const TrainConfig& cfg) const {
    std::vector<MaskedExample> data;
    data.reserve(corpus.size());
    for (const auto& seq : corpus)
        data.push_back({seq, std::vector<bool>(seq.length(), true)});
    return trained(data, cfg);
}

std::vector<LogBilinearLM::MaskedExample> LogBilinearLM::to_examples(const AlignmentDataset& data,
                                                                     bool prompt_masking) {
    std::vector<MaskedExample> out;
    out.reserve(data.size());
    for (const auto& s : data.samples) {
        std::vector<TokenId> ids = s.prompt.ids();
        ids.insert(ids.end(), s.response.ids().begin(), s.response.ids().end());
        std::vector<bool> mask(ids.size(), true);
        if (prompt_masking)
            for (size_t i = 0; i < s.prompt.length(); ++i) mask[i] = false;
        out.push_back({TokenSequence(std::move(ids)), std::move(mask)});
    }
    return out;
}

std::shared_ptr<LanguageModelProvider> LogBilinearLM::finetuned(const AlignmentDataset& data,
                                                                const TrainConfig& cfg) const {
    if (data.empty()) fail(ErrorKind::EmptyCorpus, "alignment dataset is empty");
    auto model = trained(to_examples(data, cfg.prompt_masking), cfg);
    model.descriptor_ = descriptor_ + "+aligned";
    return std::make_shared<LogBilinearLM>(std::move(model));
}

void LogBilinearLM::save(std::ostream& os) const {
    os.write(kMagic, 8);
    write_u32(os, kLogBilinearTag);
    write_string(os, descriptor_);
    write_u64(os, vocab_.size());
    for (const auto& tok : vocab_.tokens()) write_string(os, tok);
    write_u64(os, opts_.context_window);
    write_u64(os, opts_.embed_dim);
    write_f64(os, opts_.init_scale);
    write_u64(os, opts_.init_seed);
    write_u64(os, params_.size());
    for (double p : params_) write_f64(os, p);
}

LogBilinearLM LogBilinearLM::load(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0)
        fail(ErrorKind::ParseError, "bad model magic");
    if (read_u32(is) != kLogBilinearTag) fail(ErrorKind::ParseError, "not a log-bilinear model");
    std::string descriptor = read_string(is);
    uint64_t W = read_u64(is);
    std::vector<std::string> tokens(W);
    for (auto& t : tokens) t = read_string(is);
    Options opts;
    opts.context_window = read_u64(is);
    opts.embed_dim = read_u64(is);
    opts.init_scale = read_f64(is);
    opts.init_seed = read_u64(is);
    LogBilinearLM m(Vocabulary(std::move(tokens)), opts, descriptor);
    uint64_t n = read_u64(is);
    if (n != m.params_.size()) fail(ErrorKind::ParseError, "parameter count mismatch");
    for (auto& p : m.params_) p = read_f64(is);
    return m;
}

void LogBilinearLM::save_file(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::IoError, "cannot open for write: " + path);
    save(os);
}

LogBilinearLM LogBilinearLM::load_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::IoError, "cannot open: " + path);
    return load(is);
}

}  // namespace dald
