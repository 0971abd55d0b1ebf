#include "dald/distribution.hpp"

#include <cmath>

namespace dald {

namespace {
void require_same_vocab(const TokenDistribution& p, const TokenDistribution& q) {
    if (p.size() != q.size())
        fail(ErrorKind::VocabMismatch, "distributions have different sizes");
}
}  // namespace

double entropy(const TokenDistribution& d) {
    double h = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
        double lp = d.logprob(i);
        if (std::isinf(lp)) continue;  // 0 * log 0 -> 0
        h -= std::exp(lp) * lp;
    }
    return h < 0.0 ? 0.0 : h;
}

double cross_entropy(const TokenDistribution& p, const TokenDistribution& q) {
    require_same_vocab(p, q);
    double h = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        double lp = p.logprob(i);
        if (std::isinf(lp)) continue;
        double lq = q.logprob(i);
        if (std::isinf(lq))
            fail(ErrorKind::SupportMismatch, "q has zero mass where p > 0");
        h -= std::exp(lp) * lq;
    }
    return h;
}

double kl_divergence(const TokenDistribution& p, const TokenDistribution& q) {
    double kl = cross_entropy(p, q) - entropy(p);
    return kl < 0.0 ? 0.0 : kl;
}

double total_variation(const TokenDistribution& p, const TokenDistribution& q) {
    require_same_vocab(p, q);
    double tv = 0.0;
    for (size_t i = 0; i < p.size(); ++i) tv += std::abs(p.prob(i) - q.prob(i));
    tv *= 0.5;
    return tv > 1.0 ? 1.0 : tv;
}

}  // namespace dald
