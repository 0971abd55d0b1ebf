#include "dald/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "dald/error.hpp"

namespace dald {

namespace {

struct Tally {
    std::vector<std::pair<double, Label>> items;  // score, label
    size_t n_pos = 0, n_neg = 0;
};

double clamp_sentinel(double v) {
    if (std::isnan(v)) fail(ErrorKind::ConfigError, "NaN score in labeled set");
    if (std::isinf(v))
        return v > 0 ? std::numeric_limits<double>::max()
                     : std::numeric_limits<double>::lowest();
    return v;
}

Tally tally(const LabeledScoreSet& s) {
    Tally t;
    for (const auto& e : s.entries) {
        t.items.emplace_back(clamp_sentinel(e.score), e.label);
        (e.label == Label::machine ? t.n_pos : t.n_neg)++;
    }
    if (t.n_pos == 0 || t.n_neg == 0)
        fail(ErrorKind::SingleClass, "need at least one human and one machine entry");
    return t;
}

}  // namespace

double auroc(const LabeledScoreSet& s) {
    Tally t = tally(s);
    std::sort(t.items.begin(), t.items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // average ranks over tie groups
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < t.items.size()) {
        size_t j = i;
        while (j < t.items.size() && t.items[j].first == t.items[i].first) ++j;
        double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
        for (size_t k = i; k < j; ++k)
            if (t.items[k].second == Label::machine) rank_sum_pos += avg_rank;
        i = j;
    }
    double n_pos = static_cast<double>(t.n_pos), n_neg = static_cast<double>(t.n_neg);
    double u = rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0;
    return u / (n_pos * n_neg);
}

std::vector<RocPoint> roc_curve(const LabeledScoreSet& s) {
    Tally t = tally(s);
    std::sort(t.items.begin(), t.items.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<RocPoint> roc{{0.0, 0.0}};
    size_t tp = 0, fp = 0, i = 0;
    while (i < t.items.size()) {
        size_t j = i;
        while (j < t.items.size() && t.items[j].first == t.items[i].first) ++j;
        for (size_t k = i; k < j; ++k)
            (t.items[k].second == Label::machine ? tp : fp)++;
        roc.push_back({static_cast<double>(fp) / static_cast<double>(t.n_neg),
                       static_cast<double>(tp) / static_cast<double>(t.n_pos)});
        i = j;
    }
    return roc;
}

double aupr(const LabeledScoreSet& s) {
    Tally t = tally(s);
    std::sort(t.items.begin(), t.items.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double area = 0.0;
    double prev_recall = 0.0;
    size_t tp = 0, fp = 0, i = 0;
    while (i < t.items.size()) {
        size_t j = i;
        while (j < t.items.size() && t.items[j].first == t.items[i].first) ++j;
        for (size_t k = i; k < j; ++k)
            (t.items[k].second == Label::machine ? tp : fp)++;
        double recall = static_cast<double>(tp) / static_cast<double>(t.n_pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return area;
}

EvalReport evaluate(const LabeledScoreSet& s, const std::string& detector,
                    const std::string& dataset, const std::string& config_digest) {
    EvalReport r;
    r.auroc = auroc(s);
    r.aupr = aupr(s);
    r.roc = roc_curve(s);
    r.detector = detector;
    r.dataset = dataset;
    r.config_digest = config_digest;
    return r;
}

std::string eval_report_json(const EvalReport& r) {
    nlohmann::json j;
    j["auroc"] = r.auroc;
    j["aupr"] = r.aupr;
    j["detector"] = r.detector;
    j["dataset"] = r.dataset;
    j["config_digest"] = r.config_digest;
    auto& roc = j["roc"] = nlohmann::json::array();
    for (const auto& p : r.roc) roc.push_back({p.fpr, p.tpr});
    return j.dump(2);
}

std::string roc_csv(const std::vector<RocPoint>& roc) {
    std::ostringstream os;
    os.precision(17);
    os << "fpr,tpr\n";
    for (const auto& p : roc) os << p.fpr << "," << p.tpr << "\n";
    return os.str();
}

}  // namespace dald
