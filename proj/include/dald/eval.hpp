#pragma once

#include <string>
#include <vector>

namespace dald {

enum class Label { human, machine };

struct ScoredItem {
    std::string id;
    double score;
    Label label;
};

struct LabeledScoreSet {
    std::vector<ScoredItem> entries;
};

struct RocPoint {
    double fpr;
    double tpr;
};

// Mann-Whitney AUROC (ties count 0.5), machine is the positive class.
// Computed by sort but contractually equal to the pairwise count.
double auroc(const LabeledScoreSet& s);

// Area under the precision-recall step curve, descending-score sweep with
// tied scores grouped.
double aupr(const LabeledScoreSet& s);

// One point per distinct threshold, from (0,0) to (1,1); the trapezoid
// integral of these points equals auroc.
std::vector<RocPoint> roc_curve(const LabeledScoreSet& s);

struct EvalReport {
    double auroc = 0.0;
    double aupr = 0.0;
    std::vector<RocPoint> roc;
    std::string detector;
    std::string dataset;
    std::string config_digest;
};

EvalReport evaluate(const LabeledScoreSet& s, const std::string& detector,
                    const std::string& dataset, const std::string& config_digest);

std::string eval_report_json(const EvalReport& r);
std::string roc_csv(const std::vector<RocPoint>& roc);

}  // namespace dald
