#include "midicls/evalkit.hpp"

#include "midicls/errors.hpp"
#include "midicls/io.hpp"
#include "midicls/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace midicls {

namespace {

void check_fold_count(std::size_t n, int k) {
    if (k < 2) throw PlanError("fold count must be at least 2, got " + std::to_string(k));
    if (static_cast<std::size_t>(k) > n)
        throw PlanError("fold count " + std::to_string(k) + " exceeds item count " + std::to_string(n));
}

std::vector<int> deal(std::size_t n, int k, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<int> fold_of(n);
    for (std::size_t pos = 0; pos < n; ++pos) fold_of[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
    return fold_of;
}

ClassMetrics metrics(long true_pos, long false_pos, long false_neg) {
    ClassMetrics m;
    m.support = true_pos + false_neg;
    m.no_predictions = true_pos + false_pos == 0;
    m.no_instances = m.support == 0;
    m.precision = m.no_predictions ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(true_pos + false_pos);
    m.recall = m.no_instances ? 0.0 : static_cast<double>(true_pos) / static_cast<double>(m.support);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

std::string format_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

} // namespace

std::vector<std::size_t> FoldPlan::members(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::complement(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed) {
    check_fold_count(n, k);
    return {k, deal(n, k, seed), seed};
}

FoldPlan kfold_split_grouped(const std::vector<std::string>& groups, int k, std::uint64_t seed) {
    std::vector<std::string> keys;
    std::map<std::string, std::size_t> key_index;
    for (const auto& g : groups) {
        if (key_index.emplace(g, keys.size()).second) keys.push_back(g);
    }
    check_fold_count(keys.size(), k);
    const std::vector<int> group_fold = deal(keys.size(), k, seed);
    FoldPlan plan{k, {}, seed};
    plan.assignments.reserve(groups.size());
    for (const auto& g : groups) plan.assignments.push_back(group_fold[key_index.at(g)]);
    return plan;
}

std::string group_of(const std::string& id) { return id.substr(0, id.find('#')); }

double ConfusionMatrix::accuracy() const {
    return total() ? static_cast<double>(tp + tn) / static_cast<double>(total()) : 0.0;
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels) {
    if (preds.size() != labels.size()) throw ShapeError("prediction and label counts differ");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == kLabelComposer;
        const bool y = labels[i] == kLabelComposer;
        if (p && y) ++cm.tp;
        else if (p) ++cm.fp;
        else if (y) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

ClassReport class_report(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw EmptyError("confusion matrix has no samples");
    ClassReport r;
    r.composer = metrics(cm.tp, cm.fp, cm.fn);
    r.ai = metrics(cm.tn, cm.fn, cm.fp);
    r.accuracy = cm.accuracy();
    return r;
}

std::string format_class_report(const ConfusionMatrix& cm, const ClassReport& report) {
    std::string out;
    out += "confusion matrix (rows: actual, columns: predicted)\n";
    out += "              AI  composer\n";
    char buf[160];
    std::snprintf(buf, sizeof buf, "  AI        %6ld  %8ld\n  composer  %6ld  %8ld\n\n", cm.tn, cm.fp, cm.fn, cm.tp);
    out += buf;
    out += "            precision  recall  f1-score  support\n";
    const auto row = [&](const char* name, const ClassMetrics& m) {
        std::snprintf(buf, sizeof buf, "  %-9s %9.2f  %6.2f  %8.2f  %7ld%s\n", name, m.precision, m.recall, m.f1,
                      m.support, m.no_predictions ? "  (no predictions)" : "");
        out += buf;
    };
    row("AI", report.ai);
    row("composer", report.composer);
    std::snprintf(buf, sizeof buf, "  %-9s %27.4f  %7ld\n", "accuracy", report.accuracy, cm.total());
    out += buf;
    return out;
}

FitFn logistic_fit(const LrConfig& config) {
    return [config](const LabeledSet& train) -> Predictor {
        LrModel model = lr_train(train, config).model;
        return [model = std::move(model)](const Eigen::VectorXd& x) { return lr_predict(model, x); };
    };
}

CvReport cross_validate(const LabeledSet& data, int k, std::uint64_t seed, const FitFn& fit,
                        const std::optional<std::vector<std::string>>& groups) {
    data.validate();
    if (groups && groups->size() != data.size()) throw ShapeError("group count differs from sample count");
    const FoldPlan plan = groups ? kfold_split_grouped(*groups, k, seed) : kfold_split(data.size(), k, seed);

    CvReport report;
    report.grouped = groups.has_value();
    double best = -1.0;
    for (int f = 0; f < k; ++f) {
        const auto train_idx = plan.complement(f);
        const auto test_idx = plan.members(f);
        const LabeledSet train = data.subset(train_idx);
        const bool has_ai = std::count(train.labels.begin(), train.labels.end(), kLabelAi) > 0;
        const bool has_composer = std::count(train.labels.begin(), train.labels.end(), kLabelComposer) > 0;
        if (!has_ai || !has_composer)
            throw PlanError("training split for fold " + std::to_string(f) + " lacks a class");

        const Predictor predict = fit(train);
        std::vector<int> preds;
        std::vector<int> labels;
        for (std::size_t i : test_idx) {
            preds.push_back(predict(data.features[i].values) > 0.5 ? kLabelComposer : kLabelAi);
            labels.push_back(data.labels[i]);
        }
        const ConfusionMatrix cm = confusion(preds, labels);
        report.fold_accuracy.push_back(cm.accuracy());
        report.fold_size.push_back(test_idx.size());
        if (cm.accuracy() > best) {
            best = cm.accuracy();
            report.best_fold = f;
            report.best_confusion = cm;
        }
    }
    const double n = static_cast<double>(k);
    report.mean_accuracy = std::accumulate(report.fold_accuracy.begin(), report.fold_accuracy.end(), 0.0) / n;
    double ss = 0.0;
    for (double a : report.fold_accuracy) ss += (a - report.mean_accuracy) * (a - report.mean_accuracy);
    report.stddev_accuracy = std::sqrt(ss / (n - 1.0));
    report.best_report = class_report(report.best_confusion);
    return report;
}

CvReport cross_validate(const LabeledSet& data, int k, std::uint64_t seed, const LrConfig& config,
                        const std::optional<std::vector<std::string>>& groups) {
    return cross_validate(data, k, seed, logistic_fit(config), groups);
}

std::string format_cv_report(const CvReport& report) {
    std::string out = std::to_string(report.fold_accuracy.size()) + "-fold cross validation" +
                      (report.grouped ? " (group-aware)" : "") + "\n\nfold  accuracy  size\n";
    char buf[96];
    for (std::size_t f = 0; f < report.fold_accuracy.size(); ++f) {
        std::snprintf(buf, sizeof buf, "%4zu  %7.4f%%  %4zu\n", f + 1, 100.0 * report.fold_accuracy[f],
                      report.fold_size[f]);
        out += buf;
    }
    out += "\nmean accuracy " + format_double("%.4f%%", 100.0 * report.mean_accuracy) + " +/- " +
           format_double("%.4f%%", 100.0 * report.stddev_accuracy) + "\n";
    out += "best fold " + std::to_string(report.best_fold + 1) + "\n\n";
    out += format_class_report(report.best_confusion, report.best_report);
    return out;
}

std::string cv_folds_csv(const CvReport& report) {
    std::string out = "fold,accuracy,size\n";
    for (std::size_t f = 0; f < report.fold_accuracy.size(); ++f)
        out += std::to_string(f + 1) + "," + format_double("%.17g", report.fold_accuracy[f]) + "," +
               std::to_string(report.fold_size[f]) + "\n";
    return out;
}

ScoreResult score_eval_set(const MlstmParams& model, const LrModel& lr, const std::vector<IdentifiedPiece>& pieces) {
    if (pieces.empty()) throw EmptyError("no pieces to score");
    const Vocabulary& vocab = build_vocabulary();
    ScoreResult result;
    std::set<std::string> seen;
    for (const IdentifiedPiece& p : pieces) {
        if (!seen.insert(p.id).second) {
            result.errors.push_back({p.id, "duplicate id"});
            continue;
        }
        try {
            const std::vector<int> ids = vocab.ids_of(p.tokens);
            const FeatureVector f = extract_features(model, ids, p.id);
            result.rows.push_back({p.id, lr_predict(lr, f)});
        } catch (const Error& e) {
            result.errors.push_back({p.id, e.what()});
        }
    }
    const auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
    std::stable_sort(result.rows.begin(), result.rows.end(), by_id);
    std::stable_sort(result.errors.begin(), result.errors.end(), by_id);
    return result;
}

std::string scores_csv(const ScoreResult& result) {
    std::string out = "id,probability_composer\n";
    for (const ScoreRow& r : result.rows) out += csv_field(r.id) + "," + format_double("%.17g", r.probability_composer) + "\n";
    return out;
}

} // namespace midicls
