#pragma once

#include "midicls/classifier.hpp"
#include "midicls/tokens.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace midicls {

struct FoldPlan {
    int k = 0;
    std::vector<int> assignments;  // sample index -> fold id
    std::uint64_t seed = 0;

    std::vector<std::size_t> members(int fold) const;
    std::vector<std::size_t> complement(int fold) const;
};

// Seeded shuffle of [0, n) dealt round-robin into k folds.
FoldPlan kfold_split(std::size_t n, int k, std::uint64_t seed);

// Same dealing over distinct group keys, so every member of a group lands
// in one fold. Fold sizes are balanced in groups, not samples.
FoldPlan kfold_split_grouped(const std::vector<std::string>& groups, int k, std::uint64_t seed);

// Group key of an item id: the text before the first '#'.
std::string group_of(const std::string& id);

// Positive class is label 1 (composer-written).
struct ConfusionMatrix {
    long tp = 0, fp = 0, tn = 0, fn = 0;

    long total() const { return tp + fp + tn + fn; }
    double accuracy() const;
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& labels);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long support = 0;
    bool no_predictions = false;  // precision reported as 0
    bool no_instances = false;    // recall reported as 0
};

struct ClassReport {
    ClassMetrics ai;
    ClassMetrics composer;
    double accuracy = 0.0;
};

ClassReport class_report(const ConfusionMatrix& cm);
std::string format_class_report(const ConfusionMatrix& cm, const ClassReport& report);

// Trains on one split and returns a predictor of p(composer).
using Predictor = std::function<double(const Eigen::VectorXd&)>;
using FitFn = std::function<Predictor(const LabeledSet&)>;

FitFn logistic_fit(const LrConfig& config);

struct CvReport {
    std::vector<double> fold_accuracy;
    std::vector<std::size_t> fold_size;
    double mean_accuracy = 0.0;
    double stddev_accuracy = 0.0;
    int best_fold = 0;
    ConfusionMatrix best_confusion;
    ClassReport best_report;
    bool grouped = false;
};

// When `groups` is given, folding keeps each group together.
CvReport cross_validate(const LabeledSet& data, int k, std::uint64_t seed, const FitFn& fit,
                        const std::optional<std::vector<std::string>>& groups = std::nullopt);
CvReport cross_validate(const LabeledSet& data, int k, std::uint64_t seed, const LrConfig& config,
                        const std::optional<std::vector<std::string>>& groups = std::nullopt);

std::string format_cv_report(const CvReport& report);
std::string cv_folds_csv(const CvReport& report);

struct ScoreRow {
    std::string id;
    double probability_composer = 0.0;
};

struct ScoreError {
    std::string id;
    std::string message;
};

struct ScoreResult {
    std::vector<ScoreRow> rows;      // sorted by id
    std::vector<ScoreError> errors;  // sorted by id
};

struct IdentifiedPiece {
    std::string id;
    TokenSeq tokens;
};

ScoreResult score_eval_set(const MlstmParams& model, const LrModel& lr, const std::vector<IdentifiedPiece>& pieces);
std::string scores_csv(const ScoreResult& result);

struct SyntheticCorpus {
    std::vector<NotePiece> ai;
    std::vector<NotePiece> composer;
    std::vector<TokenSeq> ai_tokens;
    std::vector<TokenSeq> composer_tokens;
};

inline constexpr int kSyntheticMeasures = 8;

// Composer class: first-order Markov walk over a diatonic scale with dotted
// rhythm patterns. AI class: i.i.d. chromatic pitches with uniformly drawn
// plain durations. Both are gapless 8-measure pieces in 4/4.
SyntheticCorpus gen_synthetic(int n_per_class, std::uint64_t seed,
                              const EncoderProfile& profile = EncoderProfile::figure());

} // namespace midicls
