#pragma once

#include "midicls/mlstm.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace midicls {

// Label convention: 1 = composer-written, 0 = AI-generated.
inline constexpr int kLabelAi = 0;
inline constexpr int kLabelComposer = 1;

struct FeatureVector {
    Eigen::VectorXd values;
    std::string source_id;
};

// Final cell state after feeding the whole sequence from the zero state.
FeatureVector extract_features(const MlstmParams& params, std::span<const int> ids, std::string source_id = {});

struct LrModel {
    Eigen::VectorXd omega;  // weights, then the bias coordinate when bias_included
    bool bias_included = true;

    int feature_dim() const { return static_cast<int>(omega.size()) - (bias_included ? 1 : 0); }
};

struct LabeledSet {
    std::vector<FeatureVector> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    void validate() const;
    LabeledSet subset(std::span<const std::size_t> indices) const;
};

// omega . [x; 1] (or omega . x without a bias).
double lr_score(const LrModel& model, const Eigen::VectorXd& x);
// p(y = 1 | x); never exactly 0 so downstream logs stay finite.
double lr_predict(const LrModel& model, const Eigen::VectorXd& x);
double lr_predict(const LrModel& model, const FeatureVector& x);
// 1 / (1 + e^score), evaluated directly.
double lr_prob_ai(const LrModel& model, const Eigen::VectorXd& x);

struct LrConfig {
    double learning_rate = 0.1;
    int max_iters = 2000;
    double tol = 1e-6;
    double l2 = 1e-4;  // penalty on the weights, not the bias
    bool fit_bias = true;
};

// sum_i [y_i s_i - log(1 + e^{s_i})] with s_i = lr_score(model, x_i).
double log_likelihood(const LrModel& model, const LabeledSet& data);

struct LrFitReport {
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;     // log-likelihood minus the L2 penalty
    double log_likelihood = 0.0;
    double final_step = 0.0;
    double gradient_inf_norm = 0.0;
    std::vector<double> likelihood_trace;  // after every accepted step
};

struct LrFit {
    LrModel model;
    LrFitReport report;
};

// Full-batch gradient ascent from omega = 0. A step that would lower the
// objective is rejected and retried at half the step size; accepted steps
// grow it back toward config.learning_rate.
LrFit lr_train(const LabeledSet& data, const LrConfig& config = {});

std::string lr_to_json(const LrModel& model, const LrConfig& config, const LrFitReport& report);
LrModel lr_from_json(const std::string& text);

} // namespace midicls
