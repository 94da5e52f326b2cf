#include "midicls/classifier.hpp"

#include "midicls/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>

namespace midicls {

namespace {

// log(1 + e^s) without overflow.
double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

Eigen::VectorXd gradient(const LrModel& model, const LabeledSet& data, double l2) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(model.omega.size());
    const Eigen::Index dim = model.feature_dim();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd& x = data.features[i].values;
        const double residual = data.labels[i] - sigmoid(lr_score(model, x));
        g.head(dim) += residual * x;
        if (model.bias_included) g(dim) += residual;
    }
    g.head(dim) -= l2 * model.omega.head(dim);
    return g;
}

double objective(const LrModel& model, const LabeledSet& data, double l2) {
    return log_likelihood(model, data) - 0.5 * l2 * model.omega.head(model.feature_dim()).squaredNorm();
}

} // namespace

FeatureVector extract_features(const MlstmParams& params, std::span<const int> ids, std::string source_id) {
    if (ids.empty()) throw EmptySequenceError("cannot extract features from an empty sequence");
    LmState state = LmState::zero(params.hidden_dim());
    for (int id : ids) advance_state(id, state, params);
    return {std::move(state.c), std::move(source_id)};
}

void LabeledSet::validate() const {
    if (features.size() != labels.size()) throw ShapeError("feature and label counts differ");
    for (int y : labels)
        if (y != 0 && y != 1) throw DataError("labels must be 0 or 1");
    for (const auto& f : features) {
        if (f.values.size() != features.front().values.size()) throw ShapeError("feature dimensions differ");
        if (!f.values.allFinite()) throw DataError("non-finite feature in " + f.source_id);
    }
}

LabeledSet LabeledSet::subset(std::span<const std::size_t> indices) const {
    LabeledSet out;
    for (std::size_t i : indices) {
        out.features.push_back(features.at(i));
        out.labels.push_back(labels.at(i));
    }
    return out;
}

double lr_score(const LrModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.feature_dim())
        throw ShapeError("feature size " + std::to_string(x.size()) + " != model size " +
                         std::to_string(model.feature_dim()));
    double s = model.omega.head(x.size()).dot(x);
    if (model.bias_included) s += model.omega(x.size());
    return s;
}

double lr_predict(const LrModel& model, const Eigen::VectorXd& x) {
    return std::max(sigmoid(lr_score(model, x)), std::numeric_limits<double>::min());
}

double lr_predict(const LrModel& model, const FeatureVector& x) { return lr_predict(model, x.values); }

double lr_prob_ai(const LrModel& model, const Eigen::VectorXd& x) {
    return 1.0 / (1.0 + std::exp(lr_score(model, x)));
}

double log_likelihood(const LrModel& model, const LabeledSet& data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double s = lr_score(model, data.features[i].values);
        total += data.labels[i] * s - softplus(s);
    }
    return total;
}

LrFit lr_train(const LabeledSet& data, const LrConfig& config) {
    data.validate();
    if (data.size() < 2) throw DegenerateDataError("need at least two samples");
    bool seen[2] = {false, false};
    for (int y : data.labels) seen[y] = true;
    if (!seen[0] || !seen[1]) throw DegenerateDataError("training data contains a single class");
    if (!(config.learning_rate > 0.0) || config.max_iters < 0 || config.l2 < 0.0)
        throw DataError("invalid logistic-regression configuration");

    const auto dim = data.features.front().values.size();
    LrFit fit;
    fit.model.bias_included = config.fit_bias;
    fit.model.omega = Eigen::VectorXd::Zero(dim + (config.fit_bias ? 1 : 0));

    double step = config.learning_rate;
    double current = objective(fit.model, data, config.l2);
    Eigen::VectorXd g = gradient(fit.model, data, config.l2);
    int iter = 0;
    for (; iter < config.max_iters; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < config.tol) {
            fit.report.converged = true;
            break;
        }
        LrModel trial = fit.model;
        trial.omega += step * g;
        const double next = objective(trial, data, config.l2);
        if (!(next >= current)) {
            step *= 0.5;
            if (step < 1e-300) break;
            continue;
        }
        fit.model = std::move(trial);
        current = next;
        g = gradient(fit.model, data, config.l2);
        fit.report.likelihood_trace.push_back(log_likelihood(fit.model, data));
        step = std::min(step * 1.25, config.learning_rate);
    }
    fit.report.iterations = iter;
    fit.report.objective = current;
    fit.report.log_likelihood = log_likelihood(fit.model, data);
    fit.report.final_step = step;
    fit.report.gradient_inf_norm = g.lpNorm<Eigen::Infinity>();
    return fit;
}

std::string lr_to_json(const LrModel& model, const LrConfig& config, const LrFitReport& report) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["H"] = model.feature_dim();
    j["bias_included"] = model.bias_included;
    j["omega"] = std::vector<double>(model.omega.data(), model.omega.data() + model.omega.size());
    j["training"] = {{"learning_rate", config.learning_rate}, {"max_iters", config.max_iters},
                     {"tol", config.tol},                     {"l2", config.l2},
                     {"iterations", report.iterations},       {"converged", report.converged},
                     {"log_likelihood", report.log_likelihood}};
    return j.dump(2) + "\n";
}

LrModel lr_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("classifier file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != 1) throw FormatError("unsupported classifier version");
        LrModel model;
        model.bias_included = j.at("bias_included").get<bool>();
        const auto omega = j.at("omega").get<std::vector<double>>();
        const int h = j.at("H").get<int>();
        if (static_cast<int>(omega.size()) != h + (model.bias_included ? 1 : 0))
            throw FormatError("omega length does not match H");
        model.omega = Eigen::Map<const Eigen::VectorXd>(omega.data(), static_cast<Eigen::Index>(omega.size()));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("classifier file missing fields: ") + e.what());
    }
}

} // namespace midicls
