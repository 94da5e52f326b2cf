#include "doctest.h"

#include "midicls/classifier.hpp"
#include "midicls/errors.hpp"
#include "midicls/rng.hpp"

#include <cfloat>
#include <cmath>

using namespace midicls;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
    VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

LabeledSet make_set(const std::vector<std::vector<double>>& xs, const std::vector<int>& ys) {
    LabeledSet s;
    for (const auto& x : xs) s.features.push_back({Eigen::Map<const VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())), ""});
    s.labels = ys;
    return s;
}

// Two overlapping Gaussian clouds.
LabeledSet noisy_set(int n, int dim, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    LabeledSet s;
    for (int i = 0; i < n; ++i) {
        const int y = i % 2;
        VectorXd x(dim);
        for (int d = 0; d < dim; ++d) {
            const double u1 = rng.unit() + 1e-12, u2 = rng.unit();
            x(d) = scale * ((y ? 0.6 : -0.4) + std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2));
        }
        s.features.push_back({x, "p" + std::to_string(i)});
        s.labels.push_back(y);
    }
    return s;
}

} // namespace

TEST_CASE("prediction values") {
    LrModel m{vec({0.0, 0.0}), true};
    CHECK(lr_predict(m, vec({5.0})) == 0.5);
    m.omega = vec({std::log(3.0), 0.0});
    CHECK(lr_predict(m, vec({1.0})) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(lr_prob_ai(m, vec({1.0})) == doctest::Approx(0.25).epsilon(1e-15));
    m.omega = vec({1.0, 0.0});
    const double tiny = lr_predict(m, vec({-1000.0}));
    CHECK(tiny > 0.0);
    CHECK(tiny <= 1e-300);
    CHECK(lr_prob_ai(m, vec({-1000.0})) == 1.0);

    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        m.omega = vec({rng.uniform(-20, 20), rng.uniform(-5, 5)});
        const VectorXd x = vec({rng.uniform(-3, 3)});
        CHECK(std::abs(lr_predict(m, x) + lr_prob_ai(m, x) - 1.0) <= 1e-15);
    }
    CHECK(lr_score(LrModel{vec({2.0, 3.0}), false}, vec({1.0, 1.0})) == 5.0);
}

TEST_CASE("log likelihood at zero weights") {
    const LabeledSet s = noisy_set(37, 3, 2);
    const LrModel zero{VectorXd::Zero(4), true};
    CHECK(log_likelihood(zero, s) == doctest::Approx(-37 * std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("regularized optimum matches a brute-force search") {
    const LabeledSet s = make_set({{-2}, {-1}, {-0.5}, {0.2}, {0.5}, {1}, {1.5}, {2.5}, {-1.2}, {0.8}},
                                  {0, 0, 1, 0, 1, 1, 0, 1, 0, 1});
    const double lambda = 0.1;
    LrConfig cfg;
    cfg.l2 = lambda;
    cfg.fit_bias = false;
    cfg.max_iters = 20000;
    cfg.tol = 1e-7;
    const LrFit fit = lr_train(s, cfg);
    CHECK(fit.report.converged);

    double best_w = 0, best = -1e300;
    for (double w = -10; w <= 10; w += 1e-4) {
        double obj = -0.5 * lambda * w * w;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double z = w * s.features[i].values(0);
            obj += s.labels[i] * z - std::log1p(std::exp(z));
        }
        if (obj > best) best = obj, best_w = w;
    }
    CHECK(std::abs(fit.model.omega(0) - best_w) < 1e-3);
    CHECK(fit.report.objective == doctest::Approx(best).epsilon(1e-9));
}

namespace {

// Maximizes a concave function of one variable on [lo, hi].
template <class F>
double golden_max(F f, double lo, double hi) {
    const double r = (std::sqrt(5.0) - 1) / 2;
    double a = lo, b = hi;
    while (b - a > 1e-10) {
        const double c = b - r * (b - a), d = a + r * (b - a);
        if (f(c) < f(d)) a = c;
        else b = d;
    }
    return (a + b) / 2;
}

} // namespace

TEST_CASE("two-point problem matches a nested golden-section search") {
    const LabeledSet s = make_set({{-1}, {1}}, {0, 1});
    const double lambda = 0.1;
    const auto objective = [&](double w, double b) {
        double obj = -0.5 * lambda * w * w;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double z = w * s.features[i].values(0) + b;
            obj += s.labels[i] * z - std::log1p(std::exp(z));
        }
        return obj;
    };
    const auto best_bias = [&](double w) { return golden_max([&](double b) { return objective(w, b); }, -20, 20); };
    const double w_star = golden_max([&](double w) { return objective(w, best_bias(w)); }, -20, 20);
    const double b_star = best_bias(w_star);

    LrConfig cfg;
    cfg.l2 = lambda;
    const LrFit fit = lr_train(s, cfg);
    CHECK(fit.report.converged);
    CHECK(std::abs(fit.model.omega(0) - w_star) < 1e-3);
    CHECK(std::abs(fit.model.omega(1) - b_star) < 1e-3);
    CHECK(log_likelihood(LrModel{Eigen::VectorXd::Zero(2), true}, s) == -2 * std::log(2.0));
}

TEST_CASE("accepted steps never lower the likelihood") {
    const LabeledSet s = noisy_set(200, 4, 3);
    LrConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.l2 = 0.0;
    cfg.max_iters = 500;
    const LrFit fit = lr_train(s, cfg);
    REQUIRE(fit.report.likelihood_trace.size() > 10);
    CHECK(fit.report.likelihood_trace.front() >= -200 * std::log(2.0));
    for (std::size_t i = 1; i < fit.report.likelihood_trace.size(); ++i)
        CHECK(fit.report.likelihood_trace[i] >= fit.report.likelihood_trace[i - 1]);
}

TEST_CASE("aggressive steps are backed off") {
    const LabeledSet s = noisy_set(200, 4, 3, 50.0);
    LrConfig cfg;
    cfg.learning_rate = 10.0;
    const LrFit fit = lr_train(s, cfg);
    CHECK(std::isfinite(fit.report.objective));
    CHECK(fit.report.objective > -200 * std::log(2.0));
    CHECK(fit.report.final_step <= 10.0);
}

TEST_CASE("separable data without a penalty") {
    const LabeledSet s = make_set({{-2}, {-1}, {1}, {2}}, {0, 0, 1, 1});
    LrConfig cfg;
    cfg.l2 = 0.0;
    cfg.max_iters = 300;
    const LrFit fit = lr_train(s, cfg);
    CHECK_FALSE(fit.report.converged);
    CHECK(fit.report.iterations == 300);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK((lr_predict(fit.model, s.features[i]) > 0.5) == (s.labels[i] == 1));
}

TEST_CASE("degenerate and malformed data") {
    CHECK_THROWS_AS(lr_train(make_set({{1}, {2}}, {1, 1})), DegenerateDataError);
    CHECK_THROWS_AS(lr_train(make_set({}, {})), DegenerateDataError);
    CHECK_THROWS_AS(lr_train(make_set({{1}, {2, 3}}, {0, 1})), ShapeError);
    CHECK_THROWS_AS(lr_train(make_set({{1}, {2}}, {0, 2})), DataError);
    LrModel m{vec({1, 2, 3}), true};
    CHECK_THROWS_AS(lr_score(m, vec({1})), ShapeError);
}

TEST_CASE("unpenalized fits are invariant to feature scale") {
    const LabeledSet s = noisy_set(120, 3, 5);
    LabeledSet scaled = s;
    for (auto& f : scaled.features) f.values *= 4.0;
    LrConfig cfg;
    cfg.l2 = 0.0;
    cfg.max_iters = 50000;
    cfg.tol = 1e-9;
    const LrFit a = lr_train(s, cfg), b = lr_train(scaled, cfg);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(lr_predict(a.model, s.features[i]) == doctest::Approx(lr_predict(b.model, scaled.features[i])).epsilon(1e-4));
}

TEST_CASE("the bias is not penalized") {
    const LabeledSet s = make_set({{0}, {0}, {0}, {0}}, {1, 1, 1, 0});
    LrConfig cfg;
    cfg.l2 = 100.0;
    cfg.max_iters = 20000;
    cfg.tol = 1e-10;
    const LrFit fit = lr_train(s, cfg);
    CHECK(fit.model.omega(1) == doctest::Approx(std::log(3.0)).epsilon(1e-6));
}

TEST_CASE("features are the final cell state") {
    ModelConfig cfg;
    cfg.vocab_size = 9;
    cfg.embed_dim = 3;
    cfg.hidden_dim = 4;
    const MlstmParams p = init_params(cfg);
    const std::vector<int> ids{1, 4, 2, 8};
    const FeatureVector f = extract_features(p, ids, "x");
    LmState s = LmState::zero(4);
    for (int id : ids) advance_state(id, s, p);
    CHECK(f.values == s.c);
    CHECK(f.source_id == "x");
    CHECK_THROWS_AS(extract_features(p, std::vector<int>{}), EmptySequenceError);
}

TEST_CASE("json round trip") {
    const LabeledSet s = noisy_set(50, 3, 7);
    const LrConfig cfg;
    const LrFit fit = lr_train(s, cfg);
    const LrModel back = lr_from_json(lr_to_json(fit.model, cfg, fit.report));
    CHECK(back.bias_included);
    CHECK(back.omega == fit.model.omega);
    CHECK_THROWS_AS(lr_from_json("{"), FormatError);
    CHECK_THROWS_AS(lr_from_json("{\"omega\": [1]}"), FormatError);
}
