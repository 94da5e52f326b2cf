#include "midicls/mlstm.hpp"

#include "midicls/errors.hpp"
#include "midicls/rng.hpp"

#include <cassert>
#include <cmath>

namespace midicls {

namespace {

double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) { return v.unaryExpr([](double a) { return sigmoid(a); }); }

void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

} // namespace

void ModelConfig::validate() const {
    if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1) throw DataError("model dimensions must be >= 1");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
        throw DataError("Adam betas must lie in (0, 1)");
    if (!(adam_epsilon > 0.0)) throw DataError("Adam epsilon must be positive");
    if (!(learning_rate > 0.0)) throw DataError("learning rate must be positive");
    if (bptt_len < 1) throw DataError("bptt_len must be >= 1");
    if (epochs < 0) throw DataError("epochs must be non-negative");
    if (subsets < 1) throw DataError("subset count must be >= 1");
    if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) throw DataError("held-out fraction must lie in (0, 1)");
}

std::string_view tensor_name(Tensor t) {
    static constexpr std::array<std::string_view, kTensorCount> names = {
        "embedding", "input_mult", "hidden_mult", "input_gates", "mult_gates", "gate_bias", "output", "output_bias"};
    return names[static_cast<std::size_t>(t)];
}

MlstmParams MlstmParams::zeros(int vocab, int embed, int hidden) {
    MlstmParams p;
    p[Tensor::embedding] = Eigen::MatrixXd::Zero(vocab, embed);
    p[Tensor::input_mult] = Eigen::MatrixXd::Zero(hidden, embed);
    p[Tensor::hidden_mult] = Eigen::MatrixXd::Zero(hidden, hidden);
    p[Tensor::input_gates] = Eigen::MatrixXd::Zero(4 * hidden, embed);
    p[Tensor::mult_gates] = Eigen::MatrixXd::Zero(4 * hidden, hidden);
    p[Tensor::gate_bias] = Eigen::MatrixXd::Zero(4 * hidden, 1);
    p[Tensor::output] = Eigen::MatrixXd::Zero(vocab, hidden);
    p[Tensor::output_bias] = Eigen::MatrixXd::Zero(vocab, 1);
    return p;
}

MlstmParams MlstmParams::zeros_like(const MlstmParams& other) {
    return zeros(other.vocab_size(), other.embed_dim(), other.hidden_dim());
}

void MlstmParams::check_shapes() const {
    const Eigen::Index v = (*this)[Tensor::embedding].rows();
    const Eigen::Index e = (*this)[Tensor::embedding].cols();
    const Eigen::Index h = (*this)[Tensor::hidden_mult].rows();
    const auto is = [&](Tensor t, Eigen::Index r, Eigen::Index c) {
        const auto& m = (*this)[t];
        require(m.rows() == r && m.cols() == c, "tensor " + std::string(tensor_name(t)) + " has shape " +
                                                    std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    };
    require(v >= 1 && e >= 1 && h >= 1, "empty model dimensions");
    is(Tensor::input_mult, h, e);
    is(Tensor::hidden_mult, h, h);
    is(Tensor::input_gates, 4 * h, e);
    is(Tensor::mult_gates, 4 * h, h);
    is(Tensor::gate_bias, 4 * h, 1);
    is(Tensor::output, v, h);
    is(Tensor::output_bias, v, 1);
}

bool MlstmParams::all_finite() const {
    for (const auto& t : tensors)
        if (!t.allFinite()) return false;
    return true;
}

bool MlstmParams::operator==(const MlstmParams& other) const {
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        if (tensors[i].rows() != other.tensors[i].rows() || tensors[i].cols() != other.tensors[i].cols()) return false;
        if (tensors[i] != other.tensors[i]) return false;
    }
    return true;
}

MlstmParams init_params(const ModelConfig& config) {
    config.validate();
    const int h = config.hidden_dim;
    MlstmParams p = MlstmParams::zeros(config.vocab_size, config.embed_dim, h);
    Rng rng(config.seed);
    for (Tensor t : {Tensor::embedding, Tensor::input_mult, Tensor::hidden_mult, Tensor::input_gates,
                     Tensor::mult_gates, Tensor::output}) {
        Eigen::MatrixXd& m = p[t];
        const double scale = 1.0 / std::sqrt(static_cast<double>(m.cols()));
        // Row-major fill so the draw order matches the file layout.
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-scale, scale);
    }
    if (config.use_bias) p[Tensor::gate_bias].block(h, 0, h, 1).setOnes();
    return p;
}

std::pair<LmState, StepCache> mlstm_step(const Eigen::VectorXd& x, const LmState& state, const MlstmParams& params) {
    const Eigen::Index h = params.hidden_dim();
    require(x.size() == params.embed_dim(), "input has size " + std::to_string(x.size()) + ", expected " +
                                                std::to_string(params.embed_dim()));
    require(state.h.size() == h && state.c.size() == h, "state size does not match hidden dimension");

    StepCache s;
    s.x = x;
    s.h_prev = state.h;
    s.c_prev = state.c;
    s.mult_in.noalias() = params[Tensor::input_mult] * x;
    s.mult_hidden.noalias() = params[Tensor::hidden_mult] * state.h;
    s.mult = s.mult_in.cwiseProduct(s.mult_hidden);

    Eigen::VectorXd pre = params[Tensor::gate_bias].col(0);
    pre.noalias() += params[Tensor::input_gates] * x;
    pre.noalias() += params[Tensor::mult_gates] * s.mult;

    s.in_gate = sigmoid(pre.segment(0, h));
    s.forget_gate = sigmoid(pre.segment(h, h));
    s.out_gate = sigmoid(pre.segment(2 * h, h));
    s.candidate = pre.segment(3 * h, h).array().tanh();
    s.c = s.forget_gate.cwiseProduct(state.c) + s.in_gate.cwiseProduct(s.candidate);
    s.tanh_c = s.c.array().tanh();
    s.h = s.out_gate.cwiseProduct(s.tanh_c);

    assert((s.in_gate.array() >= 0.0).all() && (s.in_gate.array() <= 1.0).all());
    assert((s.h.array().abs() <= 1.0).all());

    LmState next{s.h, s.c};
    return {std::move(next), std::move(s)};
}

void advance_state(int token, LmState& state, const MlstmParams& params) {
    if (token < 0 || token >= params.vocab_size()) throw ShapeError("token id " + std::to_string(token) + " out of range");
    const Eigen::Index h = params.hidden_dim();
    const auto x = params[Tensor::embedding].row(token).transpose();
    const Eigen::VectorXd mult =
        (params[Tensor::input_mult] * x).cwiseProduct(params[Tensor::hidden_mult] * state.h);
    Eigen::VectorXd pre = params[Tensor::gate_bias].col(0);
    pre.noalias() += params[Tensor::input_gates] * x;
    pre.noalias() += params[Tensor::mult_gates] * mult;
    const Eigen::VectorXd in_gate = sigmoid(pre.segment(0, h));
    const Eigen::VectorXd forget_gate = sigmoid(pre.segment(h, h));
    const Eigen::VectorXd out_gate = sigmoid(pre.segment(2 * h, h));
    const Eigen::VectorXd candidate = pre.segment(3 * h, h).array().tanh();
    state.c = forget_gate.cwiseProduct(state.c) + in_gate.cwiseProduct(candidate);
    state.h = out_gate.cwiseProduct(Eigen::VectorXd(state.c.array().tanh()));
}

ForwardResult forward_lm(std::span<const int> ids, const MlstmParams& params) {
    return forward_lm(ids, params, LmState::zero(params.hidden_dim()));
}

ForwardResult forward_lm(std::span<const int> ids, const MlstmParams& params, const LmState& initial) {
    if (ids.empty()) throw EmptySequenceError("forward pass over an empty sequence");
    const int vocab = params.vocab_size();
    ForwardResult out;
    out.vocab = vocab;
    out.embed = params.embed_dim();
    out.hidden = params.hidden_dim();
    out.logits.resize(static_cast<Eigen::Index>(ids.size()), vocab);
    out.caches.reserve(ids.size());

    LmState state = initial;
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const int id = ids[t];
        if (id < 0 || id >= vocab) throw ShapeError("token id " + std::to_string(id) + " out of range");
        auto [next, cache] = mlstm_step(params[Tensor::embedding].row(id).transpose(), state, params);
        cache.token = id;
        out.logits.row(static_cast<Eigen::Index>(t)) =
            (params[Tensor::output] * cache.h + params[Tensor::output_bias].col(0)).transpose();
        state = std::move(next);
        out.caches.push_back(std::move(cache));
    }
    out.final_state = std::move(state);
    return out;
}

double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> targets) {
    if (static_cast<std::size_t>(logits.rows()) != targets.size())
        throw ShapeError("logits rows and target count differ");
    if (targets.empty()) throw EmptySequenceError("cross-entropy over zero steps");
    double total = 0.0;
    for (Eigen::Index t = 0; t < logits.rows(); ++t) {
        const int target = targets[static_cast<std::size_t>(t)];
        if (target < 0 || target >= logits.cols()) throw ShapeError("target id out of range");
        const double top = logits.row(t).maxCoeff();
        const double log_sum = std::log((logits.row(t).array() - top).exp().sum()) + top;
        total += log_sum - logits(t, target);
    }
    return total / static_cast<double>(logits.rows());
}

MlstmParams backward_lm(const ForwardResult& forward, std::span<const int> targets, const MlstmParams& params) {
    const Eigen::Index steps = static_cast<Eigen::Index>(forward.caches.size());
    if (forward.vocab != params.vocab_size() || forward.embed != params.embed_dim() ||
        forward.hidden != params.hidden_dim())
        throw CacheError("forward caches were produced by a model of different shape");
    if (static_cast<Eigen::Index>(targets.size()) != steps || forward.logits.rows() != steps || steps == 0)
        throw CacheError("target count does not match cached steps");

    const Eigen::Index h = params.hidden_dim();
    MlstmParams g = MlstmParams::zeros_like(params);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd dpre(4 * h);
    const double inv_steps = 1.0 / static_cast<double>(steps);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        const StepCache& s = forward.caches[static_cast<std::size_t>(t)];
        const int target = targets[static_cast<std::size_t>(t)];
        if (target < 0 || target >= params.vocab_size()) throw ShapeError("target id out of range");

        Eigen::VectorXd dlogits = forward.logits.row(t).transpose();
        dlogits = (dlogits.array() - dlogits.maxCoeff()).exp();
        dlogits /= dlogits.sum();
        dlogits(target) -= 1.0;
        dlogits *= inv_steps;

        g[Tensor::output].noalias() += dlogits * s.h.transpose();
        g[Tensor::output_bias].col(0) += dlogits;

        Eigen::VectorXd dh = dh_next;
        dh.noalias() += params[Tensor::output].transpose() * dlogits;
        const Eigen::VectorXd dc =
            dh.cwiseProduct(s.out_gate).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix()) + dc_next;

        dpre.segment(0, h) = (dc.array() * s.candidate.array() * s.in_gate.array() * (1.0 - s.in_gate.array())).matrix();
        dpre.segment(h, h) =
            (dc.array() * s.c_prev.array() * s.forget_gate.array() * (1.0 - s.forget_gate.array())).matrix();
        dpre.segment(2 * h, h) =
            (dh.array() * s.tanh_c.array() * s.out_gate.array() * (1.0 - s.out_gate.array())).matrix();
        dpre.segment(3 * h, h) = (dc.array() * s.in_gate.array() * (1.0 - s.candidate.array().square())).matrix();

        g[Tensor::input_gates].noalias() += dpre * s.x.transpose();
        g[Tensor::mult_gates].noalias() += dpre * s.mult.transpose();
        g[Tensor::gate_bias].col(0) += dpre;

        Eigen::VectorXd dx = params[Tensor::input_gates].transpose() * dpre;
        const Eigen::VectorXd dmult = params[Tensor::mult_gates].transpose() * dpre;
        const Eigen::VectorXd dmult_in = dmult.cwiseProduct(s.mult_hidden);
        const Eigen::VectorXd dmult_hidden = dmult.cwiseProduct(s.mult_in);

        g[Tensor::input_mult].noalias() += dmult_in * s.x.transpose();
        dx.noalias() += params[Tensor::input_mult].transpose() * dmult_in;
        g[Tensor::hidden_mult].noalias() += dmult_hidden * s.h_prev.transpose();
        dh_next.noalias() = params[Tensor::hidden_mult].transpose() * dmult_hidden;
        dc_next = dc.cwiseProduct(s.forget_gate);

        if (s.token >= 0) g[Tensor::embedding].row(s.token) += dx.transpose();
    }
    return g;
}

AdamState AdamState::for_params(const MlstmParams& params) {
    return {MlstmParams::zeros_like(params), MlstmParams::zeros_like(params), 0};
}

void adam_update(MlstmParams& params, const MlstmParams& grads, AdamState& adam, const ModelConfig& config) {
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        if (params.tensors[i].rows() != grads.tensors[i].rows() || params.tensors[i].cols() != grads.tensors[i].cols() ||
            params.tensors[i].rows() != adam.first_moment.tensors[i].rows() ||
            params.tensors[i].cols() != adam.first_moment.tensors[i].cols())
            throw ShapeError("Adam update with mismatched tensor shapes");
    }
    ++adam.step;
    const double b1 = config.adam_beta1;
    const double b2 = config.adam_beta2;
    const double correction1 = 1.0 - std::pow(b1, static_cast<double>(adam.step));
    const double correction2 = 1.0 - std::pow(b2, static_cast<double>(adam.step));
    for (std::size_t i = 0; i < kTensorCount; ++i) {
        const auto t = static_cast<Tensor>(i);
        if (!config.use_bias && (t == Tensor::gate_bias || t == Tensor::output_bias)) continue;
        auto m = adam.first_moment.tensors[i].array();
        auto v = adam.second_moment.tensors[i].array();
        const auto g = grads.tensors[i].array();
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.square();
        params.tensors[i].array() -=
            config.learning_rate * (m / correction1) / ((v / correction2).sqrt() + config.adam_epsilon);
    }
}

} // namespace midicls
