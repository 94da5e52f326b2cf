#include "midicls/errors.hpp"
#include "midicls/mlstm.hpp"
#include "midicls/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace midicls {

namespace {

std::vector<int> concat(const std::vector<std::vector<int>>& corpus, std::span<const std::size_t> order) {
    std::vector<int> out;
    for (std::size_t i : order) out.insert(out.end(), corpus[i].begin(), corpus[i].end());
    return out;
}

// One pass over a token stream in truncated windows, carrying the state
// between windows. Returns the summed loss and the number of predictions.
std::pair<double, std::size_t> train_stream(std::span<const int> stream, MlstmParams& params, AdamState& adam,
                                            const ModelConfig& config, long& updates) {
    if (stream.size() < 2) return {0.0, 0};
    LmState state = LmState::zero(params.hidden_dim());
    const std::size_t positions = stream.size() - 1;
    double total = 0.0;
    for (std::size_t start = 0; start < positions; start += static_cast<std::size_t>(config.bptt_len)) {
        const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(config.bptt_len), positions - start);
        const auto inputs = stream.subspan(start, len);
        const auto targets = stream.subspan(start + 1, len);
        ForwardResult fwd = forward_lm(inputs, params, state);
        total += cross_entropy(fwd.logits, targets) * static_cast<double>(len);
        const MlstmParams grads = backward_lm(fwd, targets, params);
        adam_update(params, grads, adam, config);
        ++updates;
        state = std::move(fwd.final_state);
    }
    return {total, positions};
}

} // namespace

double stream_loss(const std::vector<std::vector<int>>& pieces, const MlstmParams& params) {
    std::vector<int> stream;
    for (const auto& p : pieces) stream.insert(stream.end(), p.begin(), p.end());
    if (stream.size() < 2) throw EmptySequenceError("need at least two tokens to score");
    LmState state = LmState::zero(params.hidden_dim());
    const auto& out = params[Tensor::output];
    const auto bias = params[Tensor::output_bias].col(0);
    double total = 0.0;
    Eigen::VectorXd logits(params.vocab_size());
    for (std::size_t t = 0; t + 1 < stream.size(); ++t) {
        advance_state(stream[t], state, params);
        logits.noalias() = out * state.h;
        logits += bias;
        const double top = logits.maxCoeff();
        total += std::log((logits.array() - top).exp().sum()) + top - logits(stream[t + 1]);
    }
    return total / static_cast<double>(stream.size() - 1);
}

TrainResult train_lm(const std::vector<std::vector<int>>& corpus, const ModelConfig& config,
                     const EpochCallback& on_epoch) {
    config.validate();
    if (corpus.empty()) throw DataError("empty training corpus");
    for (const auto& piece : corpus) {
        if (piece.empty()) throw DataError("corpus contains an empty piece");
        for (int id : piece)
            if (id < 0 || id >= config.vocab_size) throw DataError("token id " + std::to_string(id) + " out of range");
    }

    const std::size_t n = corpus.size();
    const auto heldout = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * config.heldout_fraction)));
    if (heldout >= n || n - heldout < static_cast<std::size_t>(config.subsets))
        throw DataError("corpus of " + std::to_string(n) + " pieces is too small to split");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    split_rng.shuffle(order);

    const std::span<const std::size_t> train_idx(order.data(), n - heldout);
    const std::span<const std::size_t> test_idx(order.data() + (n - heldout), heldout);

    std::vector<std::vector<int>> subsets;
    const std::size_t per = train_idx.size() / config.subsets;
    const std::size_t extra = train_idx.size() % config.subsets;
    std::size_t at = 0;
    for (int s = 0; s < config.subsets; ++s) {
        const std::size_t len = per + (static_cast<std::size_t>(s) < extra ? 1 : 0);
        subsets.push_back(concat(corpus, train_idx.subspan(at, len)));
        at += len;
    }
    std::vector<std::vector<int>> heldout_pieces;
    for (std::size_t i : test_idx) heldout_pieces.push_back(corpus[i]);

    TrainResult result;
    TrainReport& report = result.report;
    report.config = config;
    report.pieces = n;
    report.train_pieces = train_idx.size();
    report.heldout_pieces = heldout;
    for (const auto& s : subsets) report.subset_tokens.push_back(s.size());
    for (const auto& p : heldout_pieces) report.heldout_tokens += p.size();
    report.deviations = {
        "output projection (output, output_bias) trained jointly with embedding and recurrent layer",
        config.use_bias ? "gate biases included; forget-gate slice initialised to 1" : "biases disabled",
        "uniform fan-in initialisation; batch size 1; truncated BPTT window " + std::to_string(config.bptt_len),
    };

    result.params = init_params(config);
    const auto heldout_loss = [&] {
        // A single held-out piece of one token has nothing to predict.
        std::size_t tokens = 0;
        for (const auto& p : heldout_pieces) tokens += p.size();
        return tokens < 2 ? std::nan("") : stream_loss(heldout_pieces, result.params);
    };
    report.initial_heldout_loss = heldout_loss();

    AdamState adam = AdamState::for_params(result.params);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        double total = 0.0;
        std::size_t count = 0;
        for (const auto& stream : subsets) {
            const auto [loss, positions] = train_stream(stream, result.params, adam, config, report.updates);
            total += loss;
            count += positions;
        }
        const double mean = count ? total / static_cast<double>(count) : std::nan("");
        report.epoch_train_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    report.final_heldout_loss = heldout_loss();
    if (!result.params.all_finite()) throw DataError("training diverged to non-finite parameters");
    return result;
}

} // namespace midicls
