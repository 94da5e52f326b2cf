#pragma once

#include "midicls/tokens.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace midicls {

struct ModelConfig {
    int vocab_size = kVocabSize;
    int embed_dim = 64;
    int hidden_dim = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    int epochs = 3;
    int bptt_len = 128;
    std::uint64_t seed = 0;
    // false: gate and output biases are held at zero (plain gate equations).
    bool use_bias = true;
    int subsets = 3;
    double heldout_fraction = 0.1;

    void validate() const;
};

// Parameter tensors in serialization order. Vectors are stored as n x 1.
enum class Tensor : std::uint8_t {
    embedding,     // V x E  token lookup
    input_mult,    // H x E  input factor of the multiplicative state
    hidden_mult,   // H x H  recurrent factor of the multiplicative state
    input_gates,   // 4H x E input contribution to the gate pre-activations
    mult_gates,    // 4H x H multiplicative-state contribution
    gate_bias,     // 4H x 1
    output,        // V x H  next-token projection
    output_bias,   // V x 1
};

inline constexpr std::size_t kTensorCount = 8;
std::string_view tensor_name(Tensor t);

// Gate rows are laid out input, forget, output, candidate.
struct MlstmParams {
    std::array<Eigen::MatrixXd, kTensorCount> tensors;

    static MlstmParams zeros(int vocab, int embed, int hidden);
    static MlstmParams zeros_like(const MlstmParams& other);

    Eigen::MatrixXd& operator[](Tensor t) { return tensors[static_cast<std::size_t>(t)]; }
    const Eigen::MatrixXd& operator[](Tensor t) const { return tensors[static_cast<std::size_t>(t)]; }

    int vocab_size() const { return static_cast<int>((*this)[Tensor::embedding].rows()); }
    int embed_dim() const { return static_cast<int>((*this)[Tensor::embedding].cols()); }
    int hidden_dim() const { return static_cast<int>((*this)[Tensor::hidden_mult].rows()); }

    // Throws ShapeError when tensor shapes disagree with each other.
    void check_shapes() const;
    bool all_finite() const;
    bool operator==(const MlstmParams& other) const;
};

struct LmState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;

    static LmState zero(int hidden) { return {Eigen::VectorXd::Zero(hidden), Eigen::VectorXd::Zero(hidden)}; }
};

// Intermediates of one step, kept for backpropagation.
struct StepCache {
    int token = -1;
    Eigen::VectorXd x, h_prev, c_prev;
    Eigen::VectorXd mult_in, mult_hidden, mult;  // m = mult_in (*) mult_hidden
    Eigen::VectorXd in_gate, forget_gate, out_gate, candidate;
    Eigen::VectorXd c, tanh_c, h;
};

MlstmParams init_params(const ModelConfig& config);

std::pair<LmState, StepCache> mlstm_step(const Eigen::VectorXd& x, const LmState& state, const MlstmParams& params);

// Advances the state by one token without keeping intermediates.
void advance_state(int token, LmState& state, const MlstmParams& params);

struct ForwardResult {
    Eigen::MatrixXd logits;  // T x V; row t predicts token t + 1
    LmState final_state;
    std::vector<StepCache> caches;
    int vocab = 0, embed = 0, hidden = 0;
};

ForwardResult forward_lm(std::span<const int> ids, const MlstmParams& params);
ForwardResult forward_lm(std::span<const int> ids, const MlstmParams& params, const LmState& initial);

// Mean over rows of -log softmax(logits_t)[target_t], in nats.
double cross_entropy(const Eigen::MatrixXd& logits, std::span<const int> targets);

// Exact gradients of cross_entropy(forward.logits, targets) with respect to
// every tensor, through the whole window.
MlstmParams backward_lm(const ForwardResult& forward, std::span<const int> targets, const MlstmParams& params);

struct AdamState {
    MlstmParams first_moment;
    MlstmParams second_moment;
    long step = 0;

    static AdamState for_params(const MlstmParams& params);
};

void adam_update(MlstmParams& params, const MlstmParams& grads, AdamState& adam, const ModelConfig& config);

struct TrainReport {
    ModelConfig config;
    std::size_t pieces = 0;
    std::size_t train_pieces = 0;
    std::size_t heldout_pieces = 0;
    std::vector<std::size_t> subset_tokens;
    std::size_t heldout_tokens = 0;
    std::vector<double> epoch_train_loss;
    double initial_heldout_loss = 0.0;
    double final_heldout_loss = 0.0;
    long updates = 0;
    std::vector<std::string> deviations;
};

struct TrainResult {
    MlstmParams params;
    TrainReport report;
};

using EpochCallback = std::function<void(int epoch, double train_loss)>;

// Pieces are token-id sequences, each ending with the piece-end id.
TrainResult train_lm(const std::vector<std::vector<int>>& corpus, const ModelConfig& config,
                     const EpochCallback& on_epoch = {});

// Mean next-token cross-entropy over the concatenated pieces, zero start state.
double stream_loss(const std::vector<std::vector<int>>& pieces, const MlstmParams& params);

// Binary model file: "MLSTM001", u32 V E H, float32 tensors, u64 FNV-1a.
void save_model(const MlstmParams& params, const ModelConfig& config, const std::string& path);
std::pair<MlstmParams, ModelConfig> load_model(const std::string& path);
std::vector<std::uint8_t> serialize_model(const MlstmParams& params);
MlstmParams deserialize_model(std::span<const std::uint8_t> bytes);

} // namespace midicls
