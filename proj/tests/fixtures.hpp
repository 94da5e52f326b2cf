#pragma once

// Shared test fixtures: hand-assembled MIDI files and reference pieces.

#include "midicls/midi.hpp"
#include "midicls/tokens.hpp"

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace fixtures {

using Bytes = std::vector<std::uint8_t>;

inline void append(Bytes& out, std::initializer_list<int> bytes) {
    for (int b : bytes) out.push_back(static_cast<std::uint8_t>(b));
}

inline void append_be32(Bytes& out, std::uint32_t v) {
    append(out, {int(v >> 24) & 0xFF, int(v >> 16) & 0xFF, int(v >> 8) & 0xFF, int(v) & 0xFF});
}

inline Bytes header(int format, int tracks, int ppq) {
    Bytes out;
    append(out, {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, format, 0, tracks, (ppq >> 8) & 0xFF, ppq & 0xFF});
    return out;
}

inline Bytes track(const Bytes& events) {
    Bytes out;
    append(out, {'M', 'T', 'r', 'k'});
    append_be32(out, static_cast<std::uint32_t>(events.size()));
    out.insert(out.end(), events.begin(), events.end());
    return out;
}

inline Bytes vlq(std::uint32_t v) {
    Bytes groups;
    groups.push_back(static_cast<std::uint8_t>(v & 0x7F));
    while (v >>= 7) groups.insert(groups.begin(), static_cast<std::uint8_t>((v & 0x7F) | 0x80));
    return groups;
}

// Format 0, PPQ 480: note-on 60/100 at tick 0, note-off at tick 480.
// Written out byte by byte; 480 = 0x83 0x60 as a variable-length quantity.
inline Bytes minimal_smf() {
    Bytes out = header(0, 1, 480);
    append(out, {'M', 'T', 'r', 'k', 0x00, 0x00, 0x00, 0x0D,
                 0x00, 0x90, 0x3C, 0x64,
                 0x83, 0x60, 0x80, 0x3C, 0x40,
                 0x00, 0xFF, 0x2F, 0x00});
    return out;
}

struct NoteSpec {
    std::uint32_t start;
    std::uint32_t length;
    int pitch;
    int velocity;
};

// Format 0 file from absolute note spans (sorted, monophonic unless the
// caller wants otherwise), with an optional tempo at tick 0.
inline Bytes smf_from_notes(const std::vector<NoteSpec>& notes, int ppq = 480, std::uint32_t us_per_quarter = 0) {
    struct Ev {
        std::uint32_t tick;
        int order;
        Bytes data;
    };
    std::vector<Ev> evs;
    if (us_per_quarter)
        evs.push_back({0, 0, {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(us_per_quarter >> 16),
                              static_cast<std::uint8_t>(us_per_quarter >> 8), static_cast<std::uint8_t>(us_per_quarter)}});
    for (const auto& n : notes) {
        evs.push_back({n.start, 2, {0x90, static_cast<std::uint8_t>(n.pitch), static_cast<std::uint8_t>(n.velocity)}});
        evs.push_back({n.start + n.length, 1, {0x80, static_cast<std::uint8_t>(n.pitch), 0x40}});
    }
    std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
        return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
    });
    Bytes body;
    std::uint32_t last = 0;
    for (const auto& e : evs) {
        const Bytes d = vlq(e.tick - last);
        body.insert(body.end(), d.begin(), d.end());
        body.insert(body.end(), e.data.begin(), e.data.end());
        last = e.tick;
    }
    append(body, {0x00, 0xFF, 0x2F, 0x00});
    Bytes out = header(0, 1, ppq);
    const Bytes t = track(body);
    out.insert(out.end(), t.begin(), t.end());
    return out;
}

// The printed excerpt: "Ah, vous dirai-je maman", four bars at 80 bpm.
inline const char* const kFigureText =
    "t_80 v_100 d_quarter_0 n_67 v_100 d_quarter_0 n_67 v_100 d_quarter_0 n_74 v_100 d_quarter_0 n_74 "
    "t_80 v_100 d_quarter_0 n_76 v_100 d_quarter_0 n_76 v_100 d_quarter_0 n_74 v_100 d_quarter_0 n_74 "
    "t_80 v_100 d_quarter_0 n_72 v_100 d_quarter_0 n_72 v_100 d_quarter_0 n_71 v_100 d_quarter_0 n_71 "
    "t_80 v_100 d_quarter_0 n_69 v_100 d_eighth_1 n_69 v_100 d_16th_0 n_71 v_100 d_half_0 n_67 t_80 .";

inline midicls::NotePiece figure_piece() {
    using namespace midicls;
    const int pitches[16] = {67, 67, 74, 74, 76, 76, 74, 74, 72, 72, 71, 71, 69, 69, 71, 67};
    NotePiece p;
    p.tempo_map = {{0, 80}};
    int at = 0;
    for (int i = 0; i < 16; ++i) {
        DurationClass d{DurationBase::quarter, 0};
        if (i == 13) d = {DurationBase::eighth, 1};
        if (i == 14) d = {DurationBase::sixteenth, 0};
        if (i == 15) d = {DurationBase::half, 0};
        p.notes.push_back({at, pitches[i], 100, d});
        at += d.length_units() / kUnitsPerStep;
    }
    return p;
}

// 30 tokens under the figure profile: three bars, eight notes.
inline midicls::NotePiece overfit_piece() {
    using namespace midicls;
    const int pitches[8] = {60, 62, 64, 65, 67, 65, 64, 60};
    NotePiece p;
    p.tempo_map = {{0, 80}};
    int at = 0;
    for (int i = 0; i < 8; ++i) {
        const DurationClass d = i < 4 ? DurationClass{DurationBase::quarter, 0} : DurationClass{DurationBase::half, 0};
        p.notes.push_back({at, pitches[i], 100, d});
        at += d.length_units() / kUnitsPerStep;
    }
    return p;
}

} // namespace fixtures

#include "midicls/rng.hpp"

namespace fixtures {

// Random valid piece that the profile can represent losslessly: terminal
// profiles get gapless melodies with tempo changes on note onsets, timestep
// profiles get rests and tempo changes on any sounding step.
inline midicls::NotePiece random_piece(midicls::Rng& rng, const midicls::EncoderProfile& profile) {
    using namespace midicls;
    const bool terminal = profile.dot_mode == DotMode::terminal;
    NotePiece p;
    p.beats_per_measure = rng.between(2, 6);
    p.tempo_map = {{0, 4 * rng.between(6, 40)}};
    const int count = rng.between(1, 40);
    int end_units = 0;
    int velocity = 4 * rng.between(1, 32);
    std::vector<int> onsets;
    for (int i = 0; i < count; ++i) {
        int onset = (end_units + kUnitsPerStep - 1) / kUnitsPerStep;
        if (!terminal) onset += rng.between(0, 3) == 0 ? rng.between(1, 20) : 0;
        const DurationClass d{static_cast<DurationBase>(rng.between(1, 6)), rng.between(0, 3)};
        if (rng.between(0, 3) == 0) velocity = 4 * rng.between(1, 32);
        p.notes.push_back({onset, rng.between(0, 127), velocity, d});
        onsets.push_back(onset);
        end_units = p.notes.back().end_units();
    }
    const int total_steps = (end_units + kUnitsPerStep - 1) / kUnitsPerStep;
    const int changes = rng.between(0, 4);
    for (int c = 0; c < changes; ++c) {
        const int at = terminal ? onsets[rng.below(onsets.size())] : rng.between(0, total_steps - 1);
        if (at == 0) continue;
        p.tempo_map.push_back({at, 4 * rng.between(6, 40)});
    }
    normalize_tempo_map(p.tempo_map);
    return p;
}

inline std::vector<midicls::EncoderProfile> all_profiles() {
    using namespace midicls;
    std::vector<EncoderProfile> out;
    for (auto dm : {DotMode::terminal, DotMode::timestep})
        for (auto te : {TempoEmission::per_measure, TempoEmission::on_change})
            for (auto ve : {VelocityEmission::per_note, VelocityEmission::on_change}) out.push_back({dm, te, ve});
    return out;
}

} // namespace fixtures

#include "midicls/mlstm.hpp"

#include <array>

namespace fixtures {

inline midicls::MlstmParams random_params(int V, int E, int H, std::uint64_t seed, double scale = 0.5) {
    midicls::MlstmParams p = midicls::MlstmParams::zeros(V, E, H);
    midicls::Rng rng(seed);
    for (auto& t : p.tensors)
        for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-scale, scale);
    return p;
}

// Relative norm error of the analytic gradient against central differences,
// one entry per tensor, on a random toy model and window.
inline std::array<double, midicls::kTensorCount> gradient_errors(std::uint64_t seed, int V = 7, int E = 3, int H = 5,
                                                                 int T = 4) {
    using namespace midicls;
    Rng rng(seed * 7 + 1);
    const MlstmParams p = random_params(V, E, H, seed);
    std::vector<int> in(T), targets(T);
    for (int t = 0; t < T; ++t) in[t] = static_cast<int>(rng.below(V)), targets[t] = static_cast<int>(rng.below(V));
    const auto loss = [&](const MlstmParams& q) { return cross_entropy(forward_lm(in, q).logits, targets); };
    const MlstmParams g = backward_lm(forward_lm(in, p), targets, p);
    std::array<double, kTensorCount> errors{};
    const double step = 1e-5;
    for (std::size_t k = 0; k < kTensorCount; ++k) {
        Eigen::MatrixXd numeric(p.tensors[k].rows(), p.tensors[k].cols());
        for (Eigen::Index i = 0; i < numeric.size(); ++i) {
            MlstmParams plus = p, minus = p;
            plus.tensors[k].data()[i] += step;
            minus.tensors[k].data()[i] -= step;
            numeric.data()[i] = (loss(plus) - loss(minus)) / (2 * step);
        }
        errors[k] = (g.tensors[k] - numeric).norm() / std::max(numeric.norm(), 1e-12);
    }
    return errors;
}

// Twenty copies of the 30-token overfit melody, as token ids.
inline std::vector<std::vector<int>> overfit_corpus(int copies = 20) {
    std::vector<int> ids = midicls::build_vocabulary().ids_of(midicls::encode(overfit_piece()));
    return std::vector<std::vector<int>>(static_cast<std::size_t>(copies), ids);
}

inline midicls::ModelConfig overfit_config() {
    midicls::ModelConfig cfg;
    cfg.hidden_dim = 64;
    cfg.epochs = 50;
    cfg.learning_rate = 3e-3;
    cfg.bptt_len = 16;
    return cfg;
}

} // namespace fixtures
