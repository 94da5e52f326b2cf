#include "midicls/errors.hpp"
#include "midicls/evalkit.hpp"
#include "midicls/rng.hpp"

#include <algorithm>
#include <array>

namespace midicls {

namespace {

constexpr int kPieceSteps = kSyntheticMeasures * 16;

DurationClass duration_of_steps(int steps) {
    switch (steps) {
    case 1: return {DurationBase::sixteenth, 0};
    case 2: return {DurationBase::eighth, 0};
    case 3: return {DurationBase::eighth, 1};
    case 4: return {DurationBase::quarter, 0};
    case 6: return {DurationBase::quarter, 1};
    case 8: return {DurationBase::half, 0};
    case 12: return {DurationBase::half, 1};
    case 16: return {DurationBase::whole, 0};
    default: throw DataError("no plain duration for " + std::to_string(steps) + " steps");
    }
}

// Shared context so the two classes differ only in pitch and rhythm.
NotePiece blank_piece(Rng& rng) {
    NotePiece piece;
    piece.tempo_map = {{0, 4 * rng.between(17, 29)}};  // 68..116 bpm
    return piece;
}

int piece_velocity(Rng& rng) { return 4 * rng.between(18, 25); }

// Rhythm cells in 16th steps; dotted cells dominate.
constexpr std::array<std::array<int, 2>, 6> kCells = {{{3, 1}, {6, 2}, {4, 0}, {2, 2}, {12, 4}, {8, 0}}};
constexpr std::array<int, 6> kCellWeights = {5, 4, 2, 2, 1, 1};

// Scale-degree moves and their weights for the melodic walk.
constexpr std::array<int, 7> kMoves = {-3, -2, -1, 0, 1, 2, 3};
constexpr std::array<int, 7> kMoveWeights = {1, 3, 6, 1, 6, 3, 1};

template <std::size_t N>
std::size_t weighted(Rng& rng, const std::array<int, N>& weights) {
    int total = 0;
    for (int w : weights) total += w;
    int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(total)));
    for (std::size_t i = 0; i < N; ++i) {
        if (r < weights[i]) return i;
        r -= weights[i];
    }
    return N - 1;
}

NotePiece composer_piece(Rng& rng) {
    static constexpr std::array<int, 7> major = {0, 2, 4, 5, 7, 9, 11};
    NotePiece piece = blank_piece(rng);
    const int velocity = piece_velocity(rng);
    const int tonic = 60 + rng.between(-5, 6);
    int degree = 7 + static_cast<int>(rng.below(5));  // within the middle octave
    const auto pitch_of = [&](int d) { return tonic - 12 + 12 * (d / 7) + major[static_cast<std::size_t>(d % 7)]; };

    int step = 0;
    while (step < kPieceSteps) {
        std::array<int, 2> cell = kCells[weighted(rng, kCellWeights)];
        const int remaining = kPieceSteps - step;
        if (cell[0] + cell[1] > remaining) cell = remaining >= 4 ? std::array<int, 2>{4, 0} : std::array<int, 2>{remaining, 0};
        for (int len : cell) {
            if (len == 0) continue;
            degree = std::clamp(degree + kMoves[weighted(rng, kMoveWeights)], 0, 20);
            piece.notes.push_back({step, pitch_of(degree), velocity, duration_of_steps(len)});
            step += len;
        }
    }
    return piece;
}

NotePiece ai_piece(Rng& rng) {
    static constexpr std::array<int, 4> lengths = {1, 2, 4, 8};
    NotePiece piece = blank_piece(rng);
    const int velocity = piece_velocity(rng);
    int step = 0;
    while (step < kPieceSteps) {
        int len = lengths[rng.below(lengths.size())];
        while (len > kPieceSteps - step) len /= 2;
        piece.notes.push_back({step, rng.between(48, 84), velocity, duration_of_steps(len)});
        step += len;
    }
    return piece;
}

} // namespace

SyntheticCorpus gen_synthetic(int n_per_class, std::uint64_t seed, const EncoderProfile& profile) {
    if (n_per_class < 1) throw DataError("n_per_class must be at least 1");
    Rng rng(seed);
    SyntheticCorpus corpus;
    for (int i = 0; i < n_per_class; ++i) {
        corpus.composer.push_back(composer_piece(rng));
        corpus.ai.push_back(ai_piece(rng));
        corpus.composer_tokens.push_back(encode(corpus.composer.back(), profile));
        corpus.ai_tokens.push_back(encode(corpus.ai.back(), profile));
    }
    return corpus;
}

} // namespace midicls
