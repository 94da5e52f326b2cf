#pragma once

#include "midicls/midi.hpp"

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace midicls {

struct AugmentSpec {
    std::vector<int> transpositions{4, -4};  // semitones; a major third each way
    std::vector<double> tempo_factors{1.1, 0.9};

    // Throws DataError when an offset leaves [-127, 127] or a factor is not positive.
    void validate() const;
};

struct Skipped {
    std::string reason;
};

using Transformed = std::variant<NotePiece, Skipped>;

// All-or-nothing: a copy with any pitch outside [0, 127] is Skipped.
Transformed transpose(const NotePiece& piece, int semitones);

// Scales every tempo entry, snapping back onto the bpm grid.
NotePiece tempo_shift(const NotePiece& piece, double factor);

std::string transpose_tag(int semitones);
std::string tempo_tag(double factor);

struct AugmentedPiece {
    NotePiece piece;
    std::size_t source = 0;  // index into the input corpus
    std::string origin;      // "original", "transpose(+4)", "tempo(1.1)"
};

struct SkipRecord {
    std::size_t source = 0;
    std::string origin;
    std::string reason;
};

struct AugmentResult {
    std::vector<AugmentedPiece> pieces;
    std::vector<SkipRecord> skipped;
};

// Originals first (input order), then each transform in spec order applied
// across the whole input.
AugmentResult augment_corpus(const std::vector<NotePiece>& pieces, const AugmentSpec& spec);

} // namespace midicls
