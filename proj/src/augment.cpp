#include "midicls/augment.hpp"

#include "midicls/errors.hpp"

#include <cmath>
#include <cstdio>

namespace midicls {

void AugmentSpec::validate() const {
    for (int k : transpositions) {
        if (k < -127 || k > 127) throw DataError("transposition " + std::to_string(k) + " outside [-127, 127]");
    }
    for (double f : tempo_factors) {
        if (!(f > 0.0) || !std::isfinite(f)) throw DataError("tempo factor must be positive");
    }
}

Transformed transpose(const NotePiece& piece, int semitones) {
    NotePiece out = piece;
    for (Note& n : out.notes) {
        n.pitch += semitones;
        if (n.pitch < 0 || n.pitch > 127) {
            return Skipped{"pitch " + std::to_string(n.pitch - semitones) + " shifted by " +
                           std::to_string(semitones) + " leaves [0, 127]"};
        }
    }
    return out;
}

NotePiece tempo_shift(const NotePiece& piece, double factor) {
    NotePiece out = piece;
    for (TempoEntry& t : out.tempo_map) t.bpm = snap_to_grid4(t.bpm * factor, kMinBpm, kMaxBpm);
    normalize_tempo_map(out.tempo_map);
    return out;
}

std::string transpose_tag(int semitones) {
    return "transpose(" + std::string(semitones >= 0 ? "+" : "") + std::to_string(semitones) + ")";
}

std::string tempo_tag(double factor) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "tempo(%g)", factor);
    return buf;
}

AugmentResult augment_corpus(const std::vector<NotePiece>& pieces, const AugmentSpec& spec) {
    spec.validate();
    AugmentResult result;
    for (std::size_t i = 0; i < pieces.size(); ++i) result.pieces.push_back({pieces[i], i, "original"});

    for (int k : spec.transpositions) {
        const std::string tag = transpose_tag(k);
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            Transformed t = transpose(pieces[i], k);
            if (auto* p = std::get_if<NotePiece>(&t))
                result.pieces.push_back({std::move(*p), i, tag});
            else
                result.skipped.push_back({i, tag, std::get<Skipped>(t).reason});
        }
    }
    for (double f : spec.tempo_factors) {
        const std::string tag = tempo_tag(f);
        for (std::size_t i = 0; i < pieces.size(); ++i) result.pieces.push_back({tempo_shift(pieces[i], f), i, tag});
    }
    return result;
}

} // namespace midicls
