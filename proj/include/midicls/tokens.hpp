#pragma once

#include "midicls/midi.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace midicls {

enum class TokenKind : std::uint8_t { note, duration, velocity, tempo, step_end, piece_end };

// One symbol of the melody language. `value` carries the pitch, velocity,
// bpm or duration base; `dots` is used by durations only.
struct Token {
    TokenKind kind = TokenKind::piece_end;
    int value = 0;
    int dots = 0;

    static Token note(int pitch) { return {TokenKind::note, pitch, 0}; }
    static Token duration(DurationClass d) { return {TokenKind::duration, static_cast<int>(d.base), d.dots}; }
    static Token velocity(int v) { return {TokenKind::velocity, v, 0}; }
    static Token tempo(int bpm) { return {TokenKind::tempo, bpm, 0}; }
    static Token step_end() { return {TokenKind::step_end, 0, 0}; }
    static Token piece_end() { return {TokenKind::piece_end, 0, 0}; }

    DurationClass as_duration() const { return {static_cast<DurationBase>(value), dots}; }

    bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

// "n_67", "d_eighth_1", "v_100", "t_80", "." or "\n".
std::string render(const Token& token);
// Inverse of render for a single lexeme; throws UnknownTokenError.
Token parse_token(std::string_view lexeme);

// Tokens joined by single spaces; no separator follows a piece end, so each
// piece occupies exactly one line.
std::string render_text(const TokenSeq& tokens);
TokenSeq tokenize_text(std::string_view text);

inline constexpr int kVocabSize = 128 + kDurationBaseCount * (kMaxDots + 1) + 32 + 35 + 2;

class Vocabulary {
public:
    Vocabulary();

    int size() const { return static_cast<int>(tokens_.size()); }
    // Throws UnknownTokenError for tokens outside the grids.
    int id_of(const Token& token) const;
    const Token& token_at(int id) const;

    std::vector<int> ids_of(const TokenSeq& tokens) const;
    TokenSeq tokens_of(const std::vector<int>& ids) const;

private:
    std::vector<Token> tokens_;
};

// Shared immutable instance.
const Vocabulary& build_vocabulary();

enum class DotMode : std::uint8_t { timestep, terminal };
enum class TempoEmission : std::uint8_t { per_measure, on_change };
enum class VelocityEmission : std::uint8_t { per_note, on_change };

struct EncoderProfile {
    DotMode dot_mode = DotMode::terminal;
    TempoEmission tempo_emission = TempoEmission::per_measure;
    VelocityEmission velocity_emission = VelocityEmission::per_note;

    // Reproduces the printed excerpt: tempo per measure, velocity per note,
    // one "." before the piece end.
    static EncoderProfile figure() { return {}; }
    // One "." per elapsed 16th-note step.
    static EncoderProfile timestep() { return {DotMode::timestep, TempoEmission::per_measure, VelocityEmission::per_note}; }

    bool operator==(const EncoderProfile&) const = default;
};

std::string profile_name(const EncoderProfile& profile);
// "figure" or "timestep"; throws DataError otherwise.
EncoderProfile profile_from_name(std::string_view name);

TokenSeq encode(const NotePiece& piece, const EncoderProfile& profile = EncoderProfile::figure());

// Terminal-dot sequences carry no rests, so onsets are rebuilt by laying
// notes end to end (rounded up to the next step).
NotePiece decode(const TokenSeq& tokens, const EncoderProfile& profile = EncoderProfile::figure(),
                 int beats_per_measure = 4);

// Splits a multi-piece stream after every piece end. A trailing fragment
// without a piece end is returned as its own element.
std::vector<TokenSeq> split_pieces(const TokenSeq& tokens);

} // namespace midicls
