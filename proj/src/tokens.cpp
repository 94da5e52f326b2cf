#include "midicls/tokens.hpp"

#include "midicls/errors.hpp"

#include <algorithm>
#include <charconv>
#include <optional>

namespace midicls {

namespace {

constexpr int kNoteBase = 0;
constexpr int kDurationIdBase = 128;
constexpr int kVelocityIdBase = kDurationIdBase + kDurationBaseCount * (kMaxDots + 1);
constexpr int kTempoIdBase = kVelocityIdBase + 32;
constexpr int kStepEndId = kTempoIdBase + 35;
constexpr int kPieceEndId = kStepEndId + 1;
static_assert(kPieceEndId + 1 == kVocabSize);

bool in_grid4(int v, int lo, int hi) { return v >= lo && v <= hi && v % 4 == 0; }

bool token_on_grid(const Token& t) {
    switch (t.kind) {
    case TokenKind::note: return t.value >= 0 && t.value <= 127;
    case TokenKind::duration:
        return t.value >= 0 && t.value < kDurationBaseCount && t.dots >= 0 && t.dots <= kMaxDots;
    case TokenKind::velocity: return in_grid4(t.value, kMinVelocity, kMaxVelocity);
    case TokenKind::tempo: return in_grid4(t.value, kMinBpm, kMaxBpm);
    case TokenKind::step_end:
    case TokenKind::piece_end: return true;
    }
    return false;
}

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<Token> parse_lexeme(std::string_view lexeme) {
    if (lexeme == ".") return Token::step_end();
    if (lexeme == "\n") return Token::piece_end();
    if (lexeme.size() < 3 || lexeme[1] != '_') return std::nullopt;
    const std::string_view body = lexeme.substr(2);
    switch (lexeme[0]) {
    case 'n':
        if (auto v = parse_int(body)) return Token::note(*v);
        return std::nullopt;
    case 'v':
        if (auto v = parse_int(body)) return Token::velocity(*v);
        return std::nullopt;
    case 't':
        if (auto v = parse_int(body)) return Token::tempo(*v);
        return std::nullopt;
    case 'd': {
        const auto sep = body.rfind('_');
        if (sep == std::string_view::npos) return std::nullopt;
        const std::string_view name = body.substr(0, sep);
        const auto dots = parse_int(body.substr(sep + 1));
        if (!dots) return std::nullopt;
        for (int b = 0; b < kDurationBaseCount; ++b) {
            if (duration_base_name(static_cast<DurationBase>(b)) == name)
                return Token{TokenKind::duration, b, *dots};
        }
        return std::nullopt;
    }
    default: return std::nullopt;
    }
}

int ceil_steps(int units) { return (units + kUnitsPerStep - 1) / kUnitsPerStep; }

int tempo_at(const std::vector<TempoEntry>& map, int step) {
    int bpm = map.front().bpm;
    for (const TempoEntry& t : map) {
        if (t.onset_steps > step) break;
        bpm = t.bpm;
    }
    return bpm;
}

// Positions (in steps) that get a tempo token, strictly below `limit_units`
// or up to it inclusive.
std::vector<int> tempo_positions(const NotePiece& piece, const EncoderProfile& profile, int limit_units,
                                 bool inclusive) {
    const auto within = [&](int step) {
        const int units = step * kUnitsPerStep;
        return inclusive ? units <= limit_units : units < limit_units;
    };
    std::vector<int> steps;
    if (profile.tempo_emission == TempoEmission::per_measure) {
        for (int b = 0; within(b * piece.steps_per_measure()); ++b) steps.push_back(b * piece.steps_per_measure());
    }
    for (const TempoEntry& t : piece.tempo_map) {
        if (within(t.onset_steps)) steps.push_back(t.onset_steps);
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    return steps;
}

class NoteEmitter {
public:
    NoteEmitter(const EncoderProfile& profile, TokenSeq& out) : profile_(profile), out_(out) {}

    void emit(const Note& n) {
        if (profile_.velocity_emission == VelocityEmission::per_note || !last_velocity_ ||
            *last_velocity_ != n.velocity) {
            out_.push_back(Token::velocity(n.velocity));
        }
        last_velocity_ = n.velocity;
        out_.push_back(Token::duration(n.duration));
        out_.push_back(Token::note(n.pitch));
    }

private:
    const EncoderProfile& profile_;
    TokenSeq& out_;
    std::optional<int> last_velocity_;
};

} // namespace

std::string render(const Token& token) {
    switch (token.kind) {
    case TokenKind::note: return "n_" + std::to_string(token.value);
    case TokenKind::duration:
        return "d_" + std::string(duration_base_name(static_cast<DurationBase>(token.value))) + "_" +
               std::to_string(token.dots);
    case TokenKind::velocity: return "v_" + std::to_string(token.value);
    case TokenKind::tempo: return "t_" + std::to_string(token.value);
    case TokenKind::step_end: return ".";
    case TokenKind::piece_end: return "\n";
    }
    return {};
}

Token parse_token(std::string_view lexeme) {
    const auto token = parse_lexeme(lexeme);
    // Rejects off-grid payloads and non-canonical spellings such as "n_067".
    if (!token || !token_on_grid(*token) || render(*token) != lexeme)
        throw UnknownTokenError("'" + std::string(lexeme) + "'");
    return *token;
}

std::string render_text(const TokenSeq& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0 && tokens[i - 1].kind != TokenKind::piece_end) out += ' ';
        out += render(tokens[i]);
    }
    return out;
}

TokenSeq tokenize_text(std::string_view text) {
    TokenSeq out;
    std::size_t start = 0;
    const auto flush = [&](std::size_t end) {
        if (end > start) {
            const std::string_view lexeme = text.substr(start, end - start);
            const auto token = parse_lexeme(lexeme);
            if (!token || !token_on_grid(*token) || render(*token) != lexeme)
                throw UnknownTokenError("'" + std::string(lexeme) + "' at offset " + std::to_string(start));
            out.push_back(*token);
        }
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            flush(i);
            if (c == '\n') out.push_back(Token::piece_end());
            start = i + 1;
        }
    }
    flush(text.size());
    return out;
}

Vocabulary::Vocabulary() {
    tokens_.reserve(kVocabSize);
    for (int p = 0; p <= 127; ++p) tokens_.push_back(Token::note(p));
    for (int b = 0; b < kDurationBaseCount; ++b)
        for (int d = 0; d <= kMaxDots; ++d) tokens_.push_back(Token{TokenKind::duration, b, d});
    for (int v = kMinVelocity; v <= kMaxVelocity; v += 4) tokens_.push_back(Token::velocity(v));
    for (int t = kMinBpm; t <= kMaxBpm; t += 4) tokens_.push_back(Token::tempo(t));
    tokens_.push_back(Token::step_end());
    tokens_.push_back(Token::piece_end());
}

int Vocabulary::id_of(const Token& t) const {
    if (!token_on_grid(t)) throw UnknownTokenError("token off grid: " + render(t));
    switch (t.kind) {
    case TokenKind::note: return kNoteBase + t.value;
    case TokenKind::duration: return kDurationIdBase + t.value * (kMaxDots + 1) + t.dots;
    case TokenKind::velocity: return kVelocityIdBase + t.value / 4 - 1;
    case TokenKind::tempo: return kTempoIdBase + (t.value - kMinBpm) / 4;
    case TokenKind::step_end: return kStepEndId;
    case TokenKind::piece_end: return kPieceEndId;
    }
    return kPieceEndId;
}

const Token& Vocabulary::token_at(int id) const {
    if (id < 0 || id >= size()) throw UnknownTokenError("token id " + std::to_string(id));
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::ids_of(const TokenSeq& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const Token& t : tokens) ids.push_back(id_of(t));
    return ids;
}

TokenSeq Vocabulary::tokens_of(const std::vector<int>& ids) const {
    TokenSeq out;
    out.reserve(ids.size());
    for (int id : ids) out.push_back(token_at(id));
    return out;
}

const Vocabulary& build_vocabulary() {
    static const Vocabulary vocab;
    return vocab;
}

std::string profile_name(const EncoderProfile& profile) {
    if (profile == EncoderProfile::figure()) return "figure";
    if (profile == EncoderProfile::timestep()) return "timestep";
    std::string name = profile.dot_mode == DotMode::terminal ? "terminal" : "timestep";
    name += profile.tempo_emission == TempoEmission::per_measure ? "/tempo-per-measure" : "/tempo-on-change";
    name += profile.velocity_emission == VelocityEmission::per_note ? "/velocity-per-note" : "/velocity-on-change";
    return name;
}

EncoderProfile profile_from_name(std::string_view name) {
    if (name == "figure") return EncoderProfile::figure();
    if (name == "timestep") return EncoderProfile::timestep();
    throw DataError("unknown encoder profile '" + std::string(name) + "'");
}

TokenSeq encode(const NotePiece& piece, const EncoderProfile& profile) {
    TokenSeq out;
    if (piece.notes.empty()) {
        out.push_back(Token::piece_end());
        return out;
    }
    NoteEmitter notes(profile, out);
    const int end_units = piece.end_units();

    if (profile.dot_mode == DotMode::terminal) {
        const std::vector<int> tempos = tempo_positions(piece, profile, end_units, true);
        std::size_t ti = 0;
        for (const Note& n : piece.notes) {
            for (; ti < tempos.size() && tempos[ti] <= n.onset_steps; ++ti)
                out.push_back(Token::tempo(tempo_at(piece.tempo_map, tempos[ti])));
            notes.emit(n);
        }
        for (; ti < tempos.size(); ++ti) out.push_back(Token::tempo(tempo_at(piece.tempo_map, tempos[ti])));
        out.push_back(Token::step_end());
    } else {
        const int total_steps = ceil_steps(end_units);
        const std::vector<int> tempos = tempo_positions(piece, profile, total_steps * kUnitsPerStep, false);
        std::size_t ti = 0;
        std::size_t ni = 0;
        for (int step = 0; step < total_steps; ++step) {
            for (; ti < tempos.size() && tempos[ti] == step; ++ti)
                out.push_back(Token::tempo(tempo_at(piece.tempo_map, step)));
            for (; ni < piece.notes.size() && piece.notes[ni].onset_steps == step; ++ni) notes.emit(piece.notes[ni]);
            out.push_back(Token::step_end());
        }
    }
    out.push_back(Token::piece_end());
    return out;
}

NotePiece decode(const TokenSeq& tokens, const EncoderProfile& profile, int beats_per_measure) {
    NotePiece piece;
    piece.beats_per_measure = beats_per_measure;
    piece.tempo_map.clear();

    const bool terminal = profile.dot_mode == DotMode::terminal;
    int cursor_units = 0;
    int step = 0;
    std::optional<int> velocity;
    std::optional<DurationClass> duration;
    const auto position = [&] { return terminal ? ceil_steps(cursor_units) : step; };

    bool terminated = false;
    std::size_t i = 0;
    for (; i < tokens.size() && !terminated; ++i) {
        const Token& t = tokens[i];
        switch (t.kind) {
        case TokenKind::tempo: {
            const int at = position();
            if (piece.tempo_map.empty() && at > 0) piece.tempo_map.push_back({0, kDefaultBpm});
            if (!piece.tempo_map.empty() && piece.tempo_map.back().bpm == t.value) break;
            if (!piece.tempo_map.empty() && piece.tempo_map.back().onset_steps == at) {
                piece.tempo_map.back().bpm = t.value;
                const std::size_t n = piece.tempo_map.size();
                if (n > 1 && piece.tempo_map[n - 2].bpm == t.value) piece.tempo_map.pop_back();
            } else
                piece.tempo_map.push_back({at, t.value});
            break;
        }
        case TokenKind::velocity: velocity = t.value; break;
        case TokenKind::duration: duration = t.as_duration(); break;
        case TokenKind::note: {
            if (!duration) throw DanglingNoteError("note " + render(t) + " at token " + std::to_string(i) + " has no duration");
            if (!velocity) throw DanglingNoteError("note " + render(t) + " at token " + std::to_string(i) + " has no velocity");
            const Note n{position(), t.value, *velocity, *duration};
            piece.notes.push_back(n);
            if (terminal) cursor_units = n.end_units();
            duration.reset();
            break;
        }
        case TokenKind::step_end:
            if (!terminal) ++step;
            break;
        case TokenKind::piece_end: terminated = true; break;
        }
    }
    if (!terminated) throw UnterminatedError("token sequence has no piece end");
    if (i != tokens.size()) throw DataError("tokens follow the piece end");
    if (piece.tempo_map.empty()) piece.tempo_map.push_back({0, kDefaultBpm});
    if (const std::string why = piece_violation(piece); !why.empty()) throw DataError("decoded piece invalid: " + why);
    return piece;
}

std::vector<TokenSeq> split_pieces(const TokenSeq& tokens) {
    std::vector<TokenSeq> pieces;
    TokenSeq current;
    for (const Token& t : tokens) {
        current.push_back(t);
        if (t.kind == TokenKind::piece_end) {
            pieces.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) pieces.push_back(std::move(current));
    return pieces;
}

} // namespace midicls
