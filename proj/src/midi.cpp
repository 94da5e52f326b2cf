#include "midicls/midi.hpp"

#include "midicls/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>

namespace midicls {

namespace {

constexpr std::array<std::string_view, kDurationBaseCount> kBaseNames = {
    "breve", "whole", "half", "quarter", "eighth", "16th", "32nd"};

constexpr std::array<int, kDurationBaseCount> kBaseUnits = {512, 256, 128, 64, 32, 16, 8};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool at_end() const { return pos_ >= bytes_.size(); }

    void require(std::size_t n, const char* what) const {
        if (remaining() < n)
            throw ParseError(pos_, std::string("truncated ") + what);
    }

    std::uint8_t u8(const char* what = "data") {
        require(1, what);
        return bytes_[pos_++];
    }
    std::uint8_t peek() const {
        require(1, "data");
        return bytes_[pos_];
    }
    std::uint16_t u16be(const char* what) {
        require(2, what);
        const auto v = static_cast<std::uint16_t>((bytes_[pos_] << 8) | bytes_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32be(const char* what) {
        require(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
        pos_ += 4;
        return v;
    }
    std::string_view tag() {
        require(4, "chunk id");
        std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
        pos_ += 4;
        return s;
    }
    // Variable-length quantity, at most four bytes.
    std::uint32_t vlq() {
        const std::size_t start = pos_;
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint8_t b = u8("variable-length quantity");
            v = (v << 7) | (b & 0x7F);
            if ((b & 0x80) == 0) return v;
        }
        throw ParseError(start, "variable-length quantity longer than 4 bytes");
    }
    void skip(std::size_t n, const char* what) {
        require(n, what);
        pos_ += n;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

struct ParsedTrack {
    std::vector<TrackEvent> notes;
    std::vector<TrackEvent> tempos;
    std::uint64_t end_tick = 0;
};

ParsedTrack parse_track(ByteReader& in, std::size_t chunk_end) {
    ParsedTrack track;
    std::uint64_t tick = 0;
    std::uint8_t running = 0;
    while (in.pos() < chunk_end) {
        tick += in.vlq();
        std::uint8_t status = in.peek();
        if (status & 0x80) {
            in.u8();
        } else {
            if (running == 0) throw ParseError(in.pos(), "data byte without running status");
            status = running;
        }

        if (status == 0xFF) {
            running = 0;
            const std::uint8_t type = in.u8("meta type");
            const std::uint32_t len = in.vlq();
            const std::size_t data_at = in.pos();
            in.require(len, "meta event");
            if (type == 0x51) {
                if (len != 3) throw ParseError(data_at, "tempo meta event length must be 3");
                const std::uint32_t us = (static_cast<std::uint32_t>(in.u8()) << 16) |
                                         (static_cast<std::uint32_t>(in.u8()) << 8) | in.u8();
                if (us == 0) throw ParseError(data_at, "zero tempo");
                track.tempos.push_back({tick, EventKind::tempo, 0, 0, us});
            } else {
                in.skip(len, "meta event");
            }
            if (type == 0x2F) break;
        } else if (status == 0xF0 || status == 0xF7) {
            running = 0;
            in.skip(in.vlq(), "sysex event");
        } else if (status >= 0xF0) {
            throw ParseError(in.pos() - 1, "unexpected system message in track");
        } else {
            running = status;
            const std::uint8_t kind = status & 0xF0;
            if (kind == 0x80 || kind == 0x90) {
                const int pitch = in.u8("note event");
                const int velocity = in.u8("note event");
                if (pitch > 127 || velocity > 127)
                    throw ParseError(in.pos() - 2, "note data byte out of range");
                const bool on = kind == 0x90 && velocity > 0;
                track.notes.push_back(
                    {tick, on ? EventKind::note_on : EventKind::note_off, pitch, velocity, 0});
            } else if (kind == 0xC0 || kind == 0xD0) {
                in.skip(1, "channel event");
            } else {
                in.skip(2, "channel event");
            }
        }
    }
    if (in.pos() > chunk_end) throw ParseError(chunk_end, "event runs past end of track chunk");
    track.end_tick = tick;
    return track;
}

int event_rank(EventKind kind) {
    switch (kind) {
    case EventKind::note_off: return 0;
    case EventKind::tempo: return 1;
    case EventKind::note_on: return 2;
    }
    return 2;
}

void sort_events(std::vector<TrackEvent>& events) {
    std::stable_sort(events.begin(), events.end(), [](const TrackEvent& a, const TrackEvent& b) {
        if (a.tick != b.tick) return a.tick < b.tick;
        return event_rank(a.kind) < event_rank(b.kind);
    });
}

std::int64_t round_half_up_div(std::int64_t num, std::int64_t den) {
    return (2 * num + den) / (2 * den);
}

} // namespace

std::size_t RawTrack::note_event_count() const {
    return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [](const TrackEvent& e) {
        return e.kind != EventKind::tempo;
    }));
}

std::string_view duration_base_name(DurationBase base) {
    return kBaseNames[static_cast<std::size_t>(base)];
}

int duration_base_units(DurationBase base) { return kBaseUnits[static_cast<std::size_t>(base)]; }

int DurationClass::length_units() const {
    const int units = duration_base_units(base);
    return 2 * units - (units >> dots);
}

double DurationClass::length_steps() const {
    return static_cast<double>(length_units()) / kUnitsPerStep;
}

int NotePiece::end_units() const {
    int end = 0;
    for (const Note& n : notes) end = std::max(end, n.end_units());
    return end;
}

int snap_to_grid4(double value, int lo, int hi) {
    const int snapped = 4 * static_cast<int>(std::floor(value / 4.0 + 0.5));
    return std::clamp(snapped, lo, hi);
}

int snap_velocity(int velocity) { return snap_to_grid4(velocity, kMinVelocity, kMaxVelocity); }

int bpm_from_us_per_quarter(std::uint32_t us_per_quarter) {
    return snap_to_grid4(60'000'000.0 / us_per_quarter, kMinBpm, kMaxBpm);
}

std::string piece_violation(const NotePiece& piece) {
    if (piece.beats_per_measure < 1) return "beats_per_measure must be positive";
    if (piece.tempo_map.empty()) return "tempo map is empty";
    if (piece.tempo_map.front().onset_steps != 0) return "tempo map does not start at step 0";
    for (std::size_t i = 0; i < piece.tempo_map.size(); ++i) {
        const TempoEntry& t = piece.tempo_map[i];
        if (t.bpm < kMinBpm || t.bpm > kMaxBpm || t.bpm % 4 != 0)
            return "tempo " + std::to_string(t.bpm) + " off grid";
        if (i > 0 && t.onset_steps <= piece.tempo_map[i - 1].onset_steps)
            return "tempo map onsets not strictly increasing";
    }
    for (std::size_t i = 0; i < piece.notes.size(); ++i) {
        const Note& n = piece.notes[i];
        if (n.onset_steps < 0) return "negative onset";
        if (n.pitch < 0 || n.pitch > 127) return "pitch " + std::to_string(n.pitch) + " out of range";
        if (n.velocity < kMinVelocity || n.velocity > kMaxVelocity || n.velocity % 4 != 0)
            return "velocity " + std::to_string(n.velocity) + " off grid";
        if (n.duration.dots < 0 || n.duration.dots > kMaxDots) return "dot count out of range";
        if (i > 0 && piece.notes[i - 1].end_units() > n.onset_steps * kUnitsPerStep)
            return "notes overlap or are out of order at index " + std::to_string(i);
    }
    return {};
}

bool is_valid_piece(const NotePiece& piece) { return piece_violation(piece).empty(); }

void normalize_tempo_map(std::vector<TempoEntry>& tempo_map) {
    std::stable_sort(tempo_map.begin(), tempo_map.end(),
                     [](const TempoEntry& a, const TempoEntry& b) { return a.onset_steps < b.onset_steps; });
    std::vector<TempoEntry> out;
    for (const TempoEntry& t : tempo_map) {
        if (!out.empty() && out.back().onset_steps == t.onset_steps) out.pop_back();
        if (!out.empty() && out.back().bpm == t.bpm) continue;
        out.push_back(t);
    }
    tempo_map = std::move(out);
}

RawTrack parse_smf(std::span<const std::uint8_t> bytes) {
    ByteReader in(bytes);
    if (in.tag() != "MThd") throw ParseError(0, "missing MThd header");
    const std::uint32_t header_len = in.u32be("header length");
    if (header_len != 6) throw ParseError(4, "MThd length " + std::to_string(header_len) + ", expected 6");
    const std::uint16_t format = in.u16be("format");
    const std::uint16_t declared_tracks = in.u16be("track count");
    const std::uint16_t division = in.u16be("division");
    if (format > 1) throw ParseError(8, "unsupported SMF format " + std::to_string(format));
    if (division & 0x8000) throw ParseError(12, "SMPTE time division is not supported");
    if (division == 0) throw ParseError(12, "zero ticks per quarter note");

    RawTrack out;
    out.ppq = division;
    std::vector<ParsedTrack> tracks;
    while (!in.at_end()) {
        const std::size_t chunk_at = in.pos();
        const std::string_view id = in.tag();
        const std::uint32_t len = in.u32be("chunk length");
        if (in.remaining() < len) throw ParseError(chunk_at, "chunk length exceeds file size");
        if (id == "MTrk") {
            tracks.push_back(parse_track(in, in.pos() + len));
            // Skip padding after an early end-of-track.
            in.skip(chunk_at + 8 + len - in.pos(), "track chunk");
        } else {
            in.skip(len, "unknown chunk");
        }
    }
    if (tracks.size() != declared_tracks)
        out.warnings.push_back("header declares " + std::to_string(declared_tracks) + " tracks, found " +
                               std::to_string(tracks.size()));

    std::optional<std::size_t> melodic;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (tracks[i].notes.empty()) continue;
        if (!melodic) {
            melodic = i;
        } else {
            out.warnings.push_back("ignoring note events in track " + std::to_string(i));
        }
    }
    if (!melodic) throw EmptyTrackError("no note events in file");

    std::vector<TrackEvent> merged;
    for (const ParsedTrack& t : tracks) merged.insert(merged.end(), t.tempos.begin(), t.tempos.end());
    merged.insert(merged.end(), tracks[*melodic].notes.begin(), tracks[*melodic].notes.end());
    sort_events(merged);

    std::vector<TrackEvent> paired;
    std::optional<TrackEvent> sounding;
    for (const TrackEvent& e : merged) {
        if (e.kind == EventKind::tempo) {
            paired.push_back(e);
        } else if (e.kind == EventKind::note_on) {
            if (sounding) throw PolyphonyError(e.tick);
            sounding = e;
        } else if (sounding && sounding->pitch == e.pitch) {
            if (e.tick > sounding->tick) {
                paired.push_back(*sounding);
                paired.push_back(e);
            } else {
                out.warnings.push_back("dropped zero-length note at tick " + std::to_string(e.tick));
            }
            sounding.reset();
        }
    }
    if (sounding) {
        const std::uint64_t end_tick = tracks[*melodic].end_tick;
        if (end_tick > sounding->tick) {
            paired.push_back(*sounding);
            paired.push_back({end_tick, EventKind::note_off, sounding->pitch, 0, 0});
            out.warnings.push_back("closed unterminated note at end of track");
        } else {
            out.warnings.push_back("dropped unterminated note at end of track");
        }
    }
    sort_events(paired);
    out.events = std::move(paired);
    if (out.note_event_count() == 0) throw EmptyTrackError("no complete notes in file");
    return out;
}

RawTrack read_smf_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IOError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    return parse_smf(bytes);
}

DurationClass quantize_duration(std::uint64_t ticks, int ppq) {
    // A class of u units lasts u * ppq / 64 ticks; compare in 64ths of a tick
    // to stay exact.
    const auto target = static_cast<__int128>(ticks) * 64;
    DurationClass best;
    __int128 best_err = -1;
    // Fewer dots first, longer base first; strict improvement keeps the
    // earlier candidate on ties.
    for (int dots = 0; dots <= kMaxDots; ++dots) {
        for (int b = 0; b < kDurationBaseCount; ++b) {
            const DurationClass cand{static_cast<DurationBase>(b), dots};
            const __int128 len = static_cast<__int128>(cand.length_units()) * ppq;
            const __int128 err = len > target ? len - target : target - len;
            if (best_err < 0 || err < best_err) {
                best_err = err;
                best = cand;
            }
        }
    }
    return best;
}

NotePiece build_piece(const RawTrack& track, int beats_per_measure) {
    if (track.ppq <= 0) throw DataError("ppq must be positive");
    NotePiece piece;
    piece.beats_per_measure = beats_per_measure;
    piece.tempo_map.clear();

    const auto to_step = [&](std::uint64_t tick) {
        return static_cast<int>(round_half_up_div(static_cast<std::int64_t>(tick) * 4, track.ppq));
    };

    std::vector<std::uint64_t> onset_ticks;
    std::optional<TrackEvent> open;
    for (const TrackEvent& e : track.events) {
        switch (e.kind) {
        case EventKind::tempo:
            piece.tempo_map.push_back({to_step(e.tick), bpm_from_us_per_quarter(e.us_per_quarter)});
            break;
        case EventKind::note_on:
            if (open) throw PolyphonyError(e.tick);
            open = e;
            break;
        case EventKind::note_off:
            if (!open || open->pitch != e.pitch || e.tick <= open->tick)
                throw DataError("unmatched note-off at tick " + std::to_string(e.tick));
            piece.notes.push_back({to_step(open->tick), open->pitch, snap_velocity(open->velocity),
                                   quantize_duration(e.tick - open->tick, track.ppq)});
            onset_ticks.push_back(open->tick);
            open.reset();
            break;
        }
    }
    if (open) throw DataError("note-on without note-off at tick " + std::to_string(open->tick));

    for (std::size_t i = 1; i < piece.notes.size(); ++i) {
        if (piece.notes[i - 1].end_units() > piece.notes[i].onset_steps * kUnitsPerStep)
            throw PolyphonyError(onset_ticks[i]);
    }

    if (piece.tempo_map.empty() || piece.tempo_map.front().onset_steps > 0)
        piece.tempo_map.insert(piece.tempo_map.begin(), TempoEntry{0, kDefaultBpm});
    normalize_tempo_map(piece.tempo_map);
    return piece;
}

} // namespace midicls
