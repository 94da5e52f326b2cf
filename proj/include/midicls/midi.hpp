#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace midicls {

enum class EventKind : std::uint8_t { note_off, note_on, tempo };

struct TrackEvent {
    std::uint64_t tick = 0;
    EventKind kind = EventKind::note_on;
    int pitch = 0;
    int velocity = 0;
    std::uint32_t us_per_quarter = 0; // tempo events only

    bool operator==(const TrackEvent&) const = default;
};

// Merged note/tempo stream of one melodic track. Events are tick-ordered;
// every note-on is closed by a note-off at a strictly later tick and no two
// notes sound at once.
struct RawTrack {
    int ppq = 480;
    std::vector<TrackEvent> events;
    std::vector<std::string> warnings;

    std::size_t note_event_count() const;
};

enum class DurationBase : std::uint8_t { breve, whole, half, quarter, eighth, sixteenth, thirty_second };

inline constexpr int kDurationBaseCount = 7;
inline constexpr int kMaxDots = 3;

// Fractions of a 16th-note step are counted in 1/16 units so that every
// dotted 32nd is an integer.
inline constexpr int kUnitsPerStep = 16;

struct DurationClass {
    DurationBase base = DurationBase::quarter;
    int dots = 0;

    // base_steps * (2 - 2^-dots), in 16th-note steps.
    double length_steps() const;
    // Same length in 1/16-step units (always an integer).
    int length_units() const;

    bool operator==(const DurationClass&) const = default;
};

std::string_view duration_base_name(DurationBase base);
// Units of the undotted base: breve 512 ... 32nd 8.
int duration_base_units(DurationBase base);

struct Note {
    int onset_steps = 0;
    int pitch = 60;
    int velocity = 100;
    DurationClass duration;

    int end_units() const { return onset_steps * kUnitsPerStep + duration.length_units(); }
    bool operator==(const Note&) const = default;
};

struct TempoEntry {
    int onset_steps = 0;
    int bpm = 120;
    bool operator==(const TempoEntry&) const = default;
};

struct NotePiece {
    std::vector<Note> notes;
    std::vector<TempoEntry> tempo_map{TempoEntry{}};
    int beats_per_measure = 4;

    int steps_per_measure() const { return beats_per_measure * 4; }
    // End of the last sounding note, in 1/16-step units (0 when empty).
    int end_units() const;
    bool operator==(const NotePiece&) const = default;
};

// Grid limits for the token language.
inline constexpr int kMinVelocity = 4;
inline constexpr int kMaxVelocity = 128;
inline constexpr int kMinBpm = 24;
inline constexpr int kMaxBpm = 160;
inline constexpr int kDefaultBpm = 120;

// Nearest multiple of 4 (halves round up), clamped to [lo, hi].
int snap_to_grid4(double value, int lo, int hi);
int snap_velocity(int velocity);
int bpm_from_us_per_quarter(std::uint32_t us_per_quarter);

// Empty string when valid, otherwise a description of the first violation.
std::string piece_violation(const NotePiece& piece);
bool is_valid_piece(const NotePiece& piece);

// Drops tempo entries that repeat the previous bpm or share an onset with a
// later entry (the later one wins).
void normalize_tempo_map(std::vector<TempoEntry>& tempo_map);

RawTrack parse_smf(std::span<const std::uint8_t> bytes);
RawTrack read_smf_file(const std::string& path);

DurationClass quantize_duration(std::uint64_t ticks, int ppq);

NotePiece build_piece(const RawTrack& track, int beats_per_measure = 4);

} // namespace midicls
