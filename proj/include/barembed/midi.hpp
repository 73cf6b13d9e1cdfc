#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "barembed/fraction.hpp"

namespace barembed::midi {

enum class EventKind : std::uint8_t {
    note_on,
    note_off,
    program_change,
    tempo,          // microseconds per quarter note in `value`
    time_signature, // numerator in `value`, denominator (power of two) in `aux`
};

struct RawEvent {
    std::int64_t tick = 0;
    EventKind kind = EventKind::note_on;
    std::uint8_t channel = 0;
    std::uint8_t data1 = 0; // pitch or program
    std::uint8_t data2 = 0; // velocity
    std::int64_t value = 0;
    std::int64_t aux = 0;
};

struct RawTrack {
    std::vector<RawEvent> events; // non-decreasing ticks
    std::int64_t end_tick = 0;
};

struct SmfSong {
    std::int64_t time_division = 0; // ticks per quarter note, > 0
    std::vector<RawTrack> tracks;
};

struct NoteEvent {
    Fraction onset;     // beats, >= 0
    Fraction duration;  // beats, > 0
    int pitch = 0;      // 0..127
    int velocity = 0;   // 1..127
    int program = 0;    // 0..128, 128 = drums
    bool is_drum = false;
};

// Piecewise-constant tempo map; first segment always starts at beat 0.
struct TempoCurve {
    std::vector<std::pair<Fraction, double>> segments; // (start_beat, bpm)

    double bpm_at(const Fraction& beat) const;
};

// Parses a format 0/1 Standard MIDI File. Running status and velocity-0
// note-offs are handled here; note pairing happens in extract_notes.
SmfSong parse_smf(std::span<const std::uint8_t> bytes);

// Flattens all tracks into one onset-ordered note stream plus the tempo map.
// Channel 10 notes become program 128 / is_drum. Unmatched note-ons are
// closed at end-of-track. Same-pitch overlaps close FIFO.
std::pair<std::vector<NoteEvent>, TempoCurve> extract_notes(const SmfSong& song);

} // namespace barembed::midi
