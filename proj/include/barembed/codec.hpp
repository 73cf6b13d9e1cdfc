#pragma once

#include <string>
#include <vector>

#include "barembed/fraction.hpp"
#include "barembed/midi.hpp"
#include "barembed/vocab.hpp"

namespace barembed::remi {

inline constexpr int kBeatsPerBar = 4;
inline constexpr int kPositionsPerBar = 48; // twelfths of a beat
inline constexpr int kTempoBins = 32;
inline constexpr double kTempoMin = 30.0;
inline constexpr double kTempoMax = 240.0;
inline constexpr int kVelocityBins = 32;
inline constexpr int kDurationBins = 58;     // 48 fine (twelfths) + 10 coarse
inline constexpr int kDurationFineBins = 48; // 1..48 twelfths
inline constexpr double kDurationCoarseStart = 6.0; // beats; then steps of 2 up to 24
inline constexpr double kDurationCoarseStep = 2.0;

struct BarTokens {
    std::string song_id;
    int bar_index = 0;
    std::vector<int> ids;
};

// --- quantizers (bins) and their inverses (bin centers) ---

int quantize_tempo(double bpm);            // nearest of 32 log-spaced centers on [30, 240]
double dequantize_tempo(int bin);

int quantize_position(const Fraction& onset_within_bar); // round(onset * 12), clamped 0..47
Fraction dequantize_position(int bin);

int quantize_velocity(int velocity);       // 32 equal bins over 1..127
double dequantize_velocity(int bin);       // bin center on the raw 1..127 scale
int dequantize_velocity_int(int bin);

int quantize_duration(const Fraction& beats); // fine twelfths up to 4 beats, then 6,8,..,24
Fraction dequantize_duration(int bin);

// Song -> per-bar token sequences. Bars are fixed 4-beat windows over note
// onsets; interior empty bars emit <bar><tempo> only, trailing empties are
// dropped. Notes are ordered (position, program, pitch, velocity, duration).
std::vector<BarTokens> encode_song(const std::string& song_id,
                                   std::vector<midi::NoteEvent> notes,
                                   const midi::TempoCurve& tempo);

// Inverse of the per-bar encoding up to quantization. Onsets are relative to
// the bar start. Throws MalformedBar on structural violations.
std::pair<std::vector<midi::NoteEvent>, double> decode_bar(const BarTokens& bar);

} // namespace barembed::remi
