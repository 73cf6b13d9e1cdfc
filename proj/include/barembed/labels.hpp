#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "barembed/codec.hpp"
#include "barembed/midi.hpp"

namespace barembed::labels {

// 84 chord classes: 12 roots x 7 qualities, id = root * 7 + quality.
inline constexpr int kNumQualities = 7;
inline constexpr int kNumChords = 84;
inline constexpr int kNoChord = 84; // extra Viterbi state
inline constexpr int kNumChordStates = 85;

enum class Quality : int { maj = 0, min, dim, aug, dom7, maj7, min7 };

const std::array<std::vector<int>, kNumQualities>& quality_intervals();
std::string chord_name(int chord_id);
int parse_chord(const std::string& name);

// Integer emission scoring. Chroma masses are twelfth-of-a-beat overlap
// counts; the weights below are the (match, non-chord-tone, root-bonus,
// switch) template weights scaled by 120 so every score stays integral and
// ties are exact.
inline constexpr std::int64_t kChordMatchWeight = 10;   // per twelfth of matching mass
inline constexpr std::int64_t kChordMismatchWeight = -3;
inline constexpr std::int64_t kChordRootBonus = 60;     // flat, when the root sounds
inline constexpr std::int64_t kChordSwitchPenalty = 24; // per state change between beats

using BeatChroma = std::array<std::int64_t, 12>;

// Per-beat duration-weighted chroma over the 4 beats of a bar. Note onsets
// are relative to the bar start; drum notes are ignored.
std::array<BeatChroma, remi::kBeatsPerBar> beat_chroma(const std::vector<midi::NoteEvent>& bar_notes);

std::array<std::int64_t, kNumChordStates> chord_emission_scores(const BeatChroma& chroma);

// Deterministic preference order over the 85 states used to break score
// ties. no-chord ranks first; chords rank by (quality, root relative to a
// canonical rotation of the whole-bar chroma), which keeps tie resolution
// covariant under transposition whenever the bar chroma has no nontrivial
// rotational symmetry.
std::array<int, kNumChordStates> chord_state_rank(const BeatChroma& bar_total);

// Distinct chords on the optimal 4-beat state path (canonical-smallest path
// among ties). Empty input yields the empty set.
std::vector<int> extract_chords(const std::vector<midi::NoteEvent>& bar_notes);

// 48-slot onset indicator from a bar's position tokens.
std::bitset<48> extract_groove(const remi::BarTokens& bar);

struct BarScalars {
    std::bitset<129> instruments;
    int tempo_class = 0;
    double mean_velocity = 0.0; // raw 1..127 scale
    double mean_duration = 0.0; // beats
};

// Instruments and tempo class come from the token sequence; the two means
// come from the raw notes when given, else from token bin centers. Throws
// EmptyBar when the bar has no notes (the means are undefined).
BarScalars extract_scalars(const remi::BarTokens& bar,
                           const std::vector<midi::NoteEvent>* bar_notes = nullptr);

struct BarLabels {
    std::string song_id;
    int bar_index = 0;
    std::vector<int> chords; // sorted chord ids
    std::bitset<48> groove;
    std::bitset<129> instruments;
    int tempo_class = 0;
    std::optional<double> mean_velocity; // empty bars carry no means
    std::optional<double> mean_duration;
};

// Full label row for one bar; empty bars get empty means instead of an error.
BarLabels label_bar(const remi::BarTokens& bar, const std::vector<midi::NoteEvent>& bar_notes);

void write_labels_jsonl(const std::vector<BarLabels>& labels, const std::string& path);
std::vector<BarLabels> read_labels_jsonl(const std::string& path);

} // namespace barembed::labels
