#pragma once

#include <cstddef>
#include <vector>

#include "barembed/codec.hpp"
#include "barembed/corpus.hpp"
#include "barembed/rng.hpp"

namespace barembed::views {

inline constexpr int kIgnoreTarget = -1;
inline constexpr double kMaskSelectRate = 0.15;
inline constexpr double kMaskReplaceFrac = 0.80; // of selected -> <mask>
inline constexpr double kMaskRandomFrac = 0.10;  // of selected -> random musical id
inline constexpr int kPitchShiftMax = 6;         // semitones, +/- per bar
inline constexpr int kVelocityShiftMax = 3;      // velocity bins, +/- per bar

struct MaskedView {
    std::vector<int> input_ids;
    std::vector<int> mlm_targets;          // original id at selected positions, else kIgnoreTarget
    std::vector<std::size_t> selected_positions;
};

// Training pair batch. view_b is empty for the plain-MLM variant; for the
// dropout twin it repeats view_a's inputs and the two encoder passes diverge
// through independent dropout draws.
struct PairBatch {
    std::vector<MaskedView> view_a;
    std::vector<std::vector<int>> view_b;
    std::vector<std::size_t> source_rows; // corpus row of each pair
};

// 15% of positions selected; of those 80% masked, 10% randomized, 10% kept.
MaskedView mlm_mask(const std::vector<int>& ids, Rng& rng);

// Deterministic core: one pitch offset and one velocity-bin offset applied to
// every pitch/velocity token in the bar (drum pitches excluded), clamped at
// the category boundaries.
remi::BarTokens apply_pitch_velocity_shift(const remi::BarTokens& bar, int pitch_offset, int velocity_offset);

// Draws offsets in [-6, 6] / [-3, 3] and applies them.
remi::BarTokens pitch_velocity_shift(const remi::BarTokens& bar, Rng& rng);

// Uniform over the anchor song's other bars. Throws SingletonSong when the
// song has exactly one bar.
std::size_t sample_neighbor_row(const Corpus& corpus, std::size_t anchor_row, Rng& rng);

} // namespace barembed::views
