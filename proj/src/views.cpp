#include "barembed/views.hpp"

#include <algorithm>

#include "barembed/errors.hpp"

namespace barembed::views {

MaskedView mlm_mask(const std::vector<int>& ids, Rng& rng) {
    const remi::Vocab& v = remi::vocab();
    MaskedView view;
    view.input_ids = ids;
    view.mlm_targets.assign(ids.size(), kIgnoreTarget);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (rng.next_double() >= kMaskSelectRate) continue;
        view.selected_positions.push_back(i);
        view.mlm_targets[i] = ids[i];
        const double r = rng.next_double();
        if (r < kMaskReplaceFrac) {
            view.input_ids[i] = v.mask_id();
        } else if (r < kMaskReplaceFrac + kMaskRandomFrac) {
            view.input_ids[i] = static_cast<int>(rng.next_below(remi::kMusicalVocabSize));
        } // else keep the original token
    }
    return view;
}

remi::BarTokens apply_pitch_velocity_shift(const remi::BarTokens& bar, int pitch_offset, int velocity_offset) {
    const remi::Vocab& v = remi::vocab();
    remi::BarTokens out = bar;
    for (int& id : out.ids) {
        const remi::TokenInfo t = v.info(id);
        if (t.category == remi::Category::pitch) {
            const int shifted = std::clamp(t.value + pitch_offset, 0, 127);
            id = v.id_of(remi::Category::pitch, shifted);
        } else if (t.category == remi::Category::velocity) {
            const int shifted = std::clamp(t.value + velocity_offset, 0, remi::kVelocityBins - 1);
            id = v.id_of(remi::Category::velocity, shifted);
        }
    }
    return out;
}

remi::BarTokens pitch_velocity_shift(const remi::BarTokens& bar, Rng& rng) {
    const int dp = static_cast<int>(rng.next_int(-kPitchShiftMax, kPitchShiftMax));
    const int dv = static_cast<int>(rng.next_int(-kVelocityShiftMax, kVelocityShiftMax));
    return apply_pitch_velocity_shift(bar, dp, dv);
}

std::size_t sample_neighbor_row(const Corpus& corpus, std::size_t anchor_row, Rng& rng) {
    const auto& anchor = corpus.bars.at(anchor_row);
    const auto& rows = corpus.rows_by_song.at(anchor.song_id);
    if (rows.size() < 2) throw SingletonSong("song has a single bar: " + anchor.song_id);
    // uniform over the other bars: draw from size-1 slots, skip past the anchor
    const std::size_t pick = rng.next_below(rows.size() - 1);
    std::size_t idx = rows[pick];
    if (idx == anchor_row) idx = rows[rows.size() - 1];
    return idx;
}

} // namespace barembed::views
