#include "barembed/synth.hpp"

#include <algorithm>

#include "barembed/rng.hpp"

namespace barembed::synth {

namespace {

constexpr int kPitchedPalette[] = {0, 24, 32, 40, 48, 56, 64, 73};
constexpr int kDrumPitches[] = {36, 38, 42, 46};

struct SongPlan {
    int tempo_bin;
    std::vector<int> instruments; // pitched programs
    bool has_drums;
    std::vector<std::pair<int, int>> progression; // (root, quality), cycled per bar
    std::vector<int> groove;                      // melody positions (twelfths)
    std::vector<int> drum_positions;
    int base_velocity;
    int base_duration; // twelfths
    int base_octave;   // root pitch of the chord register
};

SongPlan plan_song(Rng& rng) {
    SongPlan plan;
    plan.tempo_bin = static_cast<int>(rng.next_below(remi::kTempoBins));
    const int n_inst = 1 + static_cast<int>(rng.next_below(3));
    std::vector<int> palette(std::begin(kPitchedPalette), std::end(kPitchedPalette));
    for (int i = 0; i < n_inst; ++i) {
        const std::size_t pick = rng.next_below(palette.size());
        plan.instruments.push_back(palette[pick]);
        palette.erase(palette.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    std::sort(plan.instruments.begin(), plan.instruments.end());
    plan.has_drums = rng.next_double() < 0.4;

    const int qualities[] = {0, 1, 4, 6}; // maj, min, dom7, min7
    const int n_chords = 2 + static_cast<int>(rng.next_below(3));
    for (int i = 0; i < n_chords; ++i)
        plan.progression.emplace_back(static_cast<int>(rng.next_below(12)),
                                      qualities[rng.next_below(4)]);

    const int melody_slots[] = {0, 6, 12, 18, 24, 30, 36, 42};
    for (int slot : melody_slots)
        if (rng.next_double() < 0.5) plan.groove.push_back(slot);
    if (plan.groove.empty()) plan.groove.push_back(0);

    const int drum_slots[] = {0, 12, 24, 36};
    for (int slot : drum_slots)
        if (rng.next_double() < 0.8) plan.drum_positions.push_back(slot);
    if (plan.drum_positions.empty()) plan.drum_positions.push_back(0);

    plan.base_velocity = 30 + static_cast<int>(rng.next_below(71)); // 30..100
    const int durations[] = {6, 12, 18, 24};
    plan.base_duration = durations[rng.next_below(4)];
    plan.base_octave = 48 + 12 * static_cast<int>(rng.next_below(2));
    return plan;
}

int jitter_velocity(int base, Rng& rng) {
    const int v = base + static_cast<int>(rng.next_int(-8, 8));
    return std::clamp(v, 1, 127);
}

} // namespace

std::pair<std::vector<midi::NoteEvent>, midi::TempoCurve>
make_song(const SynthOptions& options, int song_index) {
    Rng rng(mix_seed(options.seed, 0x50f6 + static_cast<unsigned>(song_index)));
    const SongPlan plan = plan_song(rng);

    std::vector<midi::NoteEvent> notes;
    const auto& intervals = labels::quality_intervals();

    for (int bar = 0; bar < options.bars_per_song; ++bar) {
        const Fraction bar_start(4 * bar);
        const auto [root, quality] = plan.progression[bar % plan.progression.size()];

        // sustained chord on the first instrument, whole bar
        for (int iv : intervals[quality]) {
            midi::NoteEvent n;
            n.onset = bar_start;
            n.duration = Fraction(48, 12);
            n.pitch = std::clamp(plan.base_octave + root + iv, 0, 127);
            n.velocity = jitter_velocity(plan.base_velocity, rng);
            n.program = plan.instruments[0];
            notes.push_back(n);
        }
        // melody from chord tones at the groove slots, one instrument per slot
        for (std::size_t g = 0; g < plan.groove.size(); ++g) {
            const int slot = plan.groove[g];
            const int iv = intervals[quality][rng.next_below(intervals[quality].size())];
            midi::NoteEvent n;
            n.onset = bar_start + Fraction(slot, 12);
            n.duration = Fraction(plan.base_duration, 12);
            n.pitch = std::clamp(plan.base_octave + 12 + root + iv, 0, 127);
            n.velocity = jitter_velocity(plan.base_velocity, rng);
            n.program = plan.instruments[g % plan.instruments.size()];
            notes.push_back(n);
        }
        if (plan.has_drums) {
            for (std::size_t d = 0; d < plan.drum_positions.size(); ++d) {
                midi::NoteEvent n;
                n.onset = bar_start + Fraction(plan.drum_positions[d], 12);
                n.duration = Fraction(3, 12);
                n.pitch = kDrumPitches[d % 4];
                n.velocity = jitter_velocity(plan.base_velocity, rng);
                n.program = 128;
                n.is_drum = true;
                notes.push_back(n);
            }
        }
    }

    midi::TempoCurve curve;
    curve.segments.emplace_back(Fraction(0), remi::dequantize_tempo(plan.tempo_bin));
    return {std::move(notes), std::move(curve)};
}

SynthData make_corpus(const SynthOptions& options) {
    SynthData data;
    for (int s = 0; s < options.n_songs; ++s) {
        auto [notes, tempo] = make_song(options, s);
        std::string id = options.id_prefix + "_" + std::to_string(s);
        // zero-pad so lexicographic and numeric order agree
        const std::string num = std::to_string(s);
        id = options.id_prefix + "_" + std::string(4 - std::min<std::size_t>(4, num.size()), '0') + num;

        auto bars = remi::encode_song(id, notes, tempo);
        for (const auto& bar : bars) {
            std::vector<midi::NoteEvent> bar_notes;
            const Fraction lo(4 * bar.bar_index);
            const Fraction hi(4 * (bar.bar_index + 1));
            for (const auto& n : notes)
                if (n.onset >= lo && n.onset < hi) {
                    midi::NoteEvent shifted = n;
                    shifted.onset = n.onset - lo;
                    bar_notes.push_back(shifted);
                }
            data.labels.push_back(labels::label_bar(bar, bar_notes));
            data.corpus.push(bar);
        }
    }
    return data;
}

} // namespace barembed::synth
