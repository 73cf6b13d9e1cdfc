#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "barembed/corpus.hpp"
#include "barembed/labels.hpp"
#include "barembed/midi.hpp"

namespace barembed::synth {

struct SynthOptions {
    int n_songs = 20;
    int bars_per_song = 16;
    std::uint64_t seed = 0;
    std::string id_prefix = "synth";
};

struct SynthData {
    Corpus corpus;
    std::vector<labels::BarLabels> labels;
};

// Parameterized songs with planted structure: a song-level tempo bin,
// instrument set, velocity/duration profile, groove pattern and a repeating
// chord progression. Onsets and durations sit exactly on the twelfth-of-a-
// beat grid, so tokens reflect the planted values.
SynthData make_corpus(const SynthOptions& options);

// Note stream for one song (onsets in absolute beats) plus its tempo curve.
std::pair<std::vector<midi::NoteEvent>, midi::TempoCurve>
make_song(const SynthOptions& options, int song_index);

} // namespace barembed::synth
