#include "barembed/labels.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "barembed/errors.hpp"
#include "barembed/vocab.hpp"

namespace barembed::labels {

namespace {
const char* kRootNames[12] = {"C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"};
const char* kQualityNames[kNumQualities] = {"maj", "min", "dim", "aug", "dom7", "maj7", "min7"};
} // namespace

const std::array<std::vector<int>, kNumQualities>& quality_intervals() {
    static const std::array<std::vector<int>, kNumQualities> intervals = {{
        {0, 4, 7},     // maj
        {0, 3, 7},     // min
        {0, 3, 6},     // dim
        {0, 4, 8},     // aug
        {0, 4, 7, 10}, // dom7
        {0, 4, 7, 11}, // maj7
        {0, 3, 7, 10}, // min7
    }};
    return intervals;
}

std::string chord_name(int chord_id) {
    if (chord_id < 0 || chord_id >= kNumChords) throw InternalError("chord id out of range");
    return std::string(kRootNames[chord_id / kNumQualities]) + ":" +
           kQualityNames[chord_id % kNumQualities];
}

int parse_chord(const std::string& name) {
    const auto colon = name.find(':');
    if (colon == std::string::npos) throw DataError("bad chord name: " + name);
    const std::string root = name.substr(0, colon);
    const std::string quality = name.substr(colon + 1);
    for (int r = 0; r < 12; ++r)
        if (root == kRootNames[r])
            for (int q = 0; q < kNumQualities; ++q)
                if (quality == kQualityNames[q]) return r * kNumQualities + q;
    throw DataError("bad chord name: " + name);
}

std::array<BeatChroma, remi::kBeatsPerBar> beat_chroma(const std::vector<midi::NoteEvent>& bar_notes) {
    std::array<BeatChroma, remi::kBeatsPerBar> chroma{};
    for (auto& c : chroma) c.fill(0);
    for (const auto& n : bar_notes) {
        if (n.is_drum) continue;
        const Fraction end = n.onset + n.duration;
        for (int beat = 0; beat < remi::kBeatsPerBar; ++beat) {
            const Fraction lo = std::max(n.onset, Fraction(beat));
            const Fraction hi = std::min(end, Fraction(beat + 1));
            if (!(hi > lo)) continue;
            const std::int64_t twelfths = ((hi - lo) * Fraction(12)).round();
            if (twelfths > 0) chroma[beat][n.pitch % 12] += twelfths;
        }
    }
    return chroma;
}

std::array<std::int64_t, kNumChordStates> chord_emission_scores(const BeatChroma& chroma) {
    std::array<std::int64_t, kNumChordStates> scores{};
    for (int root = 0; root < 12; ++root) {
        for (int q = 0; q < kNumQualities; ++q) {
            bool tone[12] = {false};
            for (int iv : quality_intervals()[q]) tone[(root + iv) % 12] = true;
            std::int64_t s = 0;
            for (int pc = 0; pc < 12; ++pc)
                s += chroma[pc] * (tone[pc] ? kChordMatchWeight : kChordMismatchWeight);
            if (chroma[root] > 0) s += kChordRootBonus;
            scores[root * kNumQualities + q] = s;
        }
    }
    scores[kNoChord] = 0;
    return scores;
}

std::array<int, kNumChordStates> chord_state_rank(const BeatChroma& bar_total) {
    // canonical rotation: the shift making the rotated chroma lexicographically
    // largest (smallest shift on full rotational symmetry)
    int anchor = 0;
    for (int k = 1; k < 12; ++k) {
        for (int i = 0; i < 12; ++i) {
            const std::int64_t a = bar_total[(i + k) % 12];
            const std::int64_t b = bar_total[(i + anchor) % 12];
            if (a != b) {
                if (a > b) anchor = k;
                break;
            }
        }
    }
    std::array<int, kNumChordStates> rank{};
    rank[kNoChord] = 0;
    for (int root = 0; root < 12; ++root)
        for (int q = 0; q < kNumQualities; ++q)
            rank[root * kNumQualities + q] = 1 + q * 12 + (root - anchor + 12) % 12;
    return rank;
}

std::vector<int> extract_chords(const std::vector<midi::NoteEvent>& bar_notes) {
    const auto chroma = beat_chroma(bar_notes);
    BeatChroma total{};
    total.fill(0);
    for (const auto& c : chroma)
        for (int pc = 0; pc < 12; ++pc) total[pc] += c[pc];
    const auto rank = chord_state_rank(total);

    std::array<std::array<std::int64_t, kNumChordStates>, remi::kBeatsPerBar> emit;
    for (int b = 0; b < remi::kBeatsPerBar; ++b) emit[b] = chord_emission_scores(chroma[b]);

    // suffix-optimal scores: best[b][s] = best total of a path covering beats
    // b..3 that starts in state s
    std::array<std::array<std::int64_t, kNumChordStates>, remi::kBeatsPerBar> best;
    best[remi::kBeatsPerBar - 1] = emit[remi::kBeatsPerBar - 1];
    for (int b = remi::kBeatsPerBar - 2; b >= 0; --b) {
        std::int64_t overall = best[b + 1][0];
        for (int s = 1; s < kNumChordStates; ++s) overall = std::max(overall, best[b + 1][s]);
        for (int s = 0; s < kNumChordStates; ++s) {
            // either stay in s or pay the switch penalty and take the best
            const std::int64_t next = std::max(best[b + 1][s], overall - kChordSwitchPenalty);
            best[b][s] = emit[b][s] + next;
        }
    }

    // forward reconstruction: at each beat pick the rank-smallest state that
    // still completes an optimal path (exact integer comparisons)
    auto pick = [&rank](const std::array<std::int64_t, kNumChordStates>& feasible,
                        std::int64_t needed) {
        int chosen = -1;
        for (int s = 0; s < kNumChordStates; ++s)
            if (feasible[s] == needed && (chosen == -1 || rank[s] < rank[chosen])) chosen = s;
        return chosen;
    };

    std::array<int, remi::kBeatsPerBar> path{};
    std::int64_t needed = best[0][0];
    for (int s = 1; s < kNumChordStates; ++s) needed = std::max(needed, best[0][s]);
    path[0] = pick(best[0], needed);
    for (int b = 1; b < remi::kBeatsPerBar; ++b) {
        const int prev = path[b - 1];
        needed = needed - emit[b - 1][prev]; // remaining score demanded of beats b..3
        std::array<std::int64_t, kNumChordStates> feasible{};
        for (int s = 0; s < kNumChordStates; ++s)
            feasible[s] = best[b][s] - (s == prev ? 0 : kChordSwitchPenalty);
        path[b] = pick(feasible, needed);
        needed += (path[b] == prev ? 0 : kChordSwitchPenalty);
    }

    std::set<int> found;
    for (int s : path)
        if (s != kNoChord) found.insert(s);
    return {found.begin(), found.end()};
}

std::bitset<48> extract_groove(const remi::BarTokens& bar) {
    const remi::Vocab& v = remi::vocab();
    std::bitset<48> groove;
    for (int id : bar.ids) {
        const remi::TokenInfo t = v.info(id);
        if (t.category == remi::Category::position) groove.set(t.value);
    }
    return groove;
}

BarScalars extract_scalars(const remi::BarTokens& bar, const std::vector<midi::NoteEvent>* bar_notes) {
    const remi::Vocab& v = remi::vocab();
    BarScalars out;
    bool have_tempo = false;
    double vel_sum = 0.0, dur_sum = 0.0;
    int n_notes = 0;
    for (int id : bar.ids) {
        const remi::TokenInfo t = v.info(id);
        switch (t.category) {
        case remi::Category::tempo:
            out.tempo_class = t.value;
            have_tempo = true;
            break;
        case remi::Category::instrument:
            out.instruments.set(t.value);
            break;
        case remi::Category::velocity:
            vel_sum += remi::dequantize_velocity(t.value);
            break;
        case remi::Category::duration:
            dur_sum += remi::dequantize_duration(t.value).to_double();
            ++n_notes;
            break;
        default:
            break;
        }
    }
    if (!have_tempo) throw MalformedBar("bar lacks a tempo token");
    if (bar_notes != nullptr) {
        vel_sum = 0.0;
        dur_sum = 0.0;
        n_notes = 0;
        for (const auto& n : *bar_notes) {
            vel_sum += n.velocity;
            dur_sum += n.duration.to_double();
            ++n_notes;
        }
    }
    if (n_notes == 0) throw EmptyBar("bar has no notes; mean velocity/duration undefined");
    out.mean_velocity = vel_sum / n_notes;
    out.mean_duration = dur_sum / n_notes;
    return out;
}

BarLabels label_bar(const remi::BarTokens& bar, const std::vector<midi::NoteEvent>& bar_notes) {
    BarLabels out;
    out.song_id = bar.song_id;
    out.bar_index = bar.bar_index;
    out.chords = extract_chords(bar_notes);
    out.groove = extract_groove(bar);
    try {
        const BarScalars s = extract_scalars(bar, &bar_notes);
        out.instruments = s.instruments;
        out.tempo_class = s.tempo_class;
        out.mean_velocity = s.mean_velocity;
        out.mean_duration = s.mean_duration;
    } catch (const EmptyBar&) {
        const remi::Vocab& v = remi::vocab();
        for (int id : bar.ids) {
            const remi::TokenInfo t = v.info(id);
            if (t.category == remi::Category::tempo) out.tempo_class = t.value;
            if (t.category == remi::Category::instrument) out.instruments.set(t.value);
        }
    }
    return out;
}

namespace {

template <std::size_t N>
std::string bits_to_hex(const std::bitset<N>& bits) {
    constexpr std::size_t digits = (N + 3) / 4;
    std::string hex(digits, '0');
    for (std::size_t i = 0; i < N; ++i) {
        if (!bits.test(i)) continue;
        const std::size_t digit = digits - 1 - i / 4;
        int v = hex[digit] <= '9' ? hex[digit] - '0' : hex[digit] - 'a' + 10;
        v |= 1 << (i % 4);
        hex[digit] = v < 10 ? static_cast<char>('0' + v) : static_cast<char>('a' + v - 10);
    }
    return hex;
}

template <std::size_t N>
std::bitset<N> hex_to_bits(const std::string& hex) {
    constexpr std::size_t digits = (N + 3) / 4;
    if (hex.size() != digits) throw DataError("bad bitvector hex length");
    std::bitset<N> bits;
    for (std::size_t d = 0; d < digits; ++d) {
        const char c = hex[d];
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else throw DataError("bad bitvector hex digit");
        for (int b = 0; b < 4; ++b) {
            const std::size_t i = (digits - 1 - d) * 4 + static_cast<std::size_t>(b);
            if ((v & (1 << b)) && i < N) bits.set(i);
        }
    }
    return bits;
}

} // namespace

void write_labels_jsonl(const std::vector<BarLabels>& labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open labels file for writing: " + path);
    for (const auto& row : labels) {
        nlohmann::json j;
        j["song_id"] = row.song_id;
        j["bar_index"] = row.bar_index;
        auto chords = nlohmann::json::array();
        for (int c : row.chords) chords.push_back(chord_name(c));
        j["chords"] = chords;
        j["groove"] = bits_to_hex(row.groove);
        j["instruments"] = bits_to_hex(row.instruments);
        j["tempo_class"] = row.tempo_class;
        j["mean_velocity"] = row.mean_velocity ? nlohmann::json(*row.mean_velocity) : nlohmann::json();
        j["mean_duration"] = row.mean_duration ? nlohmann::json(*row.mean_duration) : nlohmann::json();
        out << j.dump() << "\n";
    }
}

std::vector<BarLabels> read_labels_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open labels file: " + path);
    std::vector<BarLabels> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        BarLabels row;
        row.song_id = j.at("song_id").get<std::string>();
        row.bar_index = j.at("bar_index").get<int>();
        for (const auto& name : j.at("chords")) row.chords.push_back(parse_chord(name.get<std::string>()));
        std::sort(row.chords.begin(), row.chords.end());
        row.groove = hex_to_bits<48>(j.at("groove").get<std::string>());
        row.instruments = hex_to_bits<129>(j.at("instruments").get<std::string>());
        row.tempo_class = j.at("tempo_class").get<int>();
        if (!j.at("mean_velocity").is_null()) row.mean_velocity = j.at("mean_velocity").get<double>();
        if (!j.at("mean_duration").is_null()) row.mean_duration = j.at("mean_duration").get<double>();
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace barembed::labels
