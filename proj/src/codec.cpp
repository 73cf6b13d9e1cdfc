#include "barembed/codec.hpp"

#include <algorithm>
#include <cmath>

#include "barembed/errors.hpp"

namespace barembed::remi {

namespace {
const double kLogTempoMin = std::log(kTempoMin);
const double kLogTempoSpan = std::log(kTempoMax) - std::log(kTempoMin);
} // namespace

int quantize_tempo(double bpm) {
    if (!(bpm > 0.0)) throw NonPositiveTempo("tempo must be positive");
    const double t = (std::log(bpm) - kLogTempoMin) / kLogTempoSpan * (kTempoBins - 1);
    const int bin = static_cast<int>(std::lround(t));
    return std::clamp(bin, 0, kTempoBins - 1);
}

double dequantize_tempo(int bin) {
    return std::exp(kLogTempoMin + kLogTempoSpan * bin / (kTempoBins - 1));
}

int quantize_position(const Fraction& onset_within_bar) {
    if (onset_within_bar < Fraction(0) || onset_within_bar >= Fraction(kBeatsPerBar))
        throw OnsetOutOfBar("onset outside the 4-beat bar");
    const std::int64_t bin = (onset_within_bar * Fraction(12)).round();
    return static_cast<int>(std::clamp<std::int64_t>(bin, 0, kPositionsPerBar - 1));
}

Fraction dequantize_position(int bin) { return Fraction(bin, 12); }

int quantize_velocity(int velocity) {
    if (velocity < 1 || velocity > 127) throw VelocityOutOfRange("velocity must be in 1..127");
    return (velocity - 1) * kVelocityBins / 127;
}

double dequantize_velocity(int bin) {
    return 1.0 + (bin + 0.5) * 127.0 / kVelocityBins;
}

int dequantize_velocity_int(int bin) {
    return std::clamp(static_cast<int>(std::lround(dequantize_velocity(bin))), 1, 127);
}

int quantize_duration(const Fraction& beats) {
    if (!(beats > Fraction(0))) throw NonPositiveDuration("duration must be positive");
    // fine tier: nearest twelfth, clamped to 1..48
    const std::int64_t twelfths = std::clamp<std::int64_t>((beats * Fraction(12)).round(), 1, kDurationFineBins);
    const int fine_bin = static_cast<int>(twelfths) - 1;
    const double d = beats.to_double();
    if (d <= static_cast<double>(kBeatsPerBar)) return fine_bin;
    // coarse tier: nearest of 6, 8, ..., 24 beats
    const int steps = static_cast<int>(kDurationBins - kDurationFineBins);
    int coarse = static_cast<int>(std::lround((d - kDurationCoarseStart) / kDurationCoarseStep));
    coarse = std::clamp(coarse, 0, steps - 1);
    const double fine_center = kBeatsPerBar; // top of the fine tier
    const double coarse_center = kDurationCoarseStart + kDurationCoarseStep * coarse;
    // ties go to the finer bin
    if (std::abs(d - fine_center) <= std::abs(d - coarse_center)) return kDurationFineBins - 1;
    return kDurationFineBins + coarse;
}

Fraction dequantize_duration(int bin) {
    if (bin < kDurationFineBins) return Fraction(bin + 1, 12);
    const int coarse = bin - kDurationFineBins;
    return Fraction(static_cast<std::int64_t>(kDurationCoarseStart + kDurationCoarseStep * coarse));
}

std::vector<BarTokens> encode_song(const std::string& song_id,
                                   std::vector<midi::NoteEvent> notes,
                                   const midi::TempoCurve& tempo) {
    const Vocab& v = vocab();
    std::vector<BarTokens> bars;
    if (notes.empty()) return bars;

    struct Quantized {
        int bar;
        int position;
        int program;
        int pitch;
        int velocity_bin;
        int duration_bin;
        bool is_drum;
    };
    std::vector<Quantized> q;
    q.reserve(notes.size());
    int last_bar = 0;
    for (const auto& n : notes) {
        const std::int64_t bar = (n.onset / Fraction(kBeatsPerBar)).floor();
        Quantized e;
        e.bar = static_cast<int>(bar);
        e.position = quantize_position(n.onset - Fraction(kBeatsPerBar) * Fraction(bar));
        e.program = n.program;
        e.pitch = n.pitch;
        e.velocity_bin = quantize_velocity(n.velocity);
        e.duration_bin = quantize_duration(n.duration);
        e.is_drum = n.is_drum;
        last_bar = std::max(last_bar, e.bar);
        q.push_back(e);
    }
    std::sort(q.begin(), q.end(), [](const Quantized& a, const Quantized& b) {
        if (a.bar != b.bar) return a.bar < b.bar;
        if (a.position != b.position) return a.position < b.position;
        if (a.program != b.program) return a.program < b.program;
        if (a.pitch != b.pitch) return a.pitch < b.pitch;
        if (a.velocity_bin != b.velocity_bin) return a.velocity_bin < b.velocity_bin;
        return a.duration_bin < b.duration_bin;
    });

    bars.resize(static_cast<std::size_t>(last_bar) + 1);
    for (int b = 0; b <= last_bar; ++b) {
        bars[b].song_id = song_id;
        bars[b].bar_index = b;
        bars[b].ids.push_back(v.id_of(Category::bar));
        const double bpm = tempo.bpm_at(Fraction(static_cast<std::int64_t>(b) * kBeatsPerBar));
        bars[b].ids.push_back(v.id_of(Category::tempo, quantize_tempo(std::clamp(bpm, kTempoMin, kTempoMax))));
    }
    for (const auto& e : q) {
        auto& ids = bars[e.bar].ids;
        ids.push_back(v.id_of(Category::position, e.position));
        ids.push_back(v.id_of(Category::instrument, e.program));
        ids.push_back(e.is_drum ? v.id_of(Category::pitch_drum, e.pitch) : v.id_of(Category::pitch, e.pitch));
        ids.push_back(v.id_of(Category::velocity, e.velocity_bin));
        ids.push_back(v.id_of(Category::duration, e.duration_bin));
    }
    return bars;
}

std::pair<std::vector<midi::NoteEvent>, double> decode_bar(const BarTokens& bar) {
    const Vocab& v = vocab();
    const auto& ids = bar.ids;
    if (ids.size() < 2 || (ids.size() - 2) % 5 != 0)
        throw MalformedBar("bar must be <bar><tempo> plus 5-token note groups");
    if (v.info(ids[0]).category != Category::bar) throw MalformedBar("first token must be <bar>");
    const TokenInfo tempo_tok = v.info(ids[1]);
    if (tempo_tok.category != Category::tempo) throw MalformedBar("second token must be <tempo>");

    std::vector<midi::NoteEvent> notes;
    for (std::size_t at = 2; at < ids.size(); at += 5) {
        const TokenInfo pos = v.info(ids[at]);
        const TokenInfo inst = v.info(ids[at + 1]);
        const TokenInfo pitch = v.info(ids[at + 2]);
        const TokenInfo vel = v.info(ids[at + 3]);
        const TokenInfo dur = v.info(ids[at + 4]);
        if (pos.category != Category::position || inst.category != Category::instrument ||
            vel.category != Category::velocity || dur.category != Category::duration)
            throw MalformedBar("note group out of category order");
        const bool drum_inst = inst.value == kDrumProgram;
        if (drum_inst && pitch.category != Category::pitch_drum)
            throw MalformedBar("drum instrument requires a <pitch drum> token");
        if (!drum_inst && pitch.category != Category::pitch)
            throw MalformedBar("pitched instrument requires a <pitch> token");

        midi::NoteEvent n;
        n.onset = dequantize_position(pos.value);
        n.duration = dequantize_duration(dur.value);
        n.pitch = pitch.value;
        n.velocity = dequantize_velocity_int(vel.value);
        n.program = inst.value;
        n.is_drum = drum_inst;
        notes.push_back(n);
    }
    return {std::move(notes), dequantize_tempo(tempo_tok.value)};
}

} // namespace barembed::remi
