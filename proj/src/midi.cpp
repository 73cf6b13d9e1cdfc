#include "barembed/midi.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "barembed/errors.hpp"

namespace barembed::midi {

namespace {

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, std::size_t pos, std::size_t end)
        : bytes_(bytes), pos_(pos), end_(end) {}

    bool done() const { return pos_ >= end_; }

    std::uint8_t u8() {
        if (pos_ >= end_) throw TruncatedChunk("unexpected end of track chunk");
        return bytes_[pos_++];
    }

    std::uint8_t peek() const {
        if (pos_ >= end_) throw TruncatedChunk("unexpected end of track chunk");
        return bytes_[pos_];
    }

    void skip(std::size_t n) {
        if (end_ - pos_ < n) throw TruncatedChunk("event data runs past chunk end");
        pos_ += n;
    }

    // MIDI variable-length quantity, at most 4 bytes.
    std::int64_t varint() {
        std::int64_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint8_t b = u8();
            v = (v << 7) | (b & 0x7f);
            if ((b & 0x80) == 0) return v;
        }
        throw TruncatedChunk("variable-length quantity longer than 4 bytes");
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
    std::size_t end_;
};

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
           (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return std::uint16_t((std::uint16_t(b[at]) << 8) | b[at + 1]);
}

RawTrack parse_track(std::span<const std::uint8_t> bytes, std::size_t begin, std::size_t end) {
    RawTrack track;
    ByteReader r(bytes, begin, end);
    std::int64_t tick = 0;
    std::uint8_t running_status = 0;

    while (!r.done()) {
        tick += r.varint();
        std::uint8_t status = r.peek();
        if (status & 0x80) {
            r.skip(1);
            if (status < 0xf0) running_status = status;
        } else {
            if (running_status == 0) throw TruncatedChunk("data byte with no running status");
            status = running_status;
        }

        if (status == 0xff) { // meta
            const std::uint8_t type = r.u8();
            const std::int64_t len = r.varint();
            if (type == 0x51 && len == 3) {
                std::int64_t usec = 0;
                for (int i = 0; i < 3; ++i) usec = (usec << 8) | r.u8();
                track.events.push_back({tick, EventKind::tempo, 0, 0, 0, usec, 0});
            } else if (type == 0x58 && len >= 2) {
                const std::uint8_t nn = r.u8();
                const std::uint8_t dd = r.u8();
                r.skip(static_cast<std::size_t>(len - 2));
                track.events.push_back({tick, EventKind::time_signature, 0, 0, 0, nn, dd});
            } else if (type == 0x2f) {
                r.skip(static_cast<std::size_t>(len));
                track.end_tick = std::max(track.end_tick, tick);
                break;
            } else {
                r.skip(static_cast<std::size_t>(len));
            }
        } else if (status == 0xf0 || status == 0xf7) { // sysex, skipped
            const std::int64_t len = r.varint();
            r.skip(static_cast<std::size_t>(len));
        } else {
            const std::uint8_t kind = status & 0xf0;
            const std::uint8_t channel = status & 0x0f;
            switch (kind) {
            case 0x80: {
                const std::uint8_t pitch = r.u8();
                r.u8(); // release velocity
                track.events.push_back({tick, EventKind::note_off, channel, pitch, 0, 0, 0});
                break;
            }
            case 0x90: {
                const std::uint8_t pitch = r.u8();
                const std::uint8_t vel = r.u8();
                if (vel == 0) {
                    track.events.push_back({tick, EventKind::note_off, channel, pitch, 0, 0, 0});
                } else {
                    track.events.push_back({tick, EventKind::note_on, channel, pitch, vel, 0, 0});
                }
                break;
            }
            case 0xc0: {
                const std::uint8_t program = r.u8();
                track.events.push_back({tick, EventKind::program_change, channel, program, 0, 0, 0});
                break;
            }
            case 0xd0: // channel pressure
                r.skip(1);
                break;
            case 0xa0: // poly pressure
            case 0xb0: // controller
            case 0xe0: // pitch bend
                r.skip(2);
                break;
            default:
                throw TruncatedChunk("unknown status byte in track");
            }
        }
        track.end_tick = std::max(track.end_tick, tick);
    }
    return track;
}

} // namespace

SmfSong parse_smf(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 14 || bytes[0] != 'M' || bytes[1] != 'T' || bytes[2] != 'h' || bytes[3] != 'd')
        throw MalformedHeader("missing MThd header");
    const std::uint32_t header_len = read_u32(bytes, 4);
    if (header_len < 6) throw MalformedHeader("MThd chunk shorter than 6 bytes");
    const std::uint16_t format = read_u16(bytes, 8);
    const std::uint16_t ntrks = read_u16(bytes, 10);
    const std::uint16_t division = read_u16(bytes, 12);
    if (format > 1) throw UnsupportedFormat("only SMF formats 0 and 1 are supported");
    if (division == 0 || (division & 0x8000))
        throw ZeroTimeDivision("ticks-per-quarter division must be a positive integer");

    SmfSong song;
    song.time_division = division;

    std::size_t pos = 8 + header_len;
    for (int i = 0; i < ntrks; ++i) {
        if (bytes.size() < pos + 8) throw TruncatedChunk("expected MTrk chunk header");
        if (!(bytes[pos] == 'M' && bytes[pos + 1] == 'T' && bytes[pos + 2] == 'r' && bytes[pos + 3] == 'k'))
            throw TruncatedChunk("chunk is not MTrk");
        const std::uint32_t len = read_u32(bytes, pos + 4);
        if (bytes.size() < pos + 8 + len) throw TruncatedChunk("MTrk data shorter than declared length");
        song.tracks.push_back(parse_track(bytes, pos + 8, pos + 8 + len));
        pos += 8 + len;
    }
    return song;
}

double TempoCurve::bpm_at(const Fraction& beat) const {
    double bpm = 120.0;
    for (const auto& [start, value] : segments) {
        if (start <= beat) bpm = value;
        else break;
    }
    return bpm;
}

std::pair<std::vector<NoteEvent>, TempoCurve> extract_notes(const SmfSong& song) {
    const std::int64_t div = song.time_division;
    std::vector<NoteEvent> notes;
    std::vector<std::pair<Fraction, double>> tempo_points;

    for (const auto& track : song.tracks) {
        // program per channel; FIFO queues of open notes per (channel, pitch)
        int programs[16] = {0};
        struct Open { std::int64_t tick; int velocity; int program; };
        std::map<std::pair<int, int>, std::deque<Open>> open;

        auto close_note = [&](int channel, int pitch, const Open& o, std::int64_t off_tick) {
            std::int64_t dur_ticks = off_tick - o.tick;
            if (dur_ticks <= 0) dur_ticks = 1; // zero-length notes get one tick
            NoteEvent n;
            n.onset = Fraction(o.tick, div);
            n.duration = Fraction(dur_ticks, div);
            n.pitch = pitch;
            n.velocity = o.velocity;
            n.is_drum = channel == 9;
            n.program = n.is_drum ? 128 : o.program;
            notes.push_back(n);
        };

        for (const auto& ev : track.events) {
            switch (ev.kind) {
            case EventKind::note_on:
                open[{ev.channel, ev.data1}].push_back({ev.tick, ev.data2, programs[ev.channel]});
                break;
            case EventKind::note_off: {
                auto it = open.find({ev.channel, ev.data1});
                if (it != open.end() && !it->second.empty()) {
                    close_note(ev.channel, ev.data1, it->second.front(), ev.tick);
                    it->second.pop_front();
                }
                break;
            }
            case EventKind::program_change:
                programs[ev.channel] = ev.data1;
                break;
            case EventKind::tempo:
                if (ev.value > 0)
                    tempo_points.emplace_back(Fraction(ev.tick, div), 60.0e6 / static_cast<double>(ev.value));
                break;
            case EventKind::time_signature:
                break; // parsed but unused; bars are fixed at 4 beats
            }
        }
        for (auto& [key, queue] : open)
            for (const auto& o : queue) close_note(key.first, key.second, o, track.end_tick);
    }

    std::sort(notes.begin(), notes.end(), [](const NoteEvent& a, const NoteEvent& b) {
        if (a.onset != b.onset) return a.onset < b.onset;
        if (a.program != b.program) return a.program < b.program;
        if (a.pitch != b.pitch) return a.pitch < b.pitch;
        return a.velocity < b.velocity;
    });

    std::sort(tempo_points.begin(), tempo_points.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    TempoCurve curve;
    curve.segments.emplace_back(Fraction(0), 120.0);
    for (const auto& [beat, bpm] : tempo_points) {
        if (!curve.segments.empty() && curve.segments.back().first == beat)
            curve.segments.back().second = bpm; // later meta at the same tick wins
        else
            curve.segments.emplace_back(beat, bpm);
    }
    return {std::move(notes), std::move(curve)};
}

} // namespace barembed::midi
