#include "barembed/vocab.hpp"

#include "barembed/errors.hpp"

namespace barembed::remi {

Vocab::Vocab() {
    int at = 0;
    for (int c = 0; c < kNumMusicalCategories; ++c) {
        offsets_[c] = at;
        at += sizes_[c];
    }
    for (int c = kNumMusicalCategories; c < 12; ++c) offsets_[c] = at++;
}

int Vocab::id_of(Category c, int value) const {
    const int ci = static_cast<int>(c);
    const int size = ci < kNumMusicalCategories ? sizes_[ci] : 1;
    if (value < 0 || value >= size)
        throw InternalError("token value out of range for category");
    return offsets_[ci] + value;
}

TokenInfo Vocab::info(int id) const {
    if (id < 0 || id >= kVocabSize) throw InternalError("token id out of range");
    for (int c = 11; c >= 0; --c)
        if (id >= offsets_[c]) return {static_cast<Category>(c), id - offsets_[c]};
    throw InternalError("unreachable");
}

std::string Vocab::name(int id) const {
    static const char* category_names[] = {"bar", "tempo", "instrument", "pitch", "pitch_drum",
                                           "position", "duration", "velocity", "pad", "mask", "cls", "unk"};
    const TokenInfo t = info(id);
    const int ci = static_cast<int>(t.category);
    if (ci >= kNumMusicalCategories || t.category == Category::bar)
        return category_names[ci];
    return std::string(category_names[ci]) + "_" + std::to_string(t.value);
}

const Vocab& vocab() {
    static const Vocab v;
    return v;
}

} // namespace barembed::remi
