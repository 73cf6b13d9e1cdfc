#pragma once

#include <array>
#include <string>

namespace barembed::remi {

// Token categories in id order. The musical categories cover ids 0..555;
// the four specials follow at 556..559.
enum class Category : int {
    bar = 0,
    tempo,
    instrument,
    pitch,
    pitch_drum,
    position,
    duration,
    velocity,
    pad,
    mask,
    cls,
    unk,
};

inline constexpr int kNumMusicalCategories = 8;
inline constexpr std::array<int, kNumMusicalCategories> kCategorySizes = {1, 32, 129, 128, 128, 48, 58, 32};
inline constexpr int kMusicalVocabSize = 556; // sum of kCategorySizes
inline constexpr int kVocabSize = 560;

inline constexpr int kDrumProgram = 128;

struct TokenInfo {
    Category category;
    int value; // index within the category
};

// Bijective id <-> (category, value) map over all 560 ids.
class Vocab {
public:
    Vocab();

    int id_of(Category c, int value = 0) const;
    TokenInfo info(int id) const;

    int musical_size() const { return kMusicalVocabSize; }
    int total_size() const { return kVocabSize; }
    const std::array<int, kNumMusicalCategories>& category_sizes() const { return sizes_; }

    int pad_id() const { return id_of(Category::pad); }
    int mask_id() const { return id_of(Category::mask); }
    int cls_id() const { return id_of(Category::cls); }
    int unk_id() const { return id_of(Category::unk); }

    std::string name(int id) const;

private:
    std::array<int, kNumMusicalCategories> sizes_ = kCategorySizes;
    std::array<int, 12> offsets_{}; // first id of each category incl. specials
};

// Process-wide immutable instance; cheap to build but shared for convenience.
const Vocab& vocab();

} // namespace barembed::remi
