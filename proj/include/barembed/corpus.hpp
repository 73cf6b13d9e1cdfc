#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "barembed/codec.hpp"

namespace barembed {

// In-memory token corpus plus a song -> row index. Rows keep file order.
struct Corpus {
    std::vector<remi::BarTokens> bars;
    std::map<std::string, std::vector<std::size_t>> rows_by_song;

    void push(remi::BarTokens bar);
    std::size_t size() const { return bars.size(); }
    std::vector<std::string> song_ids() const;
};

// JSON-lines persistence: one {song_id, bar_index, ids:[...]} object per line.
void write_corpus_jsonl(const Corpus& corpus, const std::string& path);
Corpus read_corpus_jsonl(const std::string& path);

} // namespace barembed
