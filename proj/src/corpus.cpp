#include "barembed/corpus.hpp"

#include <fstream>

#include <json.hpp>

#include "barembed/errors.hpp"

namespace barembed {

void Corpus::push(remi::BarTokens bar) {
    rows_by_song[bar.song_id].push_back(bars.size());
    bars.push_back(std::move(bar));
}

std::vector<std::string> Corpus::song_ids() const {
    std::vector<std::string> ids;
    ids.reserve(rows_by_song.size());
    for (const auto& [song, rows] : rows_by_song) ids.push_back(song);
    return ids;
}

void write_corpus_jsonl(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open corpus file for writing: " + path);
    for (const auto& bar : corpus.bars) {
        nlohmann::json j;
        j["song_id"] = bar.song_id;
        j["bar_index"] = bar.bar_index;
        j["ids"] = bar.ids;
        out << j.dump() << "\n";
    }
}

Corpus read_corpus_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus file: " + path);
    Corpus corpus;
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
        remi::BarTokens bar;
        bar.song_id = j.at("song_id").get<std::string>();
        bar.bar_index = j.at("bar_index").get<int>();
        bar.ids = j.at("ids").get<std::vector<int>>();
        corpus.push(std::move(bar));
    }
    return corpus;
}

} // namespace barembed
