#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace barembed {

inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a_file(const std::string& path);
std::string hash_hex(std::uint64_t h);

// One manifest per output directory: command, input/config hashes, seed and
// timestamps. Reruns with identical inputs must reproduce identical outputs;
// the manifest is the audit trail (its timestamps are the only fields that
// may differ between such runs).
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> fields; // hashes, seed, parameters

    void write(const std::string& dir) const;
    static RunManifest read(const std::string& dir);
};

} // namespace barembed
