#include "barembed/manifest.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "barembed/errors.hpp"

namespace barembed {

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream oss;
    oss << std::hex << std::setfill('0') << std::setw(16) << h;
    return oss.str();
}

namespace {
std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream oss;
    oss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return oss.str();
}
} // namespace

void RunManifest::write(const std::string& dir) const {
    nlohmann::json j;
    j["command"] = command;
    j["tool_version"] = kToolVersion;
    j["written_at"] = now_iso8601();
    for (const auto& [k, v] : fields) j[k] = v;
    std::ofstream out(dir + "/manifest.json", std::ios::binary);
    if (!out) throw DataError("cannot write manifest in " + dir);
    out << j.dump(2) << "\n";
}

RunManifest RunManifest::read(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json", std::ios::binary);
    if (!in) throw DataError("no manifest.json in " + dir);
    nlohmann::json j;
    in >> j;
    RunManifest m;
    m.command = j.value("command", "");
    for (const auto& [k, v] : j.items())
        if (v.is_string() && k != "command") m.fields[k] = v.get<std::string>();
    return m;
}

} // namespace barembed
