#include "tumoruq/jsonio.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>

#include "tumoruq/errors.hpp"

namespace tuq {

void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open: " + path);
    try {
        nlohmann::json j;
        is >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed JSON in " + path + ": " + e.what());
    }
}

std::string json_content_hash(const nlohmann::json& j) {
    const std::string dump = j.dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace tuq
