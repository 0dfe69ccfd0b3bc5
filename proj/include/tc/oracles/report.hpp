#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

namespace tc::oracles {

// FNV-1a 64, hex
inline std::string digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct OracleReport {
    std::string problem;
    std::string instance_digest;
    nlohmann::json oracle;
    nlohmann::json engine;
    bool equal = false;

    nlohmann::json to_json() const {
        return {{"problem", problem}, {"digest", instance_digest}, {"oracle", oracle}, {"engine", engine}, {"equal", equal}};
    }
};

}  // namespace tc::oracles
