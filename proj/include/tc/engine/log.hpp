#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tc/engine/component.hpp"
#include "tc/tree.hpp"

namespace tc::engine {

enum class ContractionKind : std::uint8_t { connected = 0, sibling = 1 };

struct LogRecord {
    std::uint32_t phase = 0;
    std::uint32_t stage = 0;  // contraction round index; records of one stage are independent
    ContractionKind kind = ContractionKind::connected;
    Vid survivor = kNone;
    std::vector<Vid> ids;  // component in preorder (connected) or leaves left to right (sibling)
    std::vector<std::int32_t> parent;
    std::vector<std::vector<Entry>> kids;
    std::vector<std::vector<std::uint64_t>> payloads;  // pre-contraction, encoded
    std::vector<Vid> external;                         // external children in stub order

    std::size_t words() const {
        std::size_t w = 4 + ids.size() * 2 + external.size();
        for (const auto& k : kids) w += 1 + k.size();
        for (const auto& p : payloads) w += 1 + p.size();
        return w;
    }
    bool operator==(const LogRecord&) const = default;
};

struct ContractionLog {
    static constexpr std::uint32_t kVersion = 1;
    std::size_t n = 0;
    Vid root = kNone;
    std::vector<LogRecord> records;

    std::size_t words() const {
        std::size_t w = 0;
        for (const auto& r : records) w += r.words();
        return w;
    }
    bool operator==(const ContractionLog&) const = default;

    // Each non-root vertex is removed by exactly one record; the root by none.
    std::string check_removals() const {
        std::vector<std::uint32_t> removed(n, 0);
        for (const auto& r : records)
            for (std::size_t i = 1; i < r.ids.size(); ++i) {
                if (r.ids[i] >= n) return "record references vertex out of range";
                ++removed[r.ids[i]];
            }
        for (Vid v = 0; v < n; ++v) {
            std::uint32_t want = v == root ? 0 : 1;
            if (removed[v] != want)
                return "vertex " + std::to_string(v) + " removed " + std::to_string(removed[v]) + " times";
        }
        return "";
    }

    void save(std::ostream& out) const {
        out.write("TCLOG", 5);
        put32(out, kVersion);
        put64(out, n);
        put32(out, root);
        put64(out, records.size());
        for (const auto& r : records) {
            put32(out, r.phase);
            put32(out, r.stage);
            out.put(static_cast<char>(r.kind));
            put32(out, r.survivor);
            put64(out, r.ids.size());
            for (std::size_t i = 0; i < r.ids.size(); ++i) {
                put32(out, r.ids[i]);
                put32(out, static_cast<std::uint32_t>(r.parent[i]));
                put64(out, r.kids[i].size());
                for (const auto& e : r.kids[i]) put64(out, e.word());
                put64(out, r.payloads[i].size());
                for (auto w : r.payloads[i]) put64(out, w);
            }
            put64(out, r.external.size());
            for (auto x : r.external) put32(out, x);
        }
    }
    static ContractionLog load(std::istream& in) {
        char magic[5];
        in.read(magic, 5);
        if (!in || std::memcmp(magic, "TCLOG", 5) != 0) throw InputError("not a contraction log");
        if (get32(in) != kVersion) throw InputError("unsupported contraction log version");
        ContractionLog log;
        log.n = get64(in);
        log.root = get32(in);
        std::size_t nr = get64(in);
        log.records.resize(nr);
        for (auto& r : log.records) {
            r.phase = get32(in);
            r.stage = get32(in);
            r.kind = static_cast<ContractionKind>(in.get());
            r.survivor = get32(in);
            std::size_t m = get64(in);
            r.ids.resize(m);
            r.parent.resize(m);
            r.kids.resize(m);
            r.payloads.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                r.ids[i] = get32(in);
                r.parent[i] = static_cast<std::int32_t>(get32(in));
                std::size_t k = get64(in);
                for (std::size_t j = 0; j < k; ++j) r.kids[i].push_back(Entry::from_word(get64(in)));
                std::size_t p = get64(in);
                r.payloads[i].resize(p);
                for (auto& w : r.payloads[i]) w = get64(in);
            }
            std::size_t e = get64(in);
            r.external.resize(e);
            for (auto& x : r.external) x = get32(in);
        }
        if (!in) throw InputError("truncated contraction log");
        return log;
    }
    void save_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError("cannot write " + path);
        save(out);
    }
    static ContractionLog load_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError("cannot open " + path);
        return load(in);
    }

private:
    static void put32(std::ostream& o, std::uint32_t v) {
        for (int i = 0; i < 4; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    static void put64(std::ostream& o, std::uint64_t v) {
        for (int i = 0; i < 8; ++i) o.put(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    static std::uint32_t get32(std::istream& in) {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in.get())) << (8 * i);
        return v;
    }
    static std::uint64_t get64(std::istream& in) {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in.get())) << (8 * i);
        return v;
    }
};

}  // namespace tc::engine
