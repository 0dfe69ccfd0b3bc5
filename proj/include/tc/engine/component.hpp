#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tc/tree.hpp"

namespace tc::engine {

// A child slot of a component vertex: either another vertex of the component
// or a run of consecutive external children (stubs). An internal slot may stand
// for several original children when it holds a folded leaf (run = multiplicity).
struct Entry {
    std::int32_t node = -1;
    std::uint32_t run = 0;

    static Entry internal(std::int32_t i, std::uint32_t mult = 1) { return {i, mult}; }
    static Entry stubs(std::uint32_t r) { return {-1, r}; }
    bool is_stub() const { return node < 0; }
    std::size_t width() const { return run; }

    std::uint64_t word() const {
        if (is_stub()) return (static_cast<std::uint64_t>(run) << 1) | 1u;
        return (static_cast<std::uint64_t>(run) << 32) | (static_cast<std::uint64_t>(node) << 1);
    }
    static Entry from_word(std::uint64_t w) {
        if (w & 1u) return stubs(static_cast<std::uint32_t>(w >> 1));
        return internal(static_cast<std::int32_t>((w & 0xffffffffu) >> 1), static_cast<std::uint32_t>(w >> 32));
    }
    bool operator==(const Entry& o) const { return node == o.node && run == o.run; }
};

inline void push_entry(std::vector<Entry>& v, Entry e) {
    if (e.is_stub()) {
        if (e.run == 0) return;
        if (!v.empty() && v.back().is_stub()) {
            v.back().run += e.run;
            return;
        }
    }
    v.push_back(e);
}

inline std::size_t entries_width(const std::vector<Entry>& v) {
    std::size_t w = 0;
    for (const auto& e : v) w += e.width();
    return w;
}

// For every entry, the index of its first stub in depth-first order (children
// visited in entry order from node 0). Entries that are not stubs get the
// running count as well.
inline std::vector<std::vector<std::size_t>> stub_offsets(const std::vector<std::vector<Entry>>& kids) {
    std::vector<std::vector<std::size_t>> off(kids.size());
    if (kids.empty()) return off;
    for (std::size_t i = 0; i < kids.size(); ++i) off[i].resize(kids[i].size());
    std::size_t cur = 0;
    std::vector<std::pair<std::size_t, std::size_t>> st{{0, 0}};
    while (!st.empty()) {
        auto& [x, j] = st.back();
        if (j == kids[x].size()) {
            st.pop_back();
            continue;
        }
        const Entry& e = kids[x][j];
        off[x][j] = cur;
        ++j;
        if (e.is_stub()) cur += e.run;
        else st.push_back({static_cast<std::size_t>(e.node), 0});
    }
    return off;
}

// Connected set of vertices handed to a connected contractor. Vertices are in
// preorder; ids[0] is the root (the survivor).
template <class D>
struct Component {
    std::vector<Vid> ids;
    std::vector<std::int32_t> parent;
    std::vector<std::vector<Entry>> kids;
    std::vector<D> data;

    std::size_t size() const { return ids.size(); }
    std::size_t stubs() const {
        std::size_t s = 0;
        for (const auto& k : kids)
            for (const auto& e : k)
                if (e.is_stub()) s += e.run;
        return s;
    }
    // words of shape information (ids, parent links, entries)
    std::size_t shape_words() const {
        std::size_t w = 2 * ids.size();
        for (const auto& k : kids) w += k.size();
        return w;
    }
};

}  // namespace tc::engine
