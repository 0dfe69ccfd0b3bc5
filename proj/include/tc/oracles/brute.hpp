#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tc/tree.hpp"

namespace tc::oracles {

inline constexpr std::size_t kMatchingEnumCap = 16;
inline constexpr std::size_t kSubsetEnumCap = 20;

struct MatchingResult {
    std::int64_t value = 0;
    std::vector<std::pair<Vid, Vid>> edges;  // (child, parent)
};

inline std::vector<Vid> postorder(const Tree& t) {
    auto pre = preorder_sequence(t);
    std::reverse(pre.begin(), pre.end());
    return pre;
}

// Exhaustive over edge subsets (edge v = v->parent).
inline MatchingResult brute_mwm_enumerate(const Tree& t) {
    const std::size_t n = t.size();
    if (n > kMatchingEnumCap) throw std::invalid_argument("matching enumeration limited to n <= 16");
    std::vector<Vid> edge;
    for (Vid v = 0; v < n; ++v)
        if (t.parent[v] != kNone) edge.push_back(v);
    MatchingResult best;
    for (std::uint32_t mask = 0; mask < (1u << edge.size()); ++mask) {
        std::uint32_t used = 0;
        std::int64_t w = 0;
        bool ok = true;
        for (std::size_t i = 0; i < edge.size() && ok; ++i) {
            if (!(mask >> i & 1)) continue;
            Vid c = edge[i], p = t.parent[c];
            if ((used >> c & 1) || (used >> p & 1)) ok = false;
            used |= (1u << c) | (1u << p);
            w += t.attr_int(c, "ew", 0);
        }
        if (ok && w > best.value) {
            best.value = w;
            best.edges.clear();
            for (std::size_t i = 0; i < edge.size(); ++i)
                if (mask >> i & 1) best.edges.push_back({edge[i], t.parent[edge[i]]});
        }
    }
    return best;
}

// free[v]: best in subtree with v unmatched; any[v]: best overall.
inline MatchingResult brute_mwm_dp(const Tree& t) {
    const std::size_t n = t.size();
    std::vector<std::int64_t> fr(n, 0), any(n, 0);
    std::vector<Vid> pick(n, kNone);
    for (Vid v : postorder(t)) {
        std::int64_t s = 0;
        for (Vid u : t.children[v]) s += any[u];
        fr[v] = s;
        any[v] = s;
        for (Vid u : t.children[v]) {
            std::int64_t alt = s - any[u] + fr[u] + t.attr_int(u, "ew", 0);
            if (alt > any[v]) any[v] = alt, pick[v] = u;
        }
    }
    MatchingResult r;
    r.value = any[t.root];
    // top-down: (vertex, may use own pick)
    std::vector<std::pair<Vid, bool>> st{{t.root, true}};
    while (!st.empty()) {
        auto [v, can] = st.back();
        st.pop_back();
        Vid m = can ? pick[v] : kNone;
        if (m != kNone) r.edges.push_back({m, v});
        for (Vid u : t.children[v]) st.push_back({u, u != m});
    }
    return r;
}

inline MatchingResult brute_mwm(const Tree& t) {
    return t.size() <= kMatchingEnumCap ? brute_mwm_enumerate(t) : brute_mwm_dp(t);
}

inline bool valid_matching(const Tree& t, const std::vector<std::pair<Vid, Vid>>& edges) {
    std::vector<char> used(t.size(), 0);
    for (auto [c, p] : edges) {
        if (c >= t.size() || t.parent[c] != p || used[c] || used[p]) return false;
        used[c] = used[p] = 1;
    }
    return true;
}

inline std::int64_t matching_weight(const Tree& t, const std::vector<std::pair<Vid, Vid>>& edges) {
    std::int64_t w = 0;
    for (auto [c, p] : edges) w += t.attr_int(c, "ew", 0);
    return w;
}

// No edge can be added.
inline bool maximal_matching(const Tree& t, const std::vector<std::pair<Vid, Vid>>& edges) {
    if (!valid_matching(t, edges)) return false;
    std::vector<char> used(t.size(), 0);
    for (auto [c, p] : edges) used[c] = used[p] = 1;
    for (Vid v = 0; v < t.size(); ++v)
        if (t.parent[v] != kNone && !used[v] && !used[t.parent[v]]) return false;
    return true;
}

struct IsCertificate {
    bool independent = false;
    bool maximal = false;
    std::string detail;  // first offending vertex, empty when both hold
    bool ok() const { return independent && maximal; }
};

// Independence: no member has a member parent. Maximality: every non-member has a member neighbour.
inline IsCertificate check_mis(const Tree& t, const std::vector<char>& in) {
    IsCertificate c{true, true, ""};
    if (in.size() != t.size()) return {false, false, "membership vector has wrong size"};
    for (Vid v = 0; v < t.size(); ++v) {
        Vid p = t.parent[v];
        if (in[v] && p != kNone && in[p]) {
            c.independent = false;
            c.detail = "adjacent members " + std::to_string(p) + " and " + std::to_string(v);
            return c;
        }
    }
    for (Vid v = 0; v < t.size(); ++v) {
        if (in[v]) continue;
        bool covered = t.parent[v] != kNone && in[t.parent[v]];
        for (Vid u : t.children[v]) covered = covered || in[u];
        if (!covered) {
            c.maximal = false;
            c.detail = "vertex " + std::to_string(v) + " could be added";
            return c;
        }
    }
    return c;
}

// Greedy in id order.
inline std::vector<char> brute_mis(const Tree& t) {
    std::vector<char> in(t.size(), 0);
    for (Vid v = 0; v < t.size(); ++v) {
        bool free = t.parent[v] == kNone || !in[t.parent[v]];
        for (Vid u : t.children[v]) free = free && !in[u];
        in[v] = free;
    }
    return in;
}

// Sizes of all maximal independent sets, by subset enumeration.
inline std::pair<std::size_t, std::size_t> mis_size_range(const Tree& t) {
    const std::size_t n = t.size();
    if (n > kSubsetEnumCap) throw std::invalid_argument("subset enumeration limited to n <= 20");
    std::size_t lo = n + 1, hi = 0;
    std::vector<char> in(n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        for (Vid v = 0; v < n; ++v) in[v] = mask >> v & 1;
        if (!check_mis(t, in).ok()) continue;
        std::size_t k = static_cast<std::size_t>(__builtin_popcount(mask));
        lo = std::min(lo, k);
        hi = std::max(hi, k);
    }
    return {lo, hi};
}

struct MwisResult {
    std::int64_t value = 0;
    std::vector<char> in;
};

inline MwisResult brute_mwis_enumerate(const Tree& t) {
    const std::size_t n = t.size();
    if (n > kSubsetEnumCap) throw std::invalid_argument("subset enumeration limited to n <= 20");
    MwisResult best{0, std::vector<char>(n, 0)};
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        bool ok = true;
        std::int64_t w = 0;
        for (Vid v = 0; v < n && ok; ++v) {
            if (!(mask >> v & 1)) continue;
            if (t.parent[v] != kNone && (mask >> t.parent[v] & 1)) ok = false;
            w += t.attr_int(v, "vw", 0);
        }
        if (ok && w > best.value) {
            best.value = w;
            for (Vid v = 0; v < n; ++v) best.in[v] = mask >> v & 1;
        }
    }
    return best;
}

inline MwisResult brute_mwis_dp(const Tree& t) {
    const std::size_t n = t.size();
    std::vector<std::int64_t> with(n), without(n);
    for (Vid v : postorder(t)) {
        with[v] = t.attr_int(v, "vw", 0);
        without[v] = 0;
        for (Vid u : t.children[v]) {
            with[v] += without[u];
            without[v] += std::max(with[u], without[u]);
        }
    }
    MwisResult r{std::max(with[t.root], without[t.root]), std::vector<char>(n, 0)};
    std::vector<std::pair<Vid, bool>> st{{t.root, true}};
    while (!st.empty()) {
        auto [v, may] = st.back();
        st.pop_back();
        r.in[v] = may && with[v] > without[v];
        for (Vid u : t.children[v]) st.push_back({u, !r.in[v]});
    }
    return r;
}

inline MwisResult brute_mwis(const Tree& t) {
    return t.size() <= kSubsetEnumCap ? brute_mwis_enumerate(t) : brute_mwis_dp(t);
}

}  // namespace tc::oracles
