#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "tc/tree.hpp"

namespace tc::oracles {

// AHU: each vertex gets the id of the sorted multiset of its children's ids.
inline std::vector<std::size_t> ahu_codes(const Tree& t, std::map<std::vector<std::size_t>, std::size_t>& dict) {
    std::vector<std::size_t> code(t.size());
    auto pre = preorder_sequence(t);
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
        std::vector<std::size_t> k;
        for (Vid u : t.children[*it]) k.push_back(code[u]);
        std::sort(k.begin(), k.end());
        auto [pos, fresh] = dict.try_emplace(std::move(k), dict.size());
        code[*it] = pos->second;
    }
    return code;
}

inline bool canonical_iso(const Tree& a, const Tree& b) {
    if (a.size() != b.size()) return false;
    std::map<std::vector<std::size_t>, std::size_t> dict;
    auto ca = ahu_codes(a, dict);
    auto cb = ahu_codes(b, dict);
    return ca[a.root] == cb[b.root];
}

// Parenthesised canonical string, handy for digests and messages.
inline std::string canonical_string(const Tree& t) {
    std::vector<std::string> s(t.size());
    auto pre = preorder_sequence(t);
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
        std::vector<std::string> k;
        for (Vid u : t.children[*it]) k.push_back(std::move(s[u]));
        std::sort(k.begin(), k.end());
        std::string r = "(";
        for (auto& x : k) r += x;
        s[*it] = r + ")";
    }
    return s[t.root];
}

}  // namespace tc::oracles
