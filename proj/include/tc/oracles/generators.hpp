#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tc/tree.hpp"

namespace tc::oracles {

// Parent arrays only; vertex 0 is the root and every parent id is smaller than its child.

inline Tree path(std::size_t n) {
    std::vector<Vid> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i ? static_cast<Vid>(i - 1) : kNone;
    return Tree::from_parents(p);
}

inline Tree star(std::size_t n) {
    std::vector<Vid> p(n, 0);
    if (n) p[0] = kNone;
    return Tree::from_parents(p);
}

// handle of `handle` vertices, the rest hang off its last vertex
inline Tree broom(std::size_t n, std::size_t handle = 0) {
    if (handle == 0) handle = std::max<std::size_t>(1, n / 2);
    handle = std::min(handle, n);
    std::vector<Vid> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i == 0 ? kNone : static_cast<Vid>(i < handle ? i - 1 : handle - 1);
    return Tree::from_parents(p);
}

// spine of ceil(n/2) vertices, one leaf on each spine vertex while ids last
inline Tree caterpillar(std::size_t n) {
    std::size_t spine = (n + 1) / 2;
    std::vector<Vid> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) p[i] = kNone;
        else if (i < spine) p[i] = static_cast<Vid>(i - 1);
        else p[i] = static_cast<Vid>(i - spine);
    }
    return Tree::from_parents(p);
}

// uniform random recursive tree; rng()%i keeps the stream identical across standard libraries
inline Tree random_tree(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vid> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i ? static_cast<Vid>(rng() % i) : kNone;
    return Tree::from_parents(p);
}

inline Tree complete_kary(std::size_t n, std::size_t k) {
    if (k == 0) throw std::invalid_argument("arity must be positive");
    std::vector<Vid> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i ? static_cast<Vid>((i - 1) / k) : kNone;
    return Tree::from_parents(p);
}

namespace detail {
struct ShapeTable {
    // shapes[s] lists canonical shapes of size s; a shape is its child list of (size, index), nonincreasing
    std::vector<std::vector<std::vector<std::pair<std::size_t, std::size_t>>>> shapes;

    void extend(std::size_t n) {
        if (shapes.empty()) shapes.resize(1);
        while (shapes.size() <= n) {
            std::size_t s = shapes.size();
            shapes.emplace_back();
            std::vector<std::pair<std::size_t, std::size_t>> cur;
            fill(s - 1, {s - 1, kMax}, cur, shapes.back());
        }
    }

private:
    static constexpr std::size_t kMax = static_cast<std::size_t>(-1);
    // children of total size `left`, each (size, idx) <= bound lexicographically
    void fill(std::size_t left, std::pair<std::size_t, std::size_t> bound, std::vector<std::pair<std::size_t, std::size_t>>& cur,
              std::vector<std::vector<std::pair<std::size_t, std::size_t>>>& out) {
        if (left == 0) {
            out.push_back(cur);
            return;
        }
        for (std::size_t sz = std::min(left, bound.first); sz >= 1; --sz) {
            std::size_t top = shapes[sz].size();
            if (sz == bound.first && bound.second != kMax) top = std::min(top, bound.second + 1);
            for (std::size_t idx = top; idx-- > 0;) {
                cur.push_back({sz, idx});
                fill(left - sz, {sz, idx}, cur, out);
                cur.pop_back();
            }
        }
    }
};

inline void emit(const ShapeTable& tab, std::size_t sz, std::size_t idx, Vid parent, std::vector<Vid>& par) {
    Vid me = static_cast<Vid>(par.size());
    par.push_back(parent);
    for (auto [s, i] : tab.shapes[sz][idx]) emit(tab, s, i, me, par);
}
}  // namespace detail

// Every unlabeled rooted tree on n vertices, once each, ids in preorder.
inline std::vector<Tree> all_shapes(std::size_t n) {
    if (n == 0) return {};
    if (n > 12) throw std::invalid_argument("all-shapes is limited to n <= 12");
    detail::ShapeTable tab;
    tab.extend(n);
    std::vector<Tree> out;
    for (std::size_t i = 0; i < tab.shapes[n].size(); ++i) {
        std::vector<Vid> par;
        detail::emit(tab, n, i, kNone, par);
        out.push_back(Tree::from_parents(par));
    }
    return out;
}

inline void set_edge_weights(Tree& t, std::int64_t lo, std::int64_t hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto span = static_cast<std::uint64_t>(hi - lo + 1);
    for (Vid v = 0; v < t.size(); ++v)
        if (t.parent[v] != kNone) t.set_attr(v, "ew", lo + static_cast<std::int64_t>(rng() % span));
}

inline void set_vertex_weights(Tree& t, std::int64_t lo, std::int64_t hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto span = static_cast<std::uint64_t>(hi - lo + 1);
    for (Vid v = 0; v < t.size(); ++v) t.set_attr(v, "vw", lo + static_cast<std::int64_t>(rng() % span));
}

// Same shape under a random id permutation; children keep id order so sibling order is shuffled too.
inline Tree relabel(const Tree& t, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vid> perm(t.size());
    for (Vid i = 0; i < t.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Vid> par(t.size());
    for (Vid v = 0; v < t.size(); ++v) par[perm[v]] = t.parent[v] == kNone ? kNone : perm[t.parent[v]];
    Tree r = Tree::from_parents(par);
    for (Vid v = 0; v < t.size(); ++v)
        for (const auto& [k, val] : t.attrs[v]) r.attrs[perm[v]][k] = val;
    return r;
}

inline const std::vector<std::string>& families() {
    static const std::vector<std::string> f{"path", "star", "broom", "caterpillar", "random", "complete-k-ary", "all-shapes"};
    return f;
}

// `param` is the arity for complete-k-ary and the handle length for broom (0 = default).
inline std::vector<Tree> generate(const std::string& family, std::size_t n, std::uint64_t seed, std::size_t param = 0) {
    if (family == "path") return {path(n)};
    if (family == "star") return {star(n)};
    if (family == "broom") return {broom(n, param)};
    if (family == "caterpillar") return {caterpillar(n)};
    if (family == "random") return {random_tree(n, seed)};
    if (family == "complete-k-ary") return {complete_kary(n, param ? param : 2)};
    if (family == "all-shapes") return all_shapes(n);
    throw InputError("unknown tree family '" + family + "'");
}

}  // namespace tc::oracles
