#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tc {

using Vid = std::uint32_t;
inline constexpr Vid kNone = std::numeric_limits<Vid>::max();

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rooted tree with ordered children. Vertex ids are dense 0..n-1.
struct Tree {
    Vid root = kNone;
    std::vector<Vid> parent;
    std::vector<std::vector<Vid>> children;
    // problem-specific per-vertex keys from the text format (ew=, vw=, bypass=)
    std::vector<std::map<std::string, std::string>> attrs;

    std::size_t size() const { return parent.size(); }
    std::size_t deg(Vid v) const { return children[v].size(); }
    bool is_leaf(Vid v) const { return children[v].empty(); }

    // children appear in increasing id order
    static Tree from_parents(const std::vector<Vid>& par) {
        Tree t;
        t.parent = par;
        t.children.assign(par.size(), {});
        t.attrs.assign(par.size(), {});
        for (Vid v = 0; v < par.size(); ++v) {
            if (par[v] == kNone) {
                if (t.root != kNone) throw StructuralError("multiple roots: " + std::to_string(t.root) + " and " + std::to_string(v));
                t.root = v;
            } else {
                if (par[v] >= par.size()) throw StructuralError("parent id out of range at vertex " + std::to_string(v));
                t.children[par[v]].push_back(v);
            }
        }
        t.validate();
        return t;
    }

    std::int64_t attr_int(Vid v, const std::string& key, std::int64_t dflt = 0) const {
        if (attrs.size() <= v) return dflt;
        auto it = attrs[v].find(key);
        if (it == attrs[v].end()) return dflt;
        return std::stoll(it->second);
    }
    void set_attr(Vid v, const std::string& key, std::int64_t val) {
        if (attrs.size() < size()) attrs.resize(size());
        attrs[v][key] = std::to_string(val);
    }

    void validate() const {
        const std::size_t n = size();
        if (n == 0) throw StructuralError("empty tree");
        if (children.size() != n) throw StructuralError("children table size mismatch");
        if (root >= n || parent[root] != kNone) throw StructuralError("missing or invalid root");
        std::size_t roots = 0;
        for (Vid v = 0; v < n; ++v) {
            if (parent[v] == kNone) {
                ++roots;
                continue;
            }
            const auto& sib = children[parent[v]];
            if (std::count(sib.begin(), sib.end(), v) != 1)
                throw StructuralError("parent/children maps disagree at vertex " + std::to_string(v));
        }
        if (roots != 1) throw StructuralError("expected exactly one root, found " + std::to_string(roots));
        std::size_t edges = 0;
        for (Vid v = 0; v < n; ++v) {
            for (Vid c : children[v]) {
                if (c >= n || parent[c] != v) throw StructuralError("child " + std::to_string(c) + " does not point back to " + std::to_string(v));
            }
            edges += children[v].size();
        }
        if (edges != n - 1) throw StructuralError("edge count mismatch");
        // reachability from root rules out cycles
        std::vector<Vid> stack{root};
        std::size_t seen = 0;
        while (!stack.empty()) {
            Vid v = stack.back();
            stack.pop_back();
            if (++seen > n) throw StructuralError("cycle detected");
            for (Vid c : children[v]) stack.push_back(c);
        }
        if (seen != n) throw StructuralError("cycle detected: unreachable vertices");
    }

    bool operator==(const Tree& o) const {
        return root == o.root && parent == o.parent && children == o.children && attrs == o.attrs;
    }
};

// Vertices in preorder (children visited in list order).
inline std::vector<Vid> preorder_sequence(const Tree& t) {
    std::vector<Vid> out;
    out.reserve(t.size());
    std::vector<Vid> stack{t.root};
    while (!stack.empty()) {
        Vid v = stack.back();
        stack.pop_back();
        out.push_back(v);
        for (auto it = t.children[v].rbegin(); it != t.children[v].rend(); ++it) stack.push_back(*it);
    }
    if (out.size() != t.size()) throw StructuralError("tree is not connected");
    return out;
}

// rank[v] in 1..n
inline std::vector<std::uint32_t> preorder_number(const Tree& t) {
    t.validate();
    std::vector<std::uint32_t> rank(t.size());
    auto seq = preorder_sequence(t);
    for (std::size_t i = 0; i < seq.size(); ++i) rank[seq[i]] = static_cast<std::uint32_t>(i + 1);
    return rank;
}

inline std::vector<std::size_t> subtree_sizes(const Tree& t) {
    std::vector<std::size_t> sz(t.size(), 1);
    auto seq = preorder_sequence(t);
    for (auto it = seq.rbegin(); it != seq.rend(); ++it)
        if (t.parent[*it] != kNone) sz[t.parent[*it]] += sz[*it];
    return sz;
}

inline std::size_t tree_height(const Tree& t) {
    std::vector<std::size_t> h(t.size(), 0);
    auto seq = preorder_sequence(t);
    for (auto it = seq.rbegin(); it != seq.rend(); ++it)
        if (t.parent[*it] != kNone) h[t.parent[*it]] = std::max(h[t.parent[*it]], h[*it] + 1);
    return h[t.root];
}

inline std::size_t ceil_log2(std::size_t x) {
    std::size_t b = 0;
    while ((std::size_t{1} << b) < x) ++b;
    return b;
}

// Opaque per-vertex payload. Length is counted in 64-bit words; bit_len is the
// declared length the budget check reads.
struct WeightVector {
    std::vector<std::uint64_t> words;
    std::size_t bit_len = 0;
};

// One machine word holds a value of ceil(log2(n+1)) bits in the budget model.
inline std::size_t payload_bits(std::size_t words, std::size_t n0) { return words * ceil_log2(n0 + 1); }
inline std::size_t payload_budget_bits(std::size_t cw, std::size_t deg, std::size_t n0) {
    return cw * (deg + 1) * ceil_log2(n0 + 1);
}

struct DegreeWeightedTree {
    Tree tree;
    std::vector<WeightVector> payload;
    std::size_t cw = 32;

    bool within_budget(Vid v) const {
        return payload[v].bit_len <= 64 * payload[v].words.size() &&
               payload[v].bit_len <= payload_budget_bits(cw, tree.deg(v), tree.size());
    }
};

// Text format: "n root" then n lines "id parent|- key=value...".
inline Tree parse_tree(std::istream& in) {
    std::string line;
    auto next_line = [&](std::string& out) {
        while (std::getline(in, out)) {
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (out.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    };
    if (!next_line(line)) throw InputError("empty tree file");
    std::istringstream hdr(line);
    long long n = -1, root = -1;
    if (!(hdr >> n >> root) || n <= 0) throw InputError("bad header line: '" + line + "'");
    if (root < 0 || root >= n) throw InputError("root id out of range");
    std::vector<Vid> par(static_cast<std::size_t>(n), kNone);
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<std::map<std::string, std::string>> attrs(static_cast<std::size_t>(n));
    std::vector<Vid> order;
    for (long long i = 0; i < n; ++i) {
        if (!next_line(line)) throw InputError("expected " + std::to_string(n) + " vertex lines, got " + std::to_string(i));
        std::istringstream ls(line);
        long long id;
        std::string p;
        if (!(ls >> id >> p)) throw InputError("bad vertex line: '" + line + "'");
        if (id < 0 || id >= n) throw InputError("vertex id out of range: " + std::to_string(id));
        if (seen[id]) throw InputError("duplicate vertex id " + std::to_string(id));
        seen[id] = true;
        order.push_back(static_cast<Vid>(id));
        if (p == "-") {
            if (id != root) throw InputError("vertex " + std::to_string(id) + " has no parent but is not the root");
        } else {
            long long pv;
            try {
                pv = std::stoll(p);
            } catch (...) {
                throw InputError("bad parent field '" + p + "'");
            }
            if (pv < 0 || pv >= n) throw InputError("parent id out of range on vertex " + std::to_string(id));
            if (id == root) throw InputError("root has a parent");
            par[id] = static_cast<Vid>(pv);
        }
        std::string kv;
        while (ls >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw InputError("bad key=value '" + kv + "'");
            attrs[id][kv.substr(0, eq)] = kv.substr(eq + 1);
        }
    }
    Tree t;
    t.parent = par;
    t.root = static_cast<Vid>(root);
    t.children.assign(n, {});
    for (Vid v : order)
        if (par[v] != kNone) t.children[par[v]].push_back(v);
    t.attrs = std::move(attrs);
    try {
        t.validate();
    } catch (const StructuralError& e) {
        throw InputError(e.what());
    }
    return t;
}

inline Tree parse_tree_string(const std::string& s) {
    std::istringstream in(s);
    return parse_tree(in);
}

inline Tree load_tree(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return parse_tree(in);
}

// Children order is not stored explicitly; it is recovered from line order,
// so lines follow the preorder-compatible order only when children are in id order.
inline std::string serialize_tree(const Tree& t) {
    std::ostringstream out;
    out << t.size() << ' ' << t.root << '\n';
    for (Vid v = 0; v < t.size(); ++v) {
        out << v << ' ';
        if (t.parent[v] == kNone) out << '-';
        else out << t.parent[v];
        if (v < t.attrs.size())
            for (const auto& [k, val] : t.attrs[v]) out << ' ' << k << '=' << val;
        out << '\n';
    }
    return out.str();
}

// Relabel so that children lists are in increasing id order; preserves shape and order.
inline Tree canonical_ids(const Tree& t) {
    auto seq = preorder_sequence(t);
    std::vector<Vid> nid(t.size());
    for (std::size_t i = 0; i < seq.size(); ++i) nid[seq[i]] = static_cast<Vid>(i);
    Tree r;
    r.parent.assign(t.size(), kNone);
    r.children.assign(t.size(), {});
    r.attrs.assign(t.size(), {});
    r.root = nid[t.root];
    for (Vid v = 0; v < t.size(); ++v) {
        if (t.parent[v] != kNone) r.parent[nid[v]] = nid[t.parent[v]];
        for (Vid c : t.children[v]) r.children[nid[v]].push_back(nid[c]);
        if (v < t.attrs.size()) r.attrs[nid[v]] = t.attrs[v];
    }
    return r;
}

}  // namespace tc
