#pragma once

#include <cstddef>
#include <numeric>
#include <vector>

#include "tc/tree.hpp"

namespace tc {

struct PreorderDecomposition {
    std::vector<std::size_t> boundaries;  // l_0 = 0 < l_1 < ... < l_k = n
    std::size_t lambda = 0;

    std::size_t groups() const { return boundaries.size() - 1; }
};

// Greedy left-to-right packing of weights given in preorder. A group is closed
// once its sum reaches lambda or the next weight would overflow it.
inline PreorderDecomposition decompose_weights(const std::vector<std::size_t>& w, std::size_t lambda) {
    if (lambda == 0) throw std::invalid_argument("lambda must be positive");
    PreorderDecomposition d;
    d.lambda = lambda;
    d.boundaries.push_back(0);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > lambda) throw std::invalid_argument("weight of preorder position " + std::to_string(i + 1) + " exceeds lambda");
        bool open = i > d.boundaries.back();
        if (open && (sum >= lambda || sum + w[i] > lambda)) {
            d.boundaries.push_back(i);
            sum = 0;
        }
        sum += w[i];
    }
    d.boundaries.push_back(w.size());
    return d;
}

inline PreorderDecomposition decompose(const Tree& t, std::size_t lambda) {
    auto seq = preorder_sequence(t);
    std::vector<std::size_t> w(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        w[i] = t.deg(seq[i]);
        if (w[i] > lambda)
            throw std::invalid_argument("vertex " + std::to_string(seq[i]) + " has degree " + std::to_string(w[i]) +
                                        " > lambda " + std::to_string(lambda));
    }
    return decompose_weights(w, lambda);
}

inline bool valid_decomposition(const Tree& t, const PreorderDecomposition& d) {
    const auto& l = d.boundaries;
    if (l.size() < 2 || l.front() != 0 || l.back() != t.size()) return false;
    auto seq = preorder_sequence(t);
    for (std::size_t i = 1; i < l.size(); ++i) {
        if (l[i] <= l[i - 1]) return false;
        std::size_t s = 0;
        for (std::size_t p = l[i - 1]; p < l[i]; ++p) s += t.deg(seq[p]);
        if (s > d.lambda) return false;
    }
    return true;
}

struct GroupComponent {
    std::size_t group = 0;
    std::vector<Vid> members;  // preorder; members[0] is the component root
};

// Connected components of the forest induced by each group.
inline std::vector<GroupComponent> group_components(const Tree& t, const PreorderDecomposition& d) {
    auto seq = preorder_sequence(t);
    std::vector<std::size_t> group_of(t.size());
    for (std::size_t g = 0; g + 1 < d.boundaries.size(); ++g) {
        if (d.boundaries[g] >= d.boundaries[g + 1]) throw StructuralError("empty group in decomposition");
        for (std::size_t p = d.boundaries[g]; p < d.boundaries[g + 1]; ++p) group_of[seq[p]] = g;
    }
    std::vector<std::size_t> comp_of(t.size());
    std::vector<GroupComponent> out;
    for (Vid v : seq) {
        Vid p = t.parent[v];
        if (p != kNone && group_of[p] == group_of[v]) {
            comp_of[v] = comp_of[p];
            out[comp_of[v]].members.push_back(v);
        } else {
            comp_of[v] = out.size();
            out.push_back({group_of[v], {v}});
        }
    }
    return out;
}

struct DependencyTree {
    std::vector<GroupComponent> nodes;
    std::vector<std::size_t> parent;  // kNoNode for the root component
    std::vector<std::vector<std::size_t>> children;
    static constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

    bool dependent(std::size_t i) const { return !children[i].empty(); }
};

inline DependencyTree dependency_tree(const Tree& t, const PreorderDecomposition& d) {
    DependencyTree dt;
    dt.nodes = group_components(t, d);
    std::vector<std::size_t> comp_of(t.size());
    for (std::size_t i = 0; i < dt.nodes.size(); ++i)
        for (Vid v : dt.nodes[i].members) comp_of[v] = i;
    dt.parent.assign(dt.nodes.size(), DependencyTree::kNoNode);
    dt.children.assign(dt.nodes.size(), {});
    for (std::size_t i = 0; i < dt.nodes.size(); ++i) {
        Vid p = t.parent[dt.nodes[i].members[0]];
        if (p == kNone) continue;
        dt.parent[i] = comp_of[p];
        dt.children[comp_of[p]].push_back(i);
    }
    return dt;
}

struct LowComponent {
    std::vector<Vid> members;  // preorder; members[0] is the root
    bool leaf = false;          // no big child: a leaf of the Big-Small tree
};

// Maximal connected components of vertices with deg < alpha.
inline std::vector<LowComponent> low_degree_components(const Tree& t, std::size_t alpha) {
    auto seq = preorder_sequence(t);
    std::vector<std::size_t> comp_of(t.size(), static_cast<std::size_t>(-1));
    std::vector<LowComponent> out;
    for (Vid v : seq) {
        if (t.deg(v) >= alpha) continue;
        Vid p = t.parent[v];
        if (p != kNone && t.deg(p) < alpha) {
            comp_of[v] = comp_of[p];
            out[comp_of[v]].members.push_back(v);
        } else {
            comp_of[v] = out.size();
            out.push_back({{v}, true});
        }
    }
    for (auto& c : out)
        for (Vid v : c.members)
            for (Vid ch : t.children[v])
                if (t.deg(ch) >= alpha) c.leaf = false;
    return out;
}

struct BigSmallTree {
    std::size_t alpha = 0;
    std::vector<bool> big;                // per node
    std::vector<std::vector<Vid>> members;
    std::vector<std::size_t> parent;      // kNoNode at the root
    std::vector<std::size_t> child_count;
    static constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

    std::size_t size() const { return big.size(); }
};

inline BigSmallTree big_small_tree(const Tree& t, std::size_t alpha) {
    BigSmallTree b;
    b.alpha = alpha;
    std::vector<std::size_t> node_of(t.size());
    for (auto& c : low_degree_components(t, alpha)) {
        for (Vid v : c.members) node_of[v] = b.big.size();
        b.big.push_back(false);
        b.members.push_back(c.members);
    }
    for (Vid v = 0; v < t.size(); ++v) {
        if (t.deg(v) < alpha) continue;
        node_of[v] = b.big.size();
        b.big.push_back(true);
        b.members.push_back({v});
    }
    b.parent.assign(b.size(), BigSmallTree::kNoNode);
    b.child_count.assign(b.size(), 0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        Vid p = t.parent[b.members[i][0]];
        if (p == kNone) continue;
        b.parent[i] = node_of[p];
        ++b.child_count[node_of[p]];
    }
    return b;
}

struct Fraction {
    std::size_t num = 0, den = 1;
    bool at_least(std::size_t a, std::size_t b) const { return num * b >= a * den; }
};

inline Fraction leaf_fraction(const BigSmallTree& b) {
    std::size_t leaves = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.child_count[i] == 0) ++leaves;
    return {leaves, b.size()};
}

inline bool big_small_adjacency(const BigSmallTree& b) {
    for (std::size_t i = 0; i < b.size(); ++i)
        if (!b.big[i] && b.parent[i] != BigSmallTree::kNoNode && !b.big[b.parent[i]]) return false;
    return true;
}

}  // namespace tc
