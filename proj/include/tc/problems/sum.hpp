#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tc/engine/lift.hpp"
#include "tc/tree.hpp"

namespace tc::problems {

// P(v) = x_v + sum of P over the children: each vertex reports the total of
// the values in its subtree.
struct SumParent {
    using Node = std::int64_t;
    using Value = std::int64_t;

    Value eval(const Node& x, std::span<const Value> kids) const {
        Value s = x;
        for (auto k : kids) s += k;
        return s;
    }
    Node rake(const Node& parent, const Node& leaf, std::size_t) const { return parent + leaf; }
    std::optional<Node> compress(const Node& parent, const Node& child) const { return parent + child; }
    Node fold(const Node& a, const Node& b) const { return a + b; }
    void encode(const Node& x, std::vector<std::uint64_t>& out) const { out.push_back(static_cast<std::uint64_t>(x)); }
    Node decode(const std::uint64_t*& p) const { return static_cast<Node>(*p++); }
};

// vertex values from the `vw` key (default 0)
inline std::vector<SumParent::Node> sum_nodes(const Tree& t) {
    std::vector<SumParent::Node> v(t.size());
    for (Vid i = 0; i < t.size(); ++i) v[i] = t.attr_int(i, "vw", 0);
    return v;
}

template <class L>
std::vector<typename L::Data> initial_payloads(const Tree& t, const L& lifted, const std::vector<typename L::Node>& nodes) {
    std::vector<typename L::Data> d;
    d.reserve(t.size());
    for (Vid v = 0; v < t.size(); ++v) d.push_back(lifted.initial(nodes[v], t.deg(v)));
    return d;
}

}  // namespace tc::problems
