#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tc/engine/component.hpp"
#include "tc/tree.hpp"

namespace tc::engine {

// A unary algebra describes a problem through single-vertex operations:
//   Value eval(const Node&, std::span<const Value> kids)   value of a vertex given its children
//   Node rake(const Node& parent, const Node& leaf, std::size_t pos)   absorb a leaf child at position pos
//   std::optional<Node> compress(const Node& parent, const Node& child)   fuse a vertex with its only child
//   Node fold(const Node& a, const Node& b)   merge two sibling leaves into one
//   void encode(const Node&, std::vector<std::uint64_t>&) / Node decode(const std::uint64_t*&)
template <class U>
concept UnaryAlgebra = requires(const U& u, const typename U::Node& n, std::span<const typename U::Value> vs,
                                std::vector<std::uint64_t>& out, const std::uint64_t*& p) {
    { u.eval(n, vs) } -> std::convertible_to<typename U::Value>;
    { u.rake(n, n, std::size_t{}) } -> std::convertible_to<typename U::Node>;
    { u.compress(n, n) } -> std::convertible_to<std::optional<typename U::Node>>;
    { u.fold(n, n) } -> std::convertible_to<typename U::Node>;
    u.encode(n, out);
    { u.decode(p) } -> std::convertible_to<typename U::Node>;
};

// Residual tree stored as a vertex payload: the part of a contracted component
// that still depends on external children. Nodes are in preorder.
template <class N>
struct Residual {
    std::vector<N> nodes;
    std::vector<std::vector<Entry>> kids;

    std::size_t stubs() const {
        std::size_t s = 0;
        for (const auto& k : kids)
            for (const auto& e : k)
                if (e.is_stub()) s += e.run;
        return s;
    }
    std::size_t size() const { return nodes.size(); }
};

template <UnaryAlgebra U>
class Lifted {
public:
    using Node = typename U::Node;
    using Value = typename U::Value;
    using Data = Residual<Node>;

    explicit Lifted(U alg = U{}, std::size_t arity = 0) : alg_(std::move(alg)), arity_(arity) {}

    const U& algebra() const { return alg_; }

    Data initial(const Node& n, std::size_t deg) const {
        Data d;
        d.nodes.push_back(n);
        d.kids.emplace_back();
        if (deg) d.kids[0].push_back(Entry::stubs(static_cast<std::uint32_t>(deg)));
        return d;
    }

    void encode(const Data& d, std::vector<std::uint64_t>& out) const {
        out.push_back(d.nodes.size());
        for (std::size_t i = 0; i < d.nodes.size(); ++i) {
            alg_.encode(d.nodes[i], out);
            out.push_back(d.kids[i].size());
            for (const auto& e : d.kids[i]) out.push_back(e.word());
        }
    }
    Data decode(const std::uint64_t*& p) const {
        Data d;
        std::size_t n = *p++;
        d.nodes.reserve(n);
        d.kids.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            d.nodes.push_back(alg_.decode(p));
            std::size_t k = *p++;
            for (std::size_t j = 0; j < k; ++j) d.kids[i].push_back(Entry::from_word(*p++));
        }
        return d;
    }
    std::vector<std::uint64_t> words(const Data& d) const {
        std::vector<std::uint64_t> w;
        encode(d, w);
        return w;
    }

    // Connected contractor: splice the residuals of the component together and
    // run compress/rake locally until no known leaf and no fusable unary vertex remains.
    Data contract(const Component<Data>& c) const {
        Work w;
        splice(c, w);
        reduce(w);
        return extract(w);
    }

    // Sibling contractor: folds leaves left to right.
    Data fold(std::span<const Data* const> leaves) const {
        if (leaves.empty()) throw std::invalid_argument("fold of an empty leaf set");
        if (arity_ && leaves.size() > arity_) throw std::invalid_argument("fold batch exceeds arity");
        Node acc = leaf_node(*leaves[0]);
        for (std::size_t i = 1; i < leaves.size(); ++i) acc = alg_.fold(acc, leaf_node(*leaves[i]));
        return initial(acc, 0);
    }

    // Values of every component vertex given the values of the external children
    // (in component order). Uses the pre-contraction payloads stored in c.data.
    std::vector<Value> resolve(const Component<Data>& c, std::span<const Value> stub_vals) const {
        const std::size_t m = c.size();
        auto offs = stub_offsets(c.kids);
        std::vector<Value> val(m);
        std::vector<Value> pos;
        std::vector<std::uint32_t> width;
        for (std::size_t ii = m; ii-- > 0;) {
            pos.clear();
            width.clear();
            for (std::size_t j = 0; j < c.kids[ii].size(); ++j) {
                const auto& e = c.kids[ii][j];
                if (e.is_stub()) {
                    for (std::uint32_t r = 0; r < e.run; ++r) pos.push_back(stub_vals[offs[ii][j] + r]), width.push_back(1);
                } else {
                    pos.push_back(val[static_cast<std::size_t>(e.node)]);
                    width.push_back(e.run);
                }
            }
            val[ii] = evaluate(c.data[ii], pos, width);
        }
        return val;
    }

    // Value of a residual given the values of the children of its vertex in
    // order; width[i] is the number of residual stubs child i occupies (all 1 if empty).
    Value evaluate(const Data& d, std::span<const Value> slot_vals, std::span<const std::uint32_t> width = {}) const {
        const std::size_t n = d.size();
        // slot index at which each stub entry starts, in depth-first order
        auto offs = stub_offsets(d.kids);
        std::vector<std::size_t> slot_at;  // stub position -> slot index (first position of a slot only)
        {
            std::size_t p = 0;
            for (std::size_t s = 0; s < slot_vals.size(); ++s) {
                std::size_t wdt = width.empty() ? 1 : width[s];
                for (std::size_t k = 0; k < wdt; ++k) slot_at.push_back(k == 0 ? s : static_cast<std::size_t>(-1));
                p += wdt;
            }
        }
        std::vector<Value> val(n);
        std::vector<Value> kv;
        for (std::size_t i = n; i-- > 0;) {
            kv.clear();
            for (std::size_t j = 0; j < d.kids[i].size(); ++j) {
                const auto& e = d.kids[i][j];
                if (e.is_stub()) {
                    for (std::uint32_t r = 0; r < e.run; ++r) {
                        std::size_t at = offs[i][j] + r;
                        if (at >= slot_at.size()) throw std::logic_error("residual has more stubs than children");
                        if (slot_at[at] != static_cast<std::size_t>(-1)) kv.push_back(slot_vals[slot_at[at]]);
                    }
                } else {
                    kv.push_back(val[static_cast<std::size_t>(e.node)]);
                }
            }
            val[i] = alg_.eval(d.nodes[i], kv);
        }
        return val[0];
    }

private:
    struct Work {
        std::vector<Node> nodes;
        std::vector<std::vector<Entry>> kids;
        std::int32_t root = -1;
    };

    Node leaf_node(const Data& d) const {
        if (d.stubs() != 0) throw std::logic_error("sibling fold applied to a non-leaf");
        Work w;
        for (std::size_t i = 0; i < d.size(); ++i) {
            w.nodes.push_back(d.nodes[i]);
            w.kids.push_back(d.kids[i]);
        }
        w.root = 0;
        reduce(w);
        if (!w.kids[0].empty()) throw std::logic_error("leaf residual did not collapse");
        return w.nodes[0];
    }

    void splice(const Component<Data>& c, Work& w) const {
        w.root = expand(c, 0, w);
    }

    std::int32_t expand(const Component<Data>& c, std::size_t i, Work& w) const {
        const Data& r = c.data[i];
        Cursor cur{c.kids[i], 0, 0};
        std::int32_t top = walk(c, r, 0, cur, w);
        if (cur.si != cur.slots.size()) throw std::logic_error("vertex has more children than its residual has stubs");
        return top;
    }

    struct Cursor {
        const std::vector<Entry>& slots;
        std::size_t si, off;
    };

    // copies residual node k (and its subtree) while consuming the parent vertex's child slots
    std::int32_t walk(const Component<Data>& c, const Data& r, std::size_t k, Cursor& cur, Work& w) const {
        auto me = static_cast<std::int32_t>(w.nodes.size());
        w.nodes.push_back(r.nodes[k]);
        w.kids.emplace_back();
        std::vector<Entry> out;
        for (const auto& e : r.kids[k]) {
            if (!e.is_stub()) {
                out.push_back(Entry::internal(walk(c, r, static_cast<std::size_t>(e.node), cur, w)));
                continue;
            }
            std::size_t need = e.run;
            while (need > 0) {
                if (cur.si >= cur.slots.size())
                    throw std::logic_error("residual has more stubs than the vertex has children");
                const Entry& s = cur.slots[cur.si];
                if (s.is_stub()) {
                    std::size_t take = std::min<std::size_t>(need, s.run - cur.off);
                    push_entry(out, Entry::stubs(static_cast<std::uint32_t>(take)));
                    need -= take;
                    cur.off += take;
                    if (cur.off == s.run) ++cur.si, cur.off = 0;
                } else {
                    if (cur.off != 0 || s.run > need)
                        throw std::logic_error("folded child straddles residual stub runs");
                    ++cur.si;
                    need -= s.run;
                    out.push_back(Entry::internal(expand(c, static_cast<std::size_t>(s.node), w)));
                }
            }
        }
        w.kids[static_cast<std::size_t>(me)] = std::move(out);
        return me;
    }

    void reduce(Work& w) const {
        // preorder of the spliced tree
        std::vector<std::int32_t> order, stack{w.root};
        while (!stack.empty()) {
            auto x = stack.back();
            stack.pop_back();
            order.push_back(x);
            for (auto it = w.kids[x].rbegin(); it != w.kids[x].rend(); ++it)
                if (!it->is_stub()) stack.push_back(it->node);
        }
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto x = static_cast<std::size_t>(*it);
            std::vector<Entry> kept;
            std::size_t pos = 0;
            for (const auto& e : w.kids[x]) {
                if (!e.is_stub() && w.kids[static_cast<std::size_t>(e.node)].empty()) {
                    w.nodes[x] = alg_.rake(w.nodes[x], w.nodes[static_cast<std::size_t>(e.node)], pos);
                    continue;
                }
                if (e.is_stub()) push_entry(kept, e);
                else kept.push_back(e);
                pos += e.width();
            }
            w.kids[x] = std::move(kept);
            if (static_cast<std::int32_t>(x) == w.root) continue;
            while (w.kids[x].size() == 1 && !w.kids[x][0].is_stub()) {
                auto u = static_cast<std::size_t>(w.kids[x][0].node);
                auto merged = alg_.compress(w.nodes[x], w.nodes[u]);
                if (!merged) break;
                w.nodes[x] = std::move(*merged);
                w.kids[x] = w.kids[u];
            }
        }
    }

    Data extract(const Work& w) const {
        Data d;
        std::vector<std::int32_t> order, stack{w.root};
        while (!stack.empty()) {
            auto x = stack.back();
            stack.pop_back();
            order.push_back(x);
            for (auto it = w.kids[x].rbegin(); it != w.kids[x].rend(); ++it)
                if (!it->is_stub()) stack.push_back(it->node);
        }
        std::vector<std::int32_t> idx(w.nodes.size(), -1);
        for (std::size_t i = 0; i < order.size(); ++i) idx[order[i]] = static_cast<std::int32_t>(i);
        for (auto x : order) {
            d.nodes.push_back(w.nodes[x]);
            std::vector<Entry> ks;
            for (const auto& e : w.kids[x]) {
                if (e.is_stub()) push_entry(ks, e);
                else ks.push_back(Entry::internal(idx[e.node]));
            }
            d.kids.push_back(std::move(ks));
        }
        return d;
    }

    U alg_;
    std::size_t arity_;
};

template <UnaryAlgebra U>
Lifted<U> lift_unary(U alg, std::size_t arity) {
    return Lifted<U>(std::move(alg), arity);
}

// Sequential rake/compress reference: rake every leaf, then fuse disjoint
// parent/only-child pairs, until the root is alone.
template <UnaryAlgebra U>
typename U::Value two_contraction_reference(const Tree& t, const std::vector<typename U::Node>& init, const U& alg,
                                            std::size_t* phases_out = nullptr) {
    using Node = typename U::Node;
    std::vector<Node> node = init;
    std::vector<std::vector<Vid>> kids = t.children;
    std::vector<Vid> par = t.parent;
    std::size_t phases = 0;
    while (!kids[t.root].empty()) {
        ++phases;
        auto seq = [&] {
            std::vector<Vid> out, st{t.root};
            while (!st.empty()) {
                Vid v = st.back();
                st.pop_back();
                out.push_back(v);
                for (auto it = kids[v].rbegin(); it != kids[v].rend(); ++it) st.push_back(*it);
            }
            return out;
        }();
        // rake
        for (Vid v : seq) {
            std::vector<Vid> kept;
            std::size_t pos = 0;
            for (Vid c : kids[v]) {
                if (kids[c].empty()) {
                    node[v] = alg.rake(node[v], node[c], pos);
                } else {
                    kept.push_back(c);
                    ++pos;
                }
            }
            kids[v] = std::move(kept);
        }
        // compress disjoint pairs along unary chains
        std::vector<bool> used(t.size(), false);
        for (Vid v : seq) {
            if (v == t.root || used[v] || kids[v].size() != 1) continue;
            Vid u = kids[v][0];
            if (used[u]) continue;
            auto m = alg.compress(node[v], node[u]);
            if (!m) continue;
            node[v] = std::move(*m);
            kids[v] = kids[u];
            for (Vid g : kids[v]) par[g] = v;
            kids[u].clear();
            used[v] = used[u] = true;
        }
    }
    if (phases_out) *phases_out = phases;
    return alg.eval(node[t.root], std::span<const typename U::Value>{});
}

}  // namespace tc::engine
