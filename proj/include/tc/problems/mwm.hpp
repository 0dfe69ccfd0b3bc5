#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "tc/ampc/sim.hpp"
#include "tc/engine/contract.hpp"
#include "tc/engine/lift.hpp"
#include "tc/ext.hpp"
#include "tc/problems/sum.hpp"
#include "tc/tree.hpp"

namespace tc::problems::mwm {

// Weights of the four boundary conditions of a (possibly fused) edge path from
// an upper vertex to a lower vertex: {upper used, upper free} x {lower used, lower free}.
struct MwmEdgeTuple {
    Ext w1 = Ext::neg_inf();  // upper matched into the path, lower matched into the path
    Ext w2 = Ext::neg_inf();  // upper matched into the path, lower free
    Ext w3 = Ext::neg_inf();  // upper free, lower matched into the path
    Ext w4 = 0;               // upper free, lower free

    static MwmEdgeTuple fresh(std::int64_t w) { return {Ext(w), Ext::neg_inf(), Ext::neg_inf(), Ext(0)}; }
    bool operator==(const MwmEdgeTuple&) const = default;
};

struct MwmVertexData {
    std::optional<Ext> c, c_prime;
    Ext a = 0, b = 0;
    std::optional<Vid> match_ptr;
};

// A child as its parent sees it: contribution when the parent stays out of the
// path (A) and when the parent is matched into it (B).
inline Ext seen_free(const MwmEdgeTuple& e, Ext c, Ext cp) { return emax(e.w3 + cp, e.w4 + c); }
inline Ext seen_used(const MwmEdgeTuple& e, Ext c, Ext cp) { return emax(e.w1 + cp, e.w2 + c); }

struct Combined {
    Ext c, c_prime;
    std::optional<std::size_t> best;  // index into children of the chosen child
};

struct ChildIn {
    Ext c, c_prime;
    MwmEdgeTuple e;
    Vid id = kNone;
};

// c'_v = sum A_u + b_v;  c_v = max(max_u (B_u - A_u), a_v, 0) + sum A_u + b_v.
// Ties prefer leaving v unmatched, then the first child.
inline Combined dp_combine(const MwmVertexData& v, std::span<const ChildIn> kids) {
    Ext sum = 0;
    Ext best_gain = emax(v.a, Ext(0));
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < kids.size(); ++i) {
        Ext A = seen_free(kids[i].e, kids[i].c, kids[i].c_prime);
        if (!A.finite()) throw std::logic_error("child contribution without a free option");
        sum = sum + A;
        Ext g = seen_used(kids[i].e, kids[i].c, kids[i].c_prime) - A;
        if (g > best_gain) {
            best_gain = g;
            best = i;
        }
    }
    return {best_gain + sum + v.b, sum + v.b, best};
}

// Absorbs resolved leaves into their parent's constants.
inline void trim_leaves(MwmVertexData& p, std::span<const ChildIn> leaves) {
    for (const auto& l : leaves) {
        Ext A = seen_free(l.e, l.c, l.c_prime);
        p.a = emax(p.a, seen_used(l.e, l.c, l.c_prime) - A);
        p.b = p.b + A;
    }
}

// Fuses upper edge (into mid) and lower edge (out of mid) where mid's own
// remaining subtree has values c_mid (mid free) and c_mid_prime (mid used).
inline MwmEdgeTuple contract_chain(const MwmEdgeTuple& up, const MwmEdgeTuple& lo, Ext c_mid, Ext c_mid_prime) {
    auto U = [&](bool top_used, bool bot_used) -> Ext {
        if (top_used) return bot_used ? up.w1 : up.w2;
        return bot_used ? up.w3 : up.w4;
    };
    auto L = [&](bool top_used, bool bot_used) -> Ext {
        if (top_used) return bot_used ? lo.w1 : lo.w2;
        return bot_used ? lo.w3 : lo.w4;
    };
    auto f = [&](bool t, bool s) {
        Ext x = U(t, true) + c_mid_prime + L(false, s);
        x = emax(x, U(t, false) + c_mid_prime + L(true, s));
        x = emax(x, U(t, false) + c_mid + L(false, s));
        return x;
    };
    return {f(true, true), f(true, false), f(false, true), f(false, false)};
}

struct Value {
    Ext c = 0, c_prime = 0;
    Ext A = 0, B = Ext::neg_inf();  // as seen by the parent through the up edge
    bool operator==(const Value&) const = default;
};

// Residual node: constants (a, b) and the tuple of the edge to its residual parent.
struct Node {
    Ext a = 0, b = 0;
    MwmEdgeTuple up;
    bool operator==(const Node&) const = default;
};

struct Algebra {
    using Node = mwm::Node;
    using Value = mwm::Value;

    Value eval(const Node& n, std::span<const Value> kids) const {
        Ext sum = 0, gain = emax(n.a, Ext(0));
        for (const auto& k : kids) {
            if (!k.A.finite()) throw std::logic_error("child contribution without a free option");
            sum = sum + k.A;
            gain = emax(gain, k.B - k.A);
        }
        Value v;
        v.c_prime = sum + n.b;
        v.c = gain + sum + n.b;
        v.A = seen_free(n.up, v.c, v.c_prime);
        v.B = seen_used(n.up, v.c, v.c_prime);
        return v;
    }
    Node rake(const Node& p, const Node& leaf, std::size_t) const {
        Value l = eval(leaf, {});
        Node r = p;
        r.a = emax(p.a, l.B - l.A);
        r.b = p.b + l.A;
        return r;
    }
    std::optional<Node> compress(const Node& p, const Node& u) const {
        Node r = u;
        r.up = contract_chain(p.up, u.up, emax(p.a, Ext(0)) + p.b, p.b);
        return r;
    }
    // two sibling leaves become one leaf behind a virtual vertex
    Node fold(const Node& x, const Node& y) const {
        Value vx = eval(x, {}), vy = eval(y, {});
        Ext A = vx.A + vy.A;
        Ext B = emax(vx.B + vy.A, vx.A + vy.B);
        Node r;
        r.up = {Ext::neg_inf(), B, Ext::neg_inf(), A};
        return r;
    }
    void encode(const Node& n, std::vector<std::uint64_t>& out) const {
        for (Ext e : {n.a, n.b, n.up.w1, n.up.w2, n.up.w3, n.up.w4}) out.push_back(e.word());
    }
    Node decode(const std::uint64_t*& p) const {
        Node n;
        n.a = Ext::from_word(*p++);
        n.b = Ext::from_word(*p++);
        n.up.w1 = Ext::from_word(*p++);
        n.up.w2 = Ext::from_word(*p++);
        n.up.w3 = Ext::from_word(*p++);
        n.up.w4 = Ext::from_word(*p++);
        return n;
    }
};

struct Problem : engine::Lifted<Algebra> {
    using engine::Lifted<Algebra>::Lifted;
    // residual nodes beyond 2*stubs+1
    std::size_t residual_excess(const Data& d) const {
        std::size_t cap = 2 * d.stubs() + 1;
        return d.size() > cap ? d.size() - cap : 0;
    }
};

inline std::vector<Node> initial_nodes(const Tree& t) {
    std::vector<Node> v(t.size());
    for (Vid i = 0; i < t.size(); ++i) {
        if (t.parent[i] == kNone) v[i].up = {Ext::neg_inf(), Ext::neg_inf(), Ext::neg_inf(), Ext(0)};
        else v[i].up = MwmEdgeTuple::fresh(t.attr_int(i, "ew", 0));
    }
    return v;
}

// The connected contracting function.
inline Problem::Data mwm_connected_contract(const engine::Component<Problem::Data>& c) { return Problem{}.contract(c); }
// The sibling contracting function.
inline Problem::Data mwm_sibling_contract(std::span<const Problem::Data* const> leaves) { return Problem{}.fold(leaves); }

struct Matching {
    std::vector<std::pair<Vid, Vid>> edges;  // (child, parent)
    std::int64_t weight = 0;
    std::size_t levels = 0;  // segmentation levels used to rank pointer paths
};

// match_ptr from resolved per-vertex values and fresh edge tuples.
inline std::vector<std::optional<Vid>> match_pointers(const Tree& t, const std::vector<Value>& val) {
    std::vector<std::optional<Vid>> ptr(t.size());
    for (Vid v = 0; v < t.size(); ++v) {
        MwmVertexData d;
        std::vector<ChildIn> kids;
        for (Vid u : t.children[v])
            kids.push_back({val[u].c, val[u].c_prime, MwmEdgeTuple::fresh(t.attr_int(u, "ew", 0)), u});
        auto r = dp_combine(d, kids);
        if (r.best) ptr[v] = kids[*r.best].id;
    }
    return ptr;
}

// Pointer paths are descending chains; edges at even positions from each top
// are matched. Positions are found by segmenting every path into blocks of
// lambda, ranking blocks recursively, and pushing offsets back down.
inline Matching extract_matching(const Tree& t, const std::vector<std::optional<Vid>>& ptr, std::size_t lambda,
                                 ampc::Simulator* sim = nullptr) {
    Matching m;
    const std::size_t n = t.size();
    std::vector<char> pointed(n, 0);
    for (Vid v = 0; v < n; ++v)
        if (ptr[v]) {
            if (t.parent[*ptr[v]] != v) throw std::logic_error("match pointer to a non-child");
            pointed[*ptr[v]] = 1;
        }
    std::vector<std::vector<Vid>> paths;
    for (Vid v = 0; v < n; ++v) {
        if (!ptr[v] || pointed[v]) continue;
        std::vector<Vid> p{v};
        std::size_t guard = 0;
        while (ptr[p.back()]) {
            p.push_back(*ptr[p.back()]);
            if (++guard > n) throw std::logic_error("pointer cycle");
        }
        paths.push_back(std::move(p));
    }
    // segmented ranking: level lists of block sizes
    std::size_t levels = 0;
    std::vector<std::vector<std::size_t>> lens;  // per path, lengths of blocks at the current level
    for (auto& p : paths) lens.push_back(std::vector<std::size_t>(p.size(), 1));
    std::vector<std::vector<std::vector<std::size_t>>> history;
    for (;;) {
        bool more = false;
        for (auto& l : lens)
            if (l.size() > 1) more = true;
        if (!more) break;
        ++levels;
        history.push_back(lens);
        for (auto& l : lens) {
            std::vector<std::size_t> nl;
            for (std::size_t i = 0; i < l.size(); i += lambda) {
                std::size_t s = 0;
                for (std::size_t j = i; j < std::min(l.size(), i + lambda); ++j) s += l[j];
                nl.push_back(s);
            }
            l = std::move(nl);
        }
    }
    // unroll: offsets of blocks, top level first
    std::vector<std::vector<std::size_t>> off(paths.size(), std::vector<std::size_t>{0});
    for (std::size_t lv = history.size(); lv-- > 0;) {
        for (std::size_t pi = 0; pi < paths.size(); ++pi) {
            const auto& l = history[lv][pi];
            std::vector<std::size_t> no(l.size());
            for (std::size_t bi = 0; bi < off[pi].size(); ++bi) {
                std::size_t cur = off[pi][bi];
                for (std::size_t j = bi * lambda; j < std::min(l.size(), (bi + 1) * lambda); ++j) {
                    no[j] = cur;
                    cur += l[j];
                }
            }
            off[pi] = std::move(no);
        }
    }
    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
        const auto& p = paths[pi];
        for (std::size_t i = 0; i + 1 < p.size(); ++i)
            if (off[pi][i] % 2 == 0) {
                m.edges.push_back({p[i + 1], p[i]});
                m.weight += t.attr_int(p[i + 1], "ew", 0);
            }
    }
    m.levels = levels;
    if (sim && levels) sim->charge_subroutine("path-ranking", 2 * levels);
    return m;
}

inline bool is_matching(const Tree& t, const std::vector<std::pair<Vid, Vid>>& edges) {
    std::vector<char> used(t.size(), 0);
    for (auto [c, p] : edges) {
        if (c >= t.size() || t.parent[c] != p) return false;
        if (used[c] || used[p]) return false;
        used[c] = used[p] = 1;
    }
    return true;
}

struct Solution {
    std::int64_t value = 0;
    Matching matching;
    std::vector<Value> per_vertex;
    engine::Outcome<Problem> run;
    std::size_t reconstruct_total = 0;
    bool totality = false;
    std::string removal_check;
};

inline Solution solve(const Tree& t, ampc::SimConfig cfg, bool general = true) {
    Problem prob;
    auto nodes = initial_nodes(t);
    auto init = problems::initial_payloads(t, prob, nodes);
    Solution s;
    engine::Engine<Problem> eng(t, init, prob, cfg);
    s.run = general ? eng.run_general() : eng.run_bounded();
    s.value = s.run.answer.c.v;
    auto rec = engine::reconstruct(s.run.log, prob, &eng.sim());
    s.totality = rec.total();
    s.removal_check = s.run.log.check_removals();
    s.per_vertex = rec.value;
    auto ptr = match_pointers(t, rec.value);
    s.matching = extract_matching(t, ptr, eng.lambda(), &eng.sim());
    s.run.metrics = eng.sim().metrics();
    return s;
}

}  // namespace tc::problems::mwm
