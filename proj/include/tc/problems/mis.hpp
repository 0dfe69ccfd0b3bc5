#pragma once

#include <algorithm>
#include <array>
#include <cmath>
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

namespace tc::problems::mis {

// ---- bypass expansion ----------------------------------------------------

struct Expanded {
    Tree tree;                  // T'; ids < n are the original vertices
    std::size_t original = 0;   // n
    std::vector<char> bypass;   // per vertex of T'
    std::size_t fan_out = 0;
};

// Every vertex with more than `fan_out` children gets a scaffold of bypass
// vertices: children are grouped left to right into runs of fan_out, each run
// under a new bypass vertex, level by level until fan_out or fewer remain.
// Bypass ids are assigned top level first, left to right.
inline Expanded bypass_expand(const Tree& t, std::size_t fan_out) {
    if (fan_out < 2) throw std::invalid_argument("fan-out must be at least 2");
    const std::size_t n = t.size();
    std::vector<Vid> par(t.parent.begin(), t.parent.end());
    std::vector<char> byp(n, 0);
    for (Vid v = 0; v < n; ++v) {
        if (t.deg(v) <= fan_out) continue;
        // levels[0] = original children; levels[k] = groups of levels[k-1]
        std::vector<std::vector<std::vector<Vid>>> groups;  // per level, groups of indices into the level below
        std::size_t cnt = t.deg(v);
        while (cnt > fan_out) {
            std::vector<std::vector<Vid>> g;
            for (std::size_t i = 0; i < cnt; i += fan_out) {
                g.emplace_back();
                for (std::size_t j = i; j < std::min(cnt, i + fan_out); ++j) g.back().push_back(static_cast<Vid>(j));
            }
            cnt = g.size();
            groups.push_back(std::move(g));
        }
        // allocate ids top level first
        std::vector<std::vector<Vid>> ids(groups.size());
        for (std::size_t lv = groups.size(); lv-- > 0;) {
            for (std::size_t k = 0; k < groups[lv].size(); ++k) {
                ids[lv].push_back(static_cast<Vid>(par.size()));
                par.push_back(kNone);
                byp.push_back(1);
            }
        }
        auto below = [&](std::size_t lv, std::size_t idx) -> Vid {
            return lv == 0 ? t.children[v][idx] : ids[lv - 1][idx];
        };
        for (std::size_t lv = 0; lv < groups.size(); ++lv)
            for (std::size_t k = 0; k < groups[lv].size(); ++k)
                for (Vid j : groups[lv][k]) par[below(lv, j)] = ids[lv][k];
        for (Vid b : ids.back()) par[b] = v;
    }
    Expanded e;
    e.original = n;
    e.fan_out = fan_out;
    e.tree = Tree::from_parents(par);
    for (Vid v = 0; v < n; ++v) e.tree.attrs[v] = t.attrs[v];
    for (Vid v = 0; v < e.tree.size(); ++v)
        if (byp[v]) e.tree.set_attr(v, "bypass", 1);
    e.bypass = std::move(byp);
    return e;
}

// ---- membership DP -------------------------------------------------------

// Per-vertex state. `in` is the membership bit: a standard vertex joins iff no
// child (seen through its edge) is in; a bypass vertex is in iff some child is.
struct MisbVertexData {
    bool bypass = false;
    std::optional<bool> in;
    bool a = true;  // product of (1 - seen bit) over raked children
};

// Bit seen by the parent: w1 if the child is in, w2 otherwise.
struct MisbEdgePair {
    bool w1 = true, w2 = false;
    bool seen(bool in) const { return in ? w1 : w2; }
    bool operator==(const MisbEdgePair&) const = default;
};

struct MisbChild {
    bool in;
    MisbEdgePair e;
};

inline bool misb_gate(bool bypass, bool none_in) { return bypass ? !none_in : none_in; }

inline bool misb_combine(const MisbVertexData& v, std::span<const MisbChild> kids) {
    bool none = v.a;
    for (const auto& k : kids) none = none && !k.e.seen(k.in);
    return misb_gate(v.bypass, none);
}

struct MisbNode {
    bool bypass = false;
    bool a = true;
    MisbEdgePair up;
    bool operator==(const MisbNode&) const = default;
};

struct MisbValue {
    bool in = false;
    bool seen = false;
    bool operator==(const MisbValue&) const = default;
};

struct MisbAlgebra {
    using Node = MisbNode;
    using Value = MisbValue;

    Value eval(const Node& n, std::span<const Value> kids) const {
        bool none = n.a;
        for (const auto& k : kids) none = none && !k.seen;
        Value v;
        v.in = misb_gate(n.bypass, none);
        v.seen = n.up.seen(v.in);
        return v;
    }
    Node rake(const Node& p, const Node& leaf, std::size_t) const {
        Node r = p;
        r.a = p.a && !eval(leaf, {}).seen;
        return r;
    }
    // the fused edge maps the lower vertex's bit to what p's parent sees
    std::optional<Node> compress(const Node& p, const Node& u) const {
        auto through = [&](bool x) {
            bool mid_in = misb_gate(p.bypass, p.a && !u.up.seen(x));
            return p.up.seen(mid_in);
        };
        Node r = u;
        r.up = {through(true), through(false)};
        return r;
    }
    Node fold(const Node& x, const Node& y) const {
        bool any = eval(x, {}).seen || eval(y, {}).seen;
        Node r;
        r.up = {any, any};
        return r;
    }
    void encode(const Node& n, std::vector<std::uint64_t>& out) const {
        out.push_back(std::uint64_t{n.bypass} | std::uint64_t{n.a} << 1 | std::uint64_t{n.up.w1} << 2 |
                      std::uint64_t{n.up.w2} << 3);
    }
    Node decode(const std::uint64_t*& p) const {
        std::uint64_t w = *p++;
        return {bool(w & 1), bool(w >> 1 & 1), {bool(w >> 2 & 1), bool(w >> 3 & 1)}};
    }
};

using MisbProblem = engine::Lifted<MisbAlgebra>;

inline MisbProblem::Data misb_connected_contract(const engine::Component<MisbProblem::Data>& c) { return MisbProblem{}.contract(c); }
inline MisbProblem::Data misb_sibling_contract(std::span<const MisbProblem::Data* const> leaves) { return MisbProblem{}.fold(leaves); }

inline std::vector<MisbNode> misb_nodes(const Expanded& e) {
    std::vector<MisbNode> v(e.tree.size());
    for (Vid i = 0; i < e.tree.size(); ++i) v[i].bypass = e.bypass[i];
    return v;
}

struct MisSolution {
    std::vector<char> in;             // original vertices
    std::vector<MisbValue> expanded;  // per vertex of T'
    Expanded scaffold;
    engine::Outcome<MisbProblem> run;
    bool totality = false;
    std::string removal_check;
};

// `post` runs against the simulator after reconstruction, before metrics are taken.
template <class Post>
MisSolution mis_solve(const Tree& t, ampc::SimConfig cfg, Post post) {
    cfg.n = t.size();
    MisSolution s;
    s.scaffold = bypass_expand(t, cfg.lambda());
    MisbProblem prob;
    auto init = problems::initial_payloads(s.scaffold.tree, prob, misb_nodes(s.scaffold));
    engine::Engine<MisbProblem> eng(s.scaffold.tree, init, prob, cfg);
    eng.sim().charge_subroutine("bypass-expand", cfg.inv_eps());
    s.run = eng.run_bounded();
    auto rec = engine::reconstruct(s.run.log, prob, &eng.sim());
    s.totality = rec.total();
    s.removal_check = s.run.log.check_removals();
    s.expanded = rec.value;
    s.in.assign(t.size(), 0);
    for (Vid v = 0; v < t.size(); ++v) s.in[v] = rec.value[v].in;
    post(s, eng.sim());
    s.run.metrics = eng.sim().metrics();
    return s;
}

inline MisSolution mis_solve(const Tree& t, ampc::SimConfig cfg) {
    return mis_solve(t, cfg, [](MisSolution&, ampc::Simulator&) {});
}

struct MatchingSolution {
    std::vector<std::pair<Vid, Vid>> edges;  // (child, parent)
    MisSolution mis;
};

// A vertex outside the set has a child in it; it takes its first such child.
// The search descends through the bypass scaffold, one level per round.
inline MatchingSolution maximal_matching_solve(const Tree& t, ampc::SimConfig cfg) {
    MatchingSolution m;
    m.mis = mis_solve(t, cfg, [&](MisSolution& s, ampc::Simulator& sim) {
        const auto& tp = s.scaffold.tree;
        const auto& val = s.expanded;
        std::size_t depth = 0;
        for (Vid v = 0; v < t.size(); ++v) {
            if (val[v].in) continue;
            Vid x = v;
            for (std::size_t d = 1;; ++d) {
                Vid next = kNone;
                for (Vid u : tp.children[x])
                    if (val[u].in) {
                        next = u;
                        break;
                    }
                if (next == kNone) throw std::logic_error("vertex outside the set without a member child");
                depth = std::max(depth, d);
                if (next < t.size()) {
                    m.edges.push_back({next, v});
                    break;
                }
                x = next;
            }
        }
        if (depth) sim.charge_subroutine("first-child", depth);
    });
    return m;
}

// ---- maximum weight independent set -------------------------------------

// Node constants: weight collected when the vertex is in / out, and the fused
// edge to the residual parent as W[top state][bottom state], 0 = in, 1 = out.
struct MwisNode {
    Ext in = 0, out = 0;
    std::array<std::array<Ext, 2>, 2> up{{{Ext::neg_inf(), Ext(0)}, {Ext(0), Ext(0)}}};
    bool operator==(const MwisNode&) const = default;
};

struct MwisValue {
    Ext in = 0, out = 0;           // best in the subtree with the vertex in / out
    Ext seen_in = 0, seen_out = 0;  // as the parent sees it, parent in / out
    bool operator==(const MwisValue&) const = default;
};

struct MwisAlgebra {
    using Node = MwisNode;
    using Value = MwisValue;

    static Value through(const Node& n, Ext in, Ext out) {
        Value v{in, out, emax(n.up[0][0] + in, n.up[0][1] + out), emax(n.up[1][0] + in, n.up[1][1] + out)};
        return v;
    }
    Value eval(const Node& n, std::span<const Value> kids) const {
        Ext in = n.in, out = n.out;
        for (const auto& k : kids) {
            in = in + k.seen_in;
            out = out + k.seen_out;
        }
        return through(n, in, out);
    }
    Node rake(const Node& p, const Node& leaf, std::size_t) const {
        Value l = eval(leaf, {});
        Node r = p;
        r.in = p.in + l.seen_in;
        r.out = p.out + l.seen_out;
        return r;
    }
    std::optional<Node> compress(const Node& p, const Node& u) const {
        Node r = u;
        const Ext mid[2] = {p.in, p.out};
        for (int t = 0; t < 2; ++t)
            for (int s = 0; s < 2; ++s) {
                Ext best = Ext::neg_inf();
                for (int m = 0; m < 2; ++m) best = emax(best, p.up[t][m] + mid[m] + u.up[m][s]);
                r.up[t][s] = best;
            }
        return r;
    }
    Node fold(const Node& x, const Node& y) const {
        Value a = eval(x, {}), b = eval(y, {});
        Node r;
        r.up = {{{Ext::neg_inf(), a.seen_in + b.seen_in}, {Ext::neg_inf(), a.seen_out + b.seen_out}}};
        return r;
    }
    void encode(const Node& n, std::vector<std::uint64_t>& out) const {
        out.push_back(n.in.word());
        out.push_back(n.out.word());
        for (auto& row : n.up)
            for (Ext e : row) out.push_back(e.word());
    }
    Node decode(const std::uint64_t*& p) const {
        Node n;
        n.in = Ext::from_word(*p++);
        n.out = Ext::from_word(*p++);
        for (auto& row : n.up)
            for (Ext& e : row) e = Ext::from_word(*p++);
        return n;
    }
};

using MwisProblem = engine::Lifted<MwisAlgebra>;

inline std::vector<MwisNode> mwis_nodes(const Tree& t) {
    std::vector<MwisNode> v(t.size());
    for (Vid i = 0; i < t.size(); ++i) {
        std::int64_t w = t.attr_int(i, "vw", 0);
        if (w < 0) throw InputError("negative vertex weight at vertex " + std::to_string(i));
        v[i].in = w;
        if (t.parent[i] == kNone) v[i].up = {{{Ext(0), Ext(0)}, {Ext(0), Ext(0)}}};
    }
    return v;
}

struct MwisSolution {
    std::int64_t value = 0;
    std::vector<char> in;
    std::vector<MwisValue> per_vertex;
    engine::Outcome<MwisProblem> run;
    bool totality = false;
    std::string removal_check;
};

// Top-down choice from per-vertex (in, out); ties leave the vertex out.
inline std::vector<char> choose_set(const Tree& t, const std::vector<MwisValue>& val) {
    std::vector<char> in(t.size(), 0);
    for (Vid v : preorder_sequence(t)) {
        Vid p = t.parent[v];
        bool blocked = p != kNone && in[p];
        in[v] = !blocked && val[v].in > val[v].out;
    }
    return in;
}

inline MwisSolution mwis_solve(const Tree& t, ampc::SimConfig cfg) {
    MwisSolution s;
    MwisProblem prob;
    auto init = problems::initial_payloads(t, prob, mwis_nodes(t));
    engine::Engine<MwisProblem> eng(t, init, prob, cfg);
    s.run = eng.run_general();
    s.value = emax(s.run.answer.in, s.run.answer.out).v;
    auto rec = engine::reconstruct(s.run.log, prob, &eng.sim());
    s.totality = rec.total();
    s.removal_check = s.run.log.check_removals();
    s.per_vertex = rec.value;
    s.in = choose_set(t, rec.value);
    // the top-down choice replays the log like reconstruction does
    if (rec.stages) eng.sim().charge_subroutine("choose-set", rec.stages);
    s.run.metrics = eng.sim().metrics();
    return s;
}

}  // namespace tc::problems::mis
