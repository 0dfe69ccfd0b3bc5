#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "tc/ampc/sim.hpp"
#include "tc/engine/contract.hpp"
#include "tc/engine/lift.hpp"
#include "tc/problems/sum.hpp"
#include "tc/tree.hpp"

namespace tc::problems::iso {

// ---- heights -----------------------------------------------------------------

// value = max(base, add + max over live children)
struct HeightNode {
    std::int64_t add = 1, base = 0;
    bool operator==(const HeightNode&) const = default;
};

struct HeightAlgebra {
    using Node = HeightNode;
    using Value = std::int64_t;

    Value eval(const Node& n, std::span<const Value> kids) const {
        Value v = n.base;
        for (auto k : kids) v = std::max(v, k + n.add);
        return v;
    }
    Node rake(const Node& p, const Node& leaf, std::size_t) const {
        return {p.add, std::max(p.base, eval(leaf, {}) + p.add)};
    }
    std::optional<Node> compress(const Node& p, const Node& u) const {
        return Node{p.add + u.add, std::max(p.base, u.base + p.add)};
    }
    Node fold(const Node& x, const Node& y) const { return {1, std::max(eval(x, {}), eval(y, {}))}; }
    void encode(const Node& n, std::vector<std::uint64_t>& out) const {
        out.push_back(static_cast<std::uint64_t>(n.add));
        out.push_back(static_cast<std::uint64_t>(n.base));
    }
    Node decode(const std::uint64_t*& p) const {
        Node n;
        n.add = static_cast<std::int64_t>(*p++);
        n.base = static_cast<std::int64_t>(*p++);
        return n;
    }
};

using HeightProblem = engine::Lifted<HeightAlgebra>;

struct Heights {
    std::vector<std::int64_t> h;  // leaves 0
    engine::Outcome<HeightProblem> run;
};

inline Heights heights(const Tree& t, ampc::SimConfig cfg) {
    HeightProblem prob;
    std::vector<HeightNode> nodes(t.size());
    auto init = problems::initial_payloads(t, prob, nodes);
    engine::Engine<HeightProblem> eng(t, init, prob, cfg);
    Heights out;
    out.run = eng.run_general();
    out.h = engine::reconstruct(out.run.log, prob, &eng.sim()).value;
    out.run.metrics = eng.sim().metrics();
    return out;
}

// ---- modular polynomial ----------------------------------------------------

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}
inline std::uint64_t addmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) + b) % m);
}
inline std::uint64_t submod(std::uint64_t a, std::uint64_t b, std::uint64_t m) { return addmod(a, m - b % m, m); }

// Q = A * (c * prod over live children (X - Q_child)) + B, all mod m.
// xp is the parent's variable, needed to fold sibling leaves.
struct PolyNode {
    std::uint64_t x = 0, xp = 0, c = 1, A = 1, B = 0;
    bool operator==(const PolyNode&) const = default;
};

struct PolyAlgebra {
    using Node = PolyNode;
    using Value = std::uint64_t;
    std::uint64_t m = 1;

    Value eval(const Node& n, std::span<const Value> kids) const {
        std::uint64_t p = n.c % m;
        for (auto k : kids) p = mulmod(p, submod(n.x, k, m), m);
        return addmod(mulmod(n.A, p, m), n.B, m);
    }
    Node rake(const Node& p, const Node& leaf, std::size_t) const {
        Node r = p;
        r.c = mulmod(p.c, submod(p.x, eval(leaf, {}), m), m);
        return r;
    }
    // p's value as an affine map of u's, composed with u's own map
    std::optional<Node> compress(const Node& p, const Node& u) const {
        std::uint64_t s = mulmod(p.A, p.c, m);  // Q_p = -s Q_u + (s X_p + B_p)
        std::uint64_t neg = submod(0, s, m);
        std::uint64_t off = addmod(mulmod(s, p.x, m), p.B, m);
        Node r = u;
        r.xp = p.xp;
        r.A = mulmod(neg, u.A, m);
        r.B = addmod(mulmod(neg, u.B, m), off, m);
        return r;
    }
    // one leaf standing for both: X_p - v = (X_p - v_x)(X_p - v_y)
    Node fold(const Node& a, const Node& b) const {
        std::uint64_t f = mulmod(submod(a.xp, eval(a, {}), m), submod(a.xp, eval(b, {}), m), m);
        Node r;
        r.x = a.x;
        r.xp = a.xp;
        r.c = 1;
        r.A = 0;
        r.B = submod(a.xp, f, m);
        return r;
    }
    void encode(const Node& n, std::vector<std::uint64_t>& out) const {
        for (auto w : {n.x, n.xp, n.c, n.A, n.B}) out.push_back(w);
    }
    Node decode(const std::uint64_t*& p) const {
        Node n;
        n.x = *p++;
        n.xp = *p++;
        n.c = *p++;
        n.A = *p++;
        n.B = *p++;
        return n;
    }
};

using PolyProblem = engine::Lifted<PolyAlgebra>;

// x_k for a vertex of height k >= 1; leaves never read theirs
inline std::vector<PolyNode> poly_nodes(const Tree& t, const std::vector<std::int64_t>& h,
                                        const std::vector<std::uint64_t>& xs) {
    std::vector<PolyNode> v(t.size());
    for (Vid i = 0; i < t.size(); ++i) {
        v[i].x = h[i] > 0 ? xs[static_cast<std::size_t>(h[i])] : 0;
        Vid p = t.parent[i];
        v[i].xp = p == kNone ? 0 : xs[static_cast<std::size_t>(h[p])];
    }
    return v;
}

// Sequential evaluation of the same polynomial, for tests.
inline std::uint64_t poly_direct(const Tree& t, const std::vector<std::int64_t>& h, const std::vector<std::uint64_t>& xs,
                                 std::uint64_t m) {
    std::vector<std::uint64_t> q(t.size(), 1);
    auto pre = preorder_sequence(t);
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
        Vid v = *it;
        std::uint64_t p = 1 % m;
        for (Vid u : t.children[v]) p = mulmod(p, submod(xs[static_cast<std::size_t>(h[v])], q[u], m), m);
        q[v] = p;
    }
    return q[t.root];
}

// ---- modulus --------------------------------------------------------------

inline std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
    std::uint64_t r = 1 % m;
    b %= m;
    while (e) {
        if (e & 1) r = mulmod(r, b, m);
        b = mulmod(b, b, m);
        e >>= 1;
    }
    return r;
}

// deterministic Miller-Rabin for 64-bit inputs
inline bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37})
        if (n % p == 0) return n == p;
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) d >>= 1, ++s;
    for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
        std::uint64_t x = powmod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool comp = true;
        for (int r = 1; r < s && comp; ++r) {
            x = mulmod(x, x, n);
            if (x == n - 1) comp = false;
        }
        if (comp) return false;
    }
    return true;
}

inline constexpr std::uint64_t kModulusCap = std::uint64_t{1} << 62;

// Without a prime table: a random integer in [B^2, 2 B^2] for B = h n^(alpha+1).
// With one: a random prime in [B, 2B]. Bounds are clamped to 2^62.
inline std::uint64_t pick_modulus(std::size_t n, std::size_t h, double alpha, bool prime, std::mt19937_64& rng) {
    long double base = static_cast<long double>(std::max<std::size_t>(h, 1)) *
                       std::pow(static_cast<long double>(std::max<std::size_t>(n, 2)), static_cast<long double>(alpha + 1));
    long double lo = prime ? base : base * base;
    long double cap = static_cast<long double>(kModulusCap) / 2;
    lo = std::min(std::max(lo, 3.0L), cap);
    auto L = static_cast<std::uint64_t>(lo);
    std::uint64_t H = 2 * L;
    std::uniform_int_distribution<std::uint64_t> d(L, H);
    if (!prime) return d(rng);
    for (;;) {
        std::uint64_t c = d(rng);
        if (is_prime(c)) return c;
    }
}

// ---- verdict --------------------------------------------------------------

struct IsoConfig {
    double alpha = 1.0;
    bool prime_table = false;
    std::uint64_t seed = 0;
};

struct IsoResult {
    bool isomorphic = false;
    std::uint64_t modulus = 0;
    std::uint64_t q_first = 0, q_second = 0;
    std::size_t height = 0;
    std::size_t rounds = 0;  // both trees, heights and polynomial passes
    std::vector<std::uint64_t> xs;
};

inline std::uint64_t polynomial(const Tree& t, const std::vector<std::int64_t>& h, const std::vector<std::uint64_t>& xs,
                                std::uint64_t m, ampc::SimConfig cfg, std::size_t* rounds = nullptr) {
    PolyProblem prob(PolyAlgebra{m});
    auto init = problems::initial_payloads(t, prob, poly_nodes(t, h, xs));
    auto out = engine::tree_contract(t, init, prob, cfg);
    if (rounds) *rounds += out.metrics.rounds;
    return out.answer;
}

// One-sided: isomorphic trees always agree; distinct ones differ with good probability.
inline IsoResult tree_isomorphism(const Tree& a, const Tree& b, ampc::SimConfig cfg, IsoConfig ic) {
    IsoResult r;
    auto ha = heights(a, cfg);
    auto hb = heights(b, cfg);
    r.rounds = ha.run.metrics.rounds + hb.run.metrics.rounds;
    std::int64_t h = std::max(ha.h[a.root], hb.h[b.root]);
    r.height = static_cast<std::size_t>(h);
    std::mt19937_64 rng(ic.seed);
    r.modulus = pick_modulus(std::max(a.size(), b.size()), r.height, ic.alpha, ic.prime_table, rng);
    std::uniform_int_distribution<std::uint64_t> dx(1, r.modulus);
    r.xs.assign(static_cast<std::size_t>(h) + 1, 0);
    for (std::size_t k = 1; k < r.xs.size(); ++k) r.xs[k] = dx(rng) % r.modulus;
    r.q_first = polynomial(a, ha.h, r.xs, r.modulus, cfg, &r.rounds);
    r.q_second = polynomial(b, hb.h, r.xs, r.modulus, cfg, &r.rounds);
    r.isomorphic = r.q_first == r.q_second;
    return r;
}

}  // namespace tc::problems::iso
