#pragma once

#include <array>
#include <boost/multiprecision/cpp_int.hpp>
#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tc/ampc/sim.hpp"
#include "tc/engine/contract.hpp"
#include "tc/engine/lift.hpp"
#include "tc/problems/sum.hpp"
#include "tc/tree.hpp"

namespace tc::problems::expr {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

struct ParseError : InputError {
    std::size_t position;
    ParseError(const std::string& what, std::size_t pos)
        : InputError(what + " at position " + std::to_string(pos)), position(pos) {}
};

struct ArithmeticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr unsigned kMaxExponent = 64;

// ---- tokens ----------------------------------------------------------------

enum class Tok : std::uint8_t { num, add, sub, mul, div, pow, lpar, rpar };

struct Token {
    Tok kind;
    std::size_t pos;  // byte offset in the source, or of the operator that produced it
    Rational value;   // num only
};

inline int level(Tok k) {
    switch (k) {
        case Tok::add:
        case Tok::sub: return 1;
        case Tok::mul:
        case Tok::div: return 2;
        case Tok::pow: return 3;
        default: return 0;
    }
}

inline char op_char(Tok k) {
    switch (k) {
        case Tok::add: return '+';
        case Tok::sub: return '-';
        case Tok::mul: return '*';
        case Tok::div: return '/';
        case Tok::pow: return '^';
        case Tok::lpar: return '(';
        case Tok::rpar: return ')';
        default: return '#';
    }
}

// ASCII operators plus the typographic minus, times and division signs.
inline std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto at = [&](std::string_view t) { return s.substr(i, t.size()) == t; };
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        std::size_t start = i;
        if (std::isdigit(c)) {
            BigInt num = 0, den = 1;
            bool dot = false;
            while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || (s[i] == '.' && !dot))) {
                if (s[i] == '.') dot = true;
                else {
                    num = num * 10 + (s[i] - '0');
                    if (dot) den *= 10;
                }
                ++i;
            }
            out.push_back({Tok::num, start, Rational(num, den)});
            continue;
        }
        Tok k;
        std::size_t len = 1;
        if (at("**")) k = Tok::pow, len = 2;
        else if (c == '+') k = Tok::add;
        else if (c == '-') k = Tok::sub;
        else if (c == '*') k = Tok::mul;
        else if (c == '/') k = Tok::div;
        else if (c == '(') k = Tok::lpar;
        else if (c == ')') k = Tok::rpar;
        else if (at("\xE2\x88\x92")) k = Tok::sub, len = 3;
        else if (at("\xC3\x97")) k = Tok::mul, len = 2;
        else if (at("\xC3\xB7")) k = Tok::div, len = 2;
        else throw ParseError(std::string("unexpected character '") + s[i] + "'", i);
        out.push_back({k, start, 0});
        i += len;
    }
    return out;
}

// Operand/operator alternation and parenthesis balance, checked in one scan.
inline void check_well_formed(const std::vector<Token>& t, std::size_t end_pos) {
    bool want_operand = true;
    long depth = 0;
    for (const auto& x : t) {
        if (x.kind == Tok::lpar) {
            if (!want_operand) throw ParseError("'(' after an operand", x.pos);
            ++depth;
        } else if (x.kind == Tok::rpar) {
            if (want_operand) throw ParseError("')' where an operand is expected", x.pos);
            if (--depth < 0) throw ParseError("unbalanced ')'", x.pos);
        } else if (x.kind == Tok::num) {
            if (!want_operand) throw ParseError("two operands in a row", x.pos);
            want_operand = false;
        } else {
            if (want_operand) throw ParseError("operator where an operand is expected", x.pos);
            want_operand = true;
        }
    }
    if (want_operand) throw ParseError("expression ends without an operand", end_pos);
    if (depth != 0) throw ParseError("unbalanced '('", end_pos);
}

// Precedence by parenthesis insertion with three levels: every '(' and ')'
// is tripled and the string wrapped in three pairs; an operator of level k
// closes and reopens 4-k pairs around itself. Afterwards every group holds
// operators of a single level.
inline std::vector<Token> insert_parens(const std::vector<Token>& t) {
    std::vector<Token> out;
    auto put = [&](Tok k, std::size_t n, std::size_t pos) {
        for (std::size_t i = 0; i < n; ++i) out.push_back({k, pos, 0});
    };
    put(Tok::lpar, 3, 0);
    for (const auto& x : t) {
        if (x.kind == Tok::lpar || x.kind == Tok::rpar) put(x.kind, 3, x.pos);
        else if (x.kind == Tok::num) out.push_back(x);
        else {
            std::size_t k = static_cast<std::size_t>(4 - level(x.kind));
            put(Tok::rpar, k, x.pos);
            out.push_back(x);
            put(Tok::lpar, k, x.pos);
        }
    }
    put(Tok::rpar, 3, t.empty() ? 0 : t.back().pos);
    return out;
}

inline std::string render(const std::vector<Token>& t) {
    std::string s;
    for (const auto& x : t) {
        if (x.kind == Tok::num) {
            s += x.value.str();
        } else if (x.kind == Tok::pow) {
            s += "**";
        } else {
            s += op_char(x.kind);
        }
    }
    return s;
}

// ---- parenthesis matching ------------------------------------------------

struct ParenMatch {
    std::vector<std::int64_t> match;  // partner index, -1 for non-parenthesis positions
    std::size_t chunks = 0;
    std::size_t levels = 0;  // pairwise merge levels after the in-chunk pass
};

// Each chunk of `chunk` characters matches locally and keeps a residue of
// unmatched ')' then unmatched '('. Adjacent residues merge pairwise per level:
// the left side's last opens meet the right side's first closes.
inline ParenMatch match_parens(std::string_view s, std::size_t chunk) {
    if (chunk < 2) chunk = 2;
    ParenMatch pm;
    pm.match.assign(s.size(), -1);
    struct Residue {
        std::vector<std::size_t> close, open;
    };
    std::vector<Residue> res;
    for (std::size_t b = 0; b < s.size(); b += chunk) {
        Residue r;
        for (std::size_t i = b; i < std::min(s.size(), b + chunk); ++i) {
            if (s[i] == '(') r.open.push_back(i);
            else if (s[i] == ')') {
                if (!r.open.empty()) {
                    std::size_t o = r.open.back();
                    r.open.pop_back();
                    pm.match[o] = static_cast<std::int64_t>(i);
                    pm.match[i] = static_cast<std::int64_t>(o);
                } else {
                    r.close.push_back(i);
                }
            }
        }
        res.push_back(std::move(r));
    }
    pm.chunks = res.size();
    while (res.size() > 1) {
        ++pm.levels;
        std::vector<Residue> next;
        for (std::size_t i = 0; i < res.size(); i += 2) {
            if (i + 1 == res.size()) {
                next.push_back(std::move(res[i]));
                continue;
            }
            Residue& L = res[i];
            Residue& R = res[i + 1];
            std::size_t k = std::min(L.open.size(), R.close.size());
            for (std::size_t j = 0; j < k; ++j) {
                std::size_t o = L.open[L.open.size() - 1 - j], c = R.close[j];
                pm.match[o] = static_cast<std::int64_t>(c);
                pm.match[c] = static_cast<std::int64_t>(o);
            }
            Residue m;
            m.close = L.close;
            m.close.insert(m.close.end(), R.close.begin() + static_cast<std::ptrdiff_t>(k), R.close.end());
            m.open.assign(L.open.begin(), L.open.end() - static_cast<std::ptrdiff_t>(k));
            m.open.insert(m.open.end(), R.open.begin(), R.open.end());
            next.push_back(std::move(m));
        }
        res = std::move(next);
    }
    if (!res.empty() && (!res[0].close.empty() || !res[0].open.empty())) {
        std::size_t bad = !res[0].close.empty() ? res[0].close.front() : res[0].open.front();
        throw ParseError("unbalanced parenthesis", bad);
    }
    return pm;
}

// ---- operator tree -------------------------------------------------------

struct ExprTree {
    Tree tree;
    std::vector<Tok> kind;                                // num or an operator
    std::vector<Rational> value;                          // numbers only
    std::vector<std::pair<std::size_t, std::size_t>> span;  // source byte range [first, last)
    std::size_t source_len = 0;
    std::size_t paren_levels = 0;
};

// Each group's operands are combined left to right, except '**' which nests to the right.
inline ExprTree simplify_expression(std::string_view src, std::size_t chunk) {
    auto toks = tokenize(src);
    if (toks.empty()) throw ParseError("empty expression", 0);
    check_well_formed(toks, src.size());
    auto ins = insert_parens(toks);
    std::string shape(ins.size(), '.');
    for (std::size_t i = 0; i < ins.size(); ++i)
        if (ins[i].kind == Tok::lpar) shape[i] = '(';
        else if (ins[i].kind == Tok::rpar) shape[i] = ')';
    auto pm = match_parens(shape, chunk);

    ExprTree et;
    et.source_len = src.size();
    et.paren_levels = pm.levels;
    std::vector<Vid> par;
    auto node = [&](Tok k, Rational v) {
        par.push_back(kNone);
        et.kind.push_back(k);
        et.value.push_back(std::move(v));
        et.span.push_back({0, 0});
        return static_cast<Vid>(par.size() - 1);
    };
    auto num_end = [&](std::size_t pos) {
        std::size_t e = pos;
        while (e < src.size() && (std::isdigit(static_cast<unsigned char>(src[e])) || src[e] == '.')) ++e;
        return e;
    };
    std::vector<std::array<Vid, 2>> kids;
    auto join = [&](Vid l, Tok op, Vid r) {
        Vid x = node(op, 0);
        kids.resize(par.size(), {kNone, kNone});
        kids[x] = {l, r};
        par[l] = x;
        par[r] = x;
        et.span[x] = {et.span[l].first, et.span[r].second};
        return x;
    };
    // group [lo, hi) of ins, parentheses excluded; explicit stack of pending groups
    struct Frame {
        std::size_t i, hi;
        std::vector<Vid> items;
        std::vector<Tok> ops;
    };
    auto close = [&](Frame& f) -> Vid {
        if (f.items.size() == 1) return f.items[0];
        if (f.ops[0] == Tok::pow) {
            Vid acc = f.items.back();
            for (std::size_t j = f.ops.size(); j-- > 0;) acc = join(f.items[j], f.ops[j], acc);
            return acc;
        }
        Vid acc = f.items[0];
        for (std::size_t j = 0; j < f.ops.size(); ++j) acc = join(acc, f.ops[j], f.items[j + 1]);
        return acc;
    };
    std::vector<Frame> st;
    st.push_back({0, ins.size(), {}, {}});
    while (!st.empty()) {
        Frame& f = st.back();
        if (f.i >= f.hi) {
            Vid r = close(f);
            st.pop_back();
            if (!st.empty()) st.back().items.push_back(r);
            continue;
        }
        const Token& x = ins[f.i];
        if (x.kind == Tok::lpar) {
            std::size_t open = f.i;
            auto m = static_cast<std::size_t>(pm.match[open]);
            f.i = m + 1;
            st.push_back({open + 1, m, {}, {}});
            continue;
        }
        if (x.kind == Tok::num) {
            Vid v = node(Tok::num, x.value);
            et.span[v] = {x.pos, num_end(x.pos)};
            f.items.push_back(v);
        } else if (x.kind != Tok::rpar) {
            if (!f.ops.empty() && level(f.ops[0]) != level(x.kind)) throw std::logic_error("group mixes precedence levels");
            f.ops.push_back(x.kind);
        }
        ++f.i;
    }
    // renumber in preorder so that id order is operand order
    kids.resize(par.size(), {kNone, kNone});
    Vid root = kNone;
    for (Vid v = 0; v < par.size(); ++v)
        if (par[v] == kNone) root = v;
    std::vector<Vid> order, stack{root};
    while (!stack.empty()) {
        Vid v = stack.back();
        stack.pop_back();
        order.push_back(v);
        if (kids[v][0] != kNone) stack.push_back(kids[v][1]), stack.push_back(kids[v][0]);
    }
    std::vector<Vid> id(par.size());
    for (Vid i = 0; i < order.size(); ++i) id[order[i]] = i;
    std::vector<Vid> npar(par.size());
    ExprTree out;
    out.source_len = et.source_len;
    out.paren_levels = et.paren_levels;
    for (Vid i = 0; i < order.size(); ++i) {
        Vid v = order[i];
        npar[i] = par[v] == kNone ? kNone : id[par[v]];
        out.kind.push_back(et.kind[v]);
        out.value.push_back(et.value[v]);
        out.span.push_back(et.span[v]);
    }
    out.tree = Tree::from_parents(npar);
    return out;
}

// Source text of a vertex, widened until its parentheses balance.
inline std::string subexpression(std::string_view src, const ExprTree& et, Vid v) {
    std::vector<std::int64_t> partner(src.size(), -1);
    std::vector<std::size_t> open;
    for (std::size_t i = 0; i < src.size(); ++i) {
        if (src[i] == '(') open.push_back(i);
        else if (src[i] == ')' && !open.empty()) {
            partner[i] = static_cast<std::int64_t>(open.back());
            partner[open.back()] = static_cast<std::int64_t>(i);
            open.pop_back();
        }
    }
    auto [a, b] = et.span[v];
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = a; i < b; ++i) {
            if (partner[i] < 0) continue;
            auto q = static_cast<std::size_t>(partner[i]);
            if (q < a) a = q, changed = true;
            if (q >= b) b = q + 1, changed = true;
        }
    }
    return std::string(src.substr(a, b - a));
}

// ---- algebra ---------------------------------------------------------------

struct Value {
    Rational q = 0;
    bool bad = false;  // undefined: a division by zero or an invalid exponent below
    bool operator==(const Value&) const = default;
};

inline Value apply(Tok op, const Value& l, const Value& r) {
    if (l.bad || r.bad) return {0, true};
    switch (op) {
        case Tok::add: return {l.q + r.q};
        case Tok::sub: return {l.q - r.q};
        case Tok::mul: return {l.q * r.q};
        case Tok::div:
            if (r.q == 0) return {0, true};
            return {l.q / r.q};
        case Tok::pow: {
            if (denominator(r.q) != 1 || r.q < 0 || r.q > kMaxExponent) return {0, true};
            auto k = static_cast<unsigned>(numerator(r.q));
            Rational p = 1;
            for (unsigned i = 0; i < k; ++i) p *= l.q;
            return {p};
        }
        default: throw std::logic_error("not an operator");
    }
}

// Residual node. `fn` nodes are a function of their single live child:
// a Moebius map x -> (a x + b) / (c x + d), or x ** k, or k ** x.
struct Node {
    enum Kind : std::uint8_t { constant, binary, moebius, pow_exp, pow_base } kind = constant;
    Tok op = Tok::num;
    bool bad = false;
    std::array<Rational, 4> m{1, 0, 0, 1};  // constant: m[0]; pow_exp / pow_base: m[0] is k
    bool operator==(const Node&) const = default;
};

inline Node moebius(Rational a, Rational b, Rational c, Rational d) {
    Node n;
    n.kind = Node::moebius;
    // scale so the first nonzero of (c, d) is 1
    Rational s = c != 0 ? c : d;
    if (s != 0 && s != 1) a /= s, b /= s, c /= s, d /= s;
    n.m = {std::move(a), std::move(b), std::move(c), std::move(d)};
    return n;
}

inline Value apply_fn(const Node& n, const Value& x) {
    if (n.bad || x.bad) return {0, true};
    switch (n.kind) {
        case Node::moebius: {
            Rational den = n.m[2] * x.q + n.m[3];
            if (den == 0) return {0, true};
            return {(n.m[0] * x.q + n.m[1]) / den};
        }
        case Node::pow_exp: return apply(Tok::pow, x, {n.m[0]});
        case Node::pow_base: return apply(Tok::pow, {n.m[0]}, x);
        default: throw std::logic_error("not a unary node");
    }
}

struct Algebra {
    using Node = expr::Node;
    using Value = expr::Value;

    Value eval(const Node& n, std::span<const Value> kids) const {
        switch (n.kind) {
            case Node::constant:
                if (!kids.empty()) throw std::logic_error("constant with children");
                return {n.m[0], n.bad};
            case Node::binary:
                if (kids.size() != 2) throw std::logic_error("binary operator needs two operands");
                return apply(n.op, kids[0], kids[1]);
            default:
                if (kids.size() != 1) throw std::logic_error("unary node needs one operand");
                return apply_fn(n, kids[0]);
        }
    }
    Node rake(const Node& p, const Node& leaf, std::size_t pos) const {
        Value v = eval(leaf, {});
        if (p.kind != Node::binary) {
            Value r = apply_fn(p, v);
            Node c;
            c.m[0] = r.q;
            c.bad = r.bad;
            return c;
        }
        Node r;
        if (v.bad) {
            r = moebius(1, 0, 0, 1);
            r.bad = true;
            return r;
        }
        const Rational& k = v.q;
        if (pos == 0) {  // left operand known
            switch (p.op) {
                case Tok::add: return moebius(1, k, 0, 1);
                case Tok::sub: return moebius(-1, k, 0, 1);
                case Tok::mul: return moebius(k, 0, 0, 1);
                case Tok::div: return moebius(0, k, 1, 0);
                default: r.kind = Node::pow_base, r.m[0] = k; return r;
            }
        }
        switch (p.op) {
            case Tok::add: return moebius(1, k, 0, 1);
            case Tok::sub: return moebius(1, -k, 0, 1);
            case Tok::mul: return moebius(k, 0, 0, 1);
            case Tok::div:
                if (k == 0) {
                    r = moebius(1, 0, 0, 1);
                    r.bad = true;
                    return r;
                }
                return moebius(1, 0, 0, k);
            default: r.kind = Node::pow_exp, r.m[0] = k; return r;
        }
    }
    // only two Moebius maps fuse
    std::optional<Node> compress(const Node& p, const Node& u) const {
        if (p.kind != Node::moebius || u.kind != Node::moebius) return std::nullopt;
        const auto& A = p.m;
        const auto& a = u.m;
        Node r = moebius(A[0] * a[0] + A[1] * a[2], A[0] * a[1] + A[1] * a[3], A[2] * a[0] + A[3] * a[2],
                         A[2] * a[1] + A[3] * a[3]);
        r.bad = p.bad || u.bad;
        return r;
    }
    Node fold(const Node&, const Node&) const { throw std::logic_error("operands are ordered; no sibling folding"); }

    void encode(const Node& n, std::vector<std::uint64_t>& out) const {
        out.push_back(static_cast<std::uint64_t>(n.kind) | static_cast<std::uint64_t>(n.op) << 8 |
                      static_cast<std::uint64_t>(n.bad) << 16);
        std::size_t k = n.kind == Node::binary ? 0 : n.kind == Node::moebius ? 4 : 1;
        for (std::size_t i = 0; i < k; ++i) {
            put(numerator(n.m[i]), out);
            put(denominator(n.m[i]), out);
        }
    }
    Node decode(const std::uint64_t*& p) const {
        Node n;
        std::uint64_t h = *p++;
        n.kind = static_cast<Node::Kind>(h & 0xff);
        n.op = static_cast<Tok>(h >> 8 & 0xff);
        n.bad = (h >> 16 & 1) != 0;
        std::size_t k = n.kind == Node::binary ? 0 : n.kind == Node::moebius ? 4 : 1;
        for (std::size_t i = 0; i < k; ++i) {
            BigInt num = get(p);
            BigInt den = get(p);
            n.m[i] = Rational(num, den);
        }
        return n;
    }

private:
    // sign and limb count in one word, then 64-bit limbs, least significant first
    static void put(const BigInt& x, std::vector<std::uint64_t>& out) {
        std::vector<std::uint64_t> limbs;
        BigInt a = abs(x);
        boost::multiprecision::export_bits(a, std::back_inserter(limbs), 64, false);
        if (a == 0) limbs.clear();
        out.push_back(limbs.size() << 1 | (x < 0 ? 1u : 0u));
        out.insert(out.end(), limbs.begin(), limbs.end());
    }
    static BigInt get(const std::uint64_t*& p) {
        std::uint64_t h = *p++;
        std::size_t k = h >> 1;
        BigInt x = 0;
        if (k) boost::multiprecision::import_bits(x, p, p + k, 64, false);
        p += k;
        return (h & 1) ? BigInt(-x) : x;
    }
};

using Problem = engine::Lifted<Algebra>;

inline std::vector<Node> initial_nodes(const ExprTree& et) {
    std::vector<Node> v(et.tree.size());
    for (Vid i = 0; i < et.tree.size(); ++i) {
        if (et.kind[i] == Tok::num) {
            v[i].kind = Node::constant;
            v[i].m[0] = et.value[i];
        } else {
            v[i].kind = Node::binary;
            v[i].op = et.kind[i];
        }
    }
    return v;
}

struct Evaluation {
    Rational value;
    ExprTree tree;
    engine::Outcome<Problem> run;
    std::vector<Value> per_vertex;
    bool totality = false;
};

// Payload words grow with the digits of the intermediate rationals, so the
// per-degree word allowance here is larger than for the fixed-width problems.
inline constexpr std::size_t kExprWordsPerDegree = 256;

inline Evaluation evaluate_expression(std::string_view src, ampc::SimConfig cfg) {
    cfg.n = std::max<std::size_t>(src.size(), 1);
    cfg.C_w = std::max(cfg.C_w, kExprWordsPerDegree);
    Evaluation e;
    e.tree = simplify_expression(src, cfg.lambda());
    Problem prob;
    auto init = problems::initial_payloads(e.tree.tree, prob, initial_nodes(e.tree));
    engine::Engine<Problem> eng(e.tree.tree, init, prob, cfg);
    // tokenize + insertion: one round each; depth prefix sums and tree links: 1/eps each
    eng.sim().charge_subroutine("tokenize", 1);
    eng.sim().charge_subroutine("insert-parens", 1);
    if (e.tree.paren_levels) eng.sim().charge_subroutine("match-parens", e.tree.paren_levels * cfg.inv_eps());
    eng.sim().charge_subroutine("operator-tree", 2 * cfg.inv_eps());
    e.run = eng.run_bounded();
    auto rec = engine::reconstruct(e.run.log, prob, &eng.sim());
    e.totality = rec.total();
    e.per_vertex = rec.value;
    e.run.metrics = eng.sim().metrics();
    // the deepest offending operator names the error
    const auto& t = e.tree.tree;
    auto pre = preorder_sequence(t);
    for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
        Vid v = *it;
        Tok k = e.tree.kind[v];
        if (k != Tok::div && k != Tok::pow) continue;
        const Value& r = rec.value[t.children[v][1]];
        const Value& l = rec.value[t.children[v][0]];
        if (l.bad || r.bad) continue;
        if (k == Tok::div && r.q == 0)
            throw ArithmeticError("division by zero in '" + subexpression(src, e.tree, v) + "'");
        if (k == Tok::pow && (denominator(r.q) != 1 || r.q < 0 || r.q > kMaxExponent))
            throw ArithmeticError("exponent must be an integer in [0, 64] in '" + subexpression(src, e.tree, v) + "'");
    }
    if (e.run.answer.bad) throw std::logic_error("undefined result without an offending operator");
    e.value = e.run.answer.q;
    return e;
}

}  // namespace tc::problems::expr
