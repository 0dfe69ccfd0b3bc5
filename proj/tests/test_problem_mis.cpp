#include <gtest/gtest.h>

#include <random>

#include "tc/oracles/brute.hpp"
#include "tc/oracles/generators.hpp"
#include "tc/problems/mis.hpp"

using namespace tc;
using namespace tc::problems::mis;

namespace {

// bottom-up greedy: leaves join, a vertex joins iff none of its children did
std::vector<char> greedy_bottom_up(const Tree& t) {
    std::vector<char> in(t.size(), 0);
    for (Vid v : oracles::postorder(t)) {
        bool any = false;
        for (Vid u : t.children[v]) any = any || in[u];
        in[v] = !any;
    }
    return in;
}

// with bypass vertices: a bypass vertex is in iff some child is
std::vector<char> greedy_expanded(const Expanded& e) {
    const auto& t = e.tree;
    std::vector<char> in(t.size(), 0);
    for (Vid v : oracles::postorder(t)) {
        bool any = false;
        for (Vid u : t.children[v]) any = any || in[u];
        in[v] = e.bypass[v] ? any : !any;
    }
    return in;
}

Tree power_law(std::size_t n, std::uint64_t seed) {
    // preferential attachment: parent chosen proportional to degree + 1
    std::mt19937_64 rng(seed);
    std::vector<Vid> par(n, kNone), pool{0};
    for (Vid v = 1; v < n; ++v) {
        Vid p = pool[rng() % pool.size()];
        par[v] = p;
        pool.push_back(p);
        pool.push_back(v);
    }
    return Tree::from_parents(par);
}

void check_mis_solution(const Tree& t, const MisSolution& s) {
    auto cert = oracles::check_mis(t, s.in);
    EXPECT_TRUE(cert.ok()) << cert.detail;
    EXPECT_EQ(s.in, greedy_bottom_up(t));
    std::vector<char> exp(s.expanded.size());
    for (std::size_t v = 0; v < exp.size(); ++v) exp[v] = s.expanded[v].in;
    EXPECT_EQ(exp, greedy_expanded(s.scaffold));
    EXPECT_TRUE(s.totality);
    EXPECT_EQ(s.removal_check, "");
    EXPECT_TRUE(s.run.metrics.violations.empty());
}

}  // namespace

TEST(Bypass, IdentityWhenDegreesSmall) {
    auto t = oracles::path(10);
    auto e = bypass_expand(t, 3);
    EXPECT_EQ(e.tree.size(), 10u);
    EXPECT_EQ(e.tree.parent, t.parent);
}

TEST(Bypass, StarOfSeventeen) {
    auto t = oracles::star(17);
    ampc::SimConfig cfg;
    cfg.n = 17;
    ASSERT_EQ(cfg.lambda(), 4u);
    auto e = bypass_expand(t, cfg.lambda());
    EXPECT_EQ(e.tree.size(), 21u);
    EXPECT_EQ(e.tree.deg(0), 4u);
    for (Vid b = 17; b < 21; ++b) {
        EXPECT_TRUE(e.bypass[b]);
        EXPECT_EQ(e.tree.parent[b], 0u);
        EXPECT_EQ(e.tree.deg(b), 4u);
        EXPECT_EQ(e.tree.attr_int(b, "bypass"), 1);
    }
    // left to right: leaves 1..4 under the first bypass vertex
    EXPECT_EQ(e.tree.children[17], (std::vector<Vid>{1, 2, 3, 4}));
}

TEST(Bypass, SizeAtMostTwiceOnPowerLawTrees) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto t = power_law(2000, seed);
        for (std::size_t f : {2, 3, 8, 44}) {
            auto e = bypass_expand(t, f);
            EXPECT_LE(e.tree.size(), 2 * t.size());
            for (Vid v = 0; v < e.tree.size(); ++v) EXPECT_LE(e.tree.deg(v), f);
        }
    }
    EXPECT_THROW(bypass_expand(oracles::star(5), 1), std::invalid_argument);
}

TEST(MisbCombine, Examples) {
    MisbVertexData leaf;
    EXPECT_TRUE(misb_combine(leaf, {}));
    MisbVertexData v;
    std::vector<MisbChild> one{{true, {}}};
    EXPECT_FALSE(misb_combine(v, one));
    MisbVertexData b{true, std::nullopt, true};
    std::vector<MisbChild> mixed{{false, {}}, {true, {}}};
    EXPECT_TRUE(misb_combine(b, mixed));
    std::vector<MisbChild> none{{false, {}}, {false, {}}};
    EXPECT_FALSE(misb_combine(b, none));
}

TEST(MisbAlgebra, ChainFoldMatchesDirectEvaluation) {
    // 3-chain top -> mid -> bottom: fusing mid into bottom's edge preserves what top sees
    MisbAlgebra alg;
    for (int bits = 0; bits < 16; ++bits) {
        MisbNode mid{bool(bits & 1), bool(bits & 2), {}};
        MisbNode low{bool(bits & 4), true, {}};
        bool low_in_forced = bits & 8;
        MisbValue lv{low_in_forced, low.up.seen(low_in_forced)};
        std::vector<MisbValue> k{lv};
        auto direct = alg.eval(mid, k).seen;
        auto fused = alg.compress(mid, low);
        ASSERT_TRUE(fused);
        EXPECT_EQ(fused->up.seen(low_in_forced), direct);
    }
}

TEST(MisSolve, Examples) {
    ampc::SimConfig cfg;
    auto one = mis_solve(oracles::path(1), cfg);
    EXPECT_EQ(one.in, std::vector<char>{1});

    auto p3 = mis_solve(oracles::path(3), cfg);
    EXPECT_EQ(p3.in, (std::vector<char>{1, 0, 1}));

    auto s10 = mis_solve(oracles::star(10), cfg);
    EXPECT_EQ(s10.in[0], 0);
    for (Vid v = 1; v < 10; ++v) EXPECT_EQ(s10.in[v], 1);
}

TEST(MisSolve, BypassClosure) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        auto t = power_law(500, seed);
        auto s = mis_solve(t, ampc::SimConfig{});
        const auto& tp = s.scaffold.tree;
        for (Vid v = 0; v < tp.size(); ++v) {
            if (!s.scaffold.bypass[v]) continue;
            bool any = false;
            for (Vid u : tp.children[v]) any = any || s.expanded[u].in;
            EXPECT_EQ(s.expanded[v].in, any);
        }
        check_mis_solution(t, s);
    }
}

TEST(MisSolve, ExhaustiveShapesUpToNine) {
    for (std::size_t n = 1; n <= 9; ++n)
        for (const auto& t : oracles::all_shapes(n)) {
            auto s = mis_solve(t, ampc::SimConfig{});
            check_mis_solution(t, s);
            auto [lo, hi] = oracles::mis_size_range(t);
            std::size_t k = std::count(s.in.begin(), s.in.end(), 1);
            EXPECT_GE(k, lo);
            EXPECT_LE(k, hi);
        }
}

TEST(MisSolve, RandomTrees) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        std::size_t n = 1 + (seed * 257) % 500;
        auto t = seed % 3 == 0 ? oracles::star(n) : seed % 3 == 1 ? power_law(n, seed) : oracles::random_tree(n, seed);
        check_mis_solution(t, mis_solve(t, ampc::SimConfig{}));
    }
}

TEST(MaximalMatching, Examples) {
    ampc::SimConfig cfg;
    auto two = maximal_matching_solve(oracles::path(2), cfg);
    EXPECT_EQ(two.edges.size(), 1u);
    auto five = maximal_matching_solve(oracles::path(5), cfg);
    EXPECT_EQ(five.edges.size(), 2u);
    EXPECT_TRUE(oracles::maximal_matching(oracles::path(5), five.edges));
}

TEST(MaximalMatching, ShapesAndRandom) {
    for (std::size_t n = 1; n <= 9; ++n)
        for (const auto& t : oracles::all_shapes(n))
            EXPECT_TRUE(oracles::maximal_matching(t, maximal_matching_solve(t, ampc::SimConfig{}).edges));
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto t = seed % 2 ? power_law(700, seed) : oracles::star(100 + seed);
        auto m = maximal_matching_solve(t, ampc::SimConfig{});
        EXPECT_TRUE(oracles::maximal_matching(t, m.edges));
        EXPECT_TRUE(m.mis.run.metrics.violations.empty());
    }
}

TEST(Mwis, Examples) {
    ampc::SimConfig cfg;
    auto single = oracles::path(1);
    single.set_attr(0, "vw", 9);
    auto s1 = mwis_solve(single, cfg);
    EXPECT_EQ(s1.value, 9);
    EXPECT_EQ(s1.in, std::vector<char>{1});

    auto p = oracles::path(3);
    p.set_attr(0, "vw", 5);
    p.set_attr(1, "vw", 1);
    p.set_attr(2, "vw", 5);
    EXPECT_EQ(mwis_solve(p, cfg).value, 10);

    auto st = oracles::star(4);
    st.set_attr(0, "vw", 10);
    for (Vid v = 1; v < 4; ++v) st.set_attr(v, "vw", 4);
    auto s = mwis_solve(st, cfg);
    EXPECT_EQ(s.value, 12);
    EXPECT_EQ(s.in, (std::vector<char>{0, 1, 1, 1}));

    single.set_attr(0, "vw", -1);
    EXPECT_THROW(mwis_solve(single, cfg), InputError);
}

TEST(Mwis, ExhaustiveShapesAndRandom) {
    auto check = [](const Tree& t) {
        auto s = mwis_solve(t, ampc::SimConfig{});
        auto b = oracles::brute_mwis(t);
        EXPECT_EQ(s.value, b.value);
        std::int64_t w = 0;
        for (Vid v = 0; v < t.size(); ++v) {
            if (!s.in[v]) continue;
            w += t.attr_int(v, "vw");
            if (t.parent[v] != kNone) {
                EXPECT_FALSE(s.in[t.parent[v]]);
            }
        }
        EXPECT_EQ(w, s.value);
        EXPECT_TRUE(s.totality);
        EXPECT_TRUE(s.run.metrics.violations.empty());
        // per-vertex (in, out) against the sequential table
        auto d = oracles::brute_mwis_dp(t);
        std::vector<std::int64_t> with(t.size()), without(t.size());
        for (Vid v : oracles::postorder(t)) {
            with[v] = t.attr_int(v, "vw");
            for (Vid u : t.children[v]) with[v] += without[u], without[v] += std::max(with[u], without[u]);
        }
        for (Vid v = 0; v < t.size(); ++v) {
            EXPECT_EQ(s.per_vertex[v].in, Ext(with[v]));
            EXPECT_EQ(s.per_vertex[v].out, Ext(without[v]));
        }
        EXPECT_EQ(d.value, s.value);
    };
    for (std::size_t n = 1; n <= 9; ++n) {
        auto shapes = oracles::all_shapes(n);
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            auto t = shapes[i];
            oracles::set_vertex_weights(t, 0, 4, n * 977 + i);
            check(t);
        }
    }
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto t = seed % 2 ? power_law(400, seed) : oracles::random_tree(300, seed);
        oracles::set_vertex_weights(t, 0, 50, seed);
        check(t);
    }
}
