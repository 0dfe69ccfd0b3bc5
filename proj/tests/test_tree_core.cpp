#include <gtest/gtest.h>

#include <random>

#include "tc/decomposition.hpp"
#include "tc/oracles/generators.hpp"
#include "tc/tree.hpp"

using namespace tc;

namespace {

std::map<Vid, std::uint32_t> ranks(const Tree& t) {
    auto r = preorder_number(t);
    std::map<Vid, std::uint32_t> m;
    for (Vid v = 0; v < t.size(); ++v) m[v] = r[v];
    return m;
}

Tree star_with_order(std::vector<Vid> kids) {
    // root 0; children listed in the given order
    std::string s = std::to_string(kids.size() + 1) + " 0\n0 -\n";
    for (Vid k : kids) s += std::to_string(k) + " 0\n";
    return parse_tree_string(s);
}

}  // namespace

TEST(Preorder, SingleVertex) { EXPECT_EQ(ranks(oracles::path(1)), (std::map<Vid, std::uint32_t>{{0, 1}})); }

TEST(Preorder, Path) { EXPECT_EQ(ranks(oracles::path(3)), (std::map<Vid, std::uint32_t>{{0, 1}, {1, 2}, {2, 3}})); }

TEST(Preorder, StarFollowsChildOrder) {
    auto t = star_with_order({3, 1, 2});
    EXPECT_EQ(ranks(t), (std::map<Vid, std::uint32_t>{{0, 1}, {3, 2}, {1, 3}, {2, 4}}));
}

TEST(Preorder, SubtreesAreContiguous) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto t = oracles::random_tree(60, seed);
        auto r = preorder_number(t);
        auto sz = subtree_sizes(t);
        for (Vid v = 0; v < t.size(); ++v) {
            if (t.parent[v] != kNone) {
                EXPECT_LT(r[t.parent[v]], r[v]);
            }
            // every descendant lies in [r(v), r(v)+sz(v)-1]
            std::vector<Vid> st{v};
            std::size_t count = 0;
            while (!st.empty()) {
                Vid x = st.back();
                st.pop_back();
                ++count;
                EXPECT_GE(r[x], r[v]);
                EXPECT_LE(r[x], r[v] + sz[v] - 1);
                for (Vid c : t.children[x]) st.push_back(c);
            }
            EXPECT_EQ(count, sz[v]);
        }
    }
}

TEST(TreeStructure, RejectsCycleAndMultipleRoots) {
    EXPECT_THROW(Tree::from_parents({kNone, kNone}), StructuralError);
    EXPECT_THROW(Tree::from_parents({kNone, 2, 1}), StructuralError);
    EXPECT_THROW(Tree::from_parents({1, 0}), StructuralError);
}

TEST(TreeFormat, ParseErrors) {
    EXPECT_THROW(parse_tree_string(""), InputError);
    EXPECT_THROW(parse_tree_string("2 0\n0 -\n"), InputError);
    EXPECT_THROW(parse_tree_string("2 0\n0 -\n1 7\n"), InputError);
    EXPECT_THROW(parse_tree_string("2 0\n0 -\n0 -\n"), InputError);
    EXPECT_THROW(parse_tree_string("3 0\n0 -\n1 2\n2 1\n"), InputError);
    EXPECT_THROW(parse_tree_string("2 0\n0 -\n1 0 ew\n"), InputError);
    EXPECT_THROW(parse_tree_string("2 0\n0 1\n1 0\n"), InputError);
}

TEST(TreeFormat, RoundTrip) {
    for (const auto& fam : oracles::families()) {
        auto trees = oracles::generate(fam, fam == "all-shapes" ? 6 : 40, 7, 3);
        for (auto& t : trees) {
            oracles::set_edge_weights(t, 1, 9, 3);
            auto s = serialize_tree(t);
            auto back = parse_tree_string(s);
            EXPECT_EQ(back, t) << fam;
            EXPECT_EQ(serialize_tree(back), s);
        }
    }
}

TEST(TreeFormat, KeepsLineOrderAsChildOrder) {
    auto t = parse_tree_string("4 2\n2 -\n3 2\n0 2 ew=5\n1 2\n");
    EXPECT_EQ(t.root, 2u);
    EXPECT_EQ(t.children[2], (std::vector<Vid>{3, 0, 1}));
    EXPECT_EQ(t.attr_int(0, "ew"), 5);
    auto c = canonical_ids(t);
    EXPECT_EQ(c.root, 0u);
    EXPECT_EQ(c.children[0], (std::vector<Vid>{1, 2, 3}));
    EXPECT_EQ(c.attr_int(2, "ew"), 5);
}

TEST(PayloadBudget, BitLength) {
    DegreeWeightedTree d{oracles::star(4), {}, 8};
    d.payload.assign(4, {});
    d.payload[0].words.assign(3, 0);
    d.payload[0].bit_len = payload_budget_bits(8, 3, 4);  // 8 * 4 * 3 bits
    EXPECT_EQ(d.payload[0].bit_len, 96u);
    EXPECT_TRUE(d.within_budget(0));
    d.payload[0].bit_len = 97;
    EXPECT_FALSE(d.within_budget(0));
    d.payload[1].words.assign(1, 0);
    d.payload[1].bit_len = 65;  // more bits than the words hold
    EXPECT_FALSE(d.within_budget(1));
}

TEST(Decompose, PathOfFour) {
    auto d = decompose(oracles::path(4), 2);
    EXPECT_EQ(d.boundaries, (std::vector<std::size_t>{0, 2, 4}));
}

TEST(Decompose, SingleVertex) { EXPECT_EQ(decompose(oracles::path(1), 1).boundaries, (std::vector<std::size_t>{0, 1})); }

TEST(Decompose, StarOfThreeLeaves) {
    EXPECT_EQ(decompose(oracles::star(4), 3).boundaries, (std::vector<std::size_t>{0, 1, 4}));
}

TEST(Decompose, RejectsHighDegreeNamingVertex) {
    try {
        decompose(oracles::star(5), 3);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("vertex 0"), std::string::npos);
    }
}

TEST(Decompose, BudgetAndGroupCount) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto t = oracles::random_tree(1 + seed * 3, seed);
        std::size_t maxdeg = 1;
        for (Vid v = 0; v < t.size(); ++v) maxdeg = std::max(maxdeg, t.deg(v));
        for (std::size_t lambda : {maxdeg, maxdeg + 1, 2 * maxdeg + 3}) {
            auto d = decompose(t, lambda);
            EXPECT_TRUE(valid_decomposition(t, d));
            EXPECT_LE(d.groups(), (2 * t.size() + lambda - 1) / lambda);
        }
    }
}

TEST(GroupComponents, Examples) {
    auto p = oracles::path(4);
    auto c = group_components(p, decompose(p, 2));
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c[0].members, (std::vector<Vid>{0, 1}));
    EXPECT_EQ(c[1].members, (std::vector<Vid>{2, 3}));

    auto s = oracles::star(4);
    auto cs = group_components(s, decompose(s, 3));
    ASSERT_EQ(cs.size(), 4u);
    EXPECT_EQ(cs[0].group, 0u);
    for (int i = 1; i < 4; ++i) {
        EXPECT_EQ(cs[i].group, 1u);
        EXPECT_EQ(cs[i].members.size(), 1u);
    }
}

TEST(GroupComponents, EmptyGroupRejected) {
    PreorderDecomposition d{{0, 0, 2}, 2};
    EXPECT_THROW(group_components(oracles::path(2), d), StructuralError);
}

TEST(DependencyTree, Examples) {
    auto p = oracles::path(4);
    auto dt = dependency_tree(p, decompose(p, 2));
    ASSERT_EQ(dt.nodes.size(), 2u);
    EXPECT_TRUE(dt.dependent(0));
    EXPECT_FALSE(dt.dependent(1));
    EXPECT_EQ(dt.parent[1], 0u);

    auto whole = dependency_tree(p, PreorderDecomposition{{0, 4}, 3});
    ASSERT_EQ(whole.nodes.size(), 1u);
    EXPECT_FALSE(whole.dependent(0));
}

TEST(DependencyTree, AtMostOneDependentPerGroupOnRandomTrees) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto t = oracles::random_tree(200, seed);
        std::size_t maxdeg = 1;
        for (Vid v = 0; v < t.size(); ++v) maxdeg = std::max(maxdeg, t.deg(v));
        auto d = decompose(t, maxdeg + seed % 7);
        auto dt = dependency_tree(t, d);
        std::vector<int> dep(d.groups(), 0);
        for (std::size_t i = 0; i < dt.nodes.size(); ++i) dep[dt.nodes[i].group] += dt.dependent(i);
        for (int x : dep) EXPECT_LE(x, 1);
    }
}

TEST(LowDegree, AllLow) {
    auto t = oracles::path(6);
    auto c = low_degree_components(t, 2);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].members.size(), 6u);
    EXPECT_TRUE(c[0].leaf);
}

TEST(LowDegree, StarRootIsBig) {
    auto t = oracles::star(6);
    auto c = low_degree_components(t, 5);
    EXPECT_EQ(c.size(), 5u);
    for (auto& x : c) EXPECT_EQ(x.members.size(), 1u);
    auto b = big_small_tree(t, 5);
    EXPECT_TRUE(big_small_adjacency(b));
    EXPECT_EQ(b.size(), 6u);
}

TEST(LowDegree, ComponentsAreMaximal) {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        auto t = seed % 2 ? oracles::random_tree(80, seed) : oracles::caterpillar(80);
        for (std::size_t alpha : {2, 3, 4}) {
            auto comps = low_degree_components(t, alpha);
            std::vector<int> comp(t.size(), -1);
            for (std::size_t i = 0; i < comps.size(); ++i)
                for (Vid v : comps[i].members) comp[v] = static_cast<int>(i);
            for (Vid v = 0; v < t.size(); ++v) {
                EXPECT_EQ(comp[v] >= 0, t.deg(v) < alpha);
                Vid p = t.parent[v];
                if (p != kNone && comp[v] >= 0 && comp[p] >= 0) {
                    EXPECT_EQ(comp[v], comp[p]);
                }
            }
            auto b = big_small_tree(t, alpha);
            EXPECT_TRUE(big_small_adjacency(b));
            EXPECT_TRUE(leaf_fraction(b).at_least(alpha, alpha + 4));
        }
    }
}

TEST(LeafFraction, SingleNode) {
    auto f = leaf_fraction(big_small_tree(oracles::path(1), 2));
    EXPECT_EQ(f.num, 1u);
    EXPECT_EQ(f.den, 1u);
}
