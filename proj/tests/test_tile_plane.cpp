#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "lacuna/tile_plane.hpp"

using namespace lacuna;

namespace {

// Brute-force reference: every triple s << b << u with b outside S.
bool convex_brute(const BitileSet& set, int n) {
    const auto all = grid_bitiles(n);
    for (const auto& s : set)
        for (const auto& u : set)
            if (feff_leq(s, u))
                for (const auto& b : all)
                    if (feff_leq(s, b) && feff_leq(b, u) && !set.contains(b)) return false;
    return true;
}

BitileSet random_subset(const BitileSet& pool, double keep, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(keep);
    BitileSet out;
    for (const auto& s : pool)
        if (coin(rng)) out.insert(s);
    return out;
}

}  // namespace

TEST(FeffermanOrder, Examples) {
    EXPECT_TRUE(feff_leq(Tile{1, 0, 1}, Tile{0, 0, 2}));
    EXPECT_TRUE(feff_leq(Tile{1, 0, 1}, Tile{1, 0, 1}));
    EXPECT_FALSE(feff_leq(Tile{1, 0, 1}, Tile{1, 1, 1}));
    EXPECT_FALSE(feff_leq(Tile{0, 0, 2}, Tile{1, 0, 1}));
}

TEST(FeffermanOrder, PartialOrderExhaustive) {
    for (int n = 0; n <= 4; ++n) {
        const auto grid = grid_bitiles(n);
        const auto& all = grid.items();
        for (const auto& a : all) {
            ASSERT_TRUE(feff_leq(a, a));
            for (const auto& b : all) {
                if (feff_leq(a, b) && feff_leq(b, a)) {
                    ASSERT_EQ(a, b);
                }
                if (!feff_leq(a, b)) continue;
                for (const auto& c : all)
                    if (feff_leq(b, c)) {
                        ASSERT_TRUE(feff_leq(a, c));
                    }
            }
        }
    }
}

TEST(Bitile, ChildrenSplitFrequency) {
    for (const auto& s : grid_bitiles(4)) {
        const auto lo = s.lower().freq(), hi = s.upper().freq(), w = s.freq();
        EXPECT_TRUE(w.contains(lo) && w.contains(hi));
        EXPECT_FALSE(lo.intersects(hi));
        EXPECT_EQ(lo.inf_frequency(), w.inf_frequency());
        EXPECT_EQ(hi.inf_frequency() + (std::uint64_t{1} << hi.level), w.inf_frequency() + (std::uint64_t{1} << w.level));
        EXPECT_EQ(Bitile::from_key(s.key()), s);
    }
}

TEST(EnumerateBitiles, Examples) {
    EXPECT_EQ(enumerate_bitiles(1, 2).items(), (std::vector<Bitile>{{0, 0, 0}}));
    EXPECT_EQ(enumerate_bitiles(2, 4).items(), (std::vector<Bitile>{{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {1, 1, 0}}));
    // Level-1 bitiles have frequency width 4, so only [0,1)x[0,2) fits under 2.
    EXPECT_EQ(enumerate_bitiles(2, 2).size(), 1u);
    EXPECT_THROW(enumerate_bitiles(2, 5), ResolutionError);
}

TEST(Convexity, Examples) {
    EXPECT_TRUE(is_convex(grid_bitiles(4), 4));
    EXPECT_TRUE(is_convex(enumerate_bitiles(4, 16), 4));
    EXPECT_TRUE(is_convex({}, 4));
    // s << mid << top, two levels apart, middle omitted.
    const Bitile s{2, 0, 0}, mid{1, 0, 0}, top{0, 0, 0};
    ASSERT_TRUE(feff_leq(s, mid) && feff_leq(mid, top));
    EXPECT_FALSE(is_convex({s, top}, 3));
    EXPECT_TRUE(is_convex({s, mid, top}, 3));
}

TEST(Convexity, MatchesBruteForceAndInteriorIsConvex) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + trial % 3;
        const auto set = random_subset(grid_bitiles(n), 0.6, rng);
        ASSERT_EQ(is_convex(set, n), convex_brute(set, n));
        const auto inner = convex_interior(set, n);
        ASSERT_TRUE(convex_brute(inner, n));
        if (convex_brute(set, n)) {
            ASSERT_EQ(inner, set);
        }
    }
}

TEST(Crown, Examples) {
    const Bitile s{1, 0, 1};
    EXPECT_EQ(crown(Tree(s, {s})).intervals(), (std::vector<DyadicInterval>{s.upper().freq()}));
    // Nested upper intervals: the coarser one absorbs the finer one.
    const Bitile top{0, 0, 1}, low{1, 1, 0};
    ASSERT_TRUE(feff_leq(low, top));
    EXPECT_EQ(crown(Tree(top, {top, low})).intervals(), (std::vector<DyadicInterval>{low.upper().freq()}));
    EXPECT_TRUE(crown(Tree(top, {})).empty());
    EXPECT_THROW(Tree(top, {{0, 0, 0}}), PreconditionError);
}

TEST(Crown, MergesSiblingsAndAnswersMembership) {
    const Crown c({{Axis::frequency, 0, 4}, {Axis::frequency, 0, 5}, {Axis::frequency, 1, 3}, {Axis::frequency, 0, 9}});
    EXPECT_EQ(c.intervals(), (std::vector<DyadicInterval>{{Axis::frequency, 2, 1}, {Axis::frequency, 0, 9}}));
    for (std::uint64_t n = 0; n < 16; ++n) EXPECT_EQ(c.contains(n), (n >= 4 && n < 8) || n == 9) << n;
}

TEST(CountingFunction, Examples) {
    const Tree left({1, 0, 0}, {{1, 0, 0}}), right({1, 1, 0}, {{1, 1, 0}});
    const auto n2 = counting_function(Forest({left, right}), 3);
    for (auto v : n2.values()) EXPECT_EQ(v, Complex(1));
    std::vector<Tree> three;
    for (std::uint64_t c = 0; c < 3; ++c) three.emplace_back(Bitile{0, 0, c}, std::vector<Bitile>{{0, 0, c}});
    const auto n3 = counting_function(Forest(three), 3);
    for (auto v : n3.values()) EXPECT_EQ(v, Complex(3));
    EXPECT_EQ(counting_function(Forest(), 3).sup_norm(), 0.0);
    EXPECT_EQ(Forest(three).counting_norm(), 3.0);
}

TEST(CrownFunction, Examples) {
    const Bitile s{1, 0, 0};  // upper child frequency [2,4)
    const Forest f({Tree(s, {s})});
    const auto inside = crown_function(f, ChoiceFunction::constant(3, 3), 3);
    EXPECT_EQ(inside.max_abs_diff(counting_function(f, 3)), 0.0);
    EXPECT_EQ(crown_function(f, ChoiceFunction::constant(3, 1), 3).sup_norm(), 0.0);
}

TEST(CrownFunction, DominatedByCounting) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + trial % 6;
        const auto pool = random_subset(grid_bitiles(n), 0.3, rng);
        // Each maximal element heads the tree of its still-unassigned down-cone.
        BitileSet left = pool;
        std::vector<Tree> trees;
        for (const auto& top : maximal_elements(pool)) {
            std::vector<Bitile> members;
            for (const auto& s : down_cone(top, left, n)) {
                members.push_back(s);
                left.erase(s);
            }
            trees.emplace_back(top, members);
        }
        const Forest forest(trees);
        ASSERT_EQ(forest.members(), pool);
        std::uniform_int_distribution<std::uint64_t> freq(0, (1u << n));
        std::vector<std::uint64_t> values(std::size_t{1} << n);
        for (auto& v : values) v = freq(rng);
        const auto w = crown_function(forest, ChoiceFunction(n, values), n);
        const auto c = counting_function(forest, n);
        for (std::size_t i = 0; i < w.size(); ++i) ASSERT_LE(w[i].real(), c[i].real());
    }
}

TEST(Forest, RejectsOverlappingTrees) {
    const Bitile s{0, 0, 0};
    EXPECT_THROW(Forest({Tree(s, {s}), Tree(s, {s})}), InternalError);
}

TEST(ForestJson, RoundTrip) {
    const Bitile top{0, 0, 1}, low{1, 1, 0};
    const Forest f({Tree(top, {top, low}), Tree({1, 0, 0}, {})});
    const auto j = to_json(f);
    const auto back = forest_from_json(nlohmann::json::parse(j.dump()));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.trees()[0].top, top);
    EXPECT_EQ(back.trees()[0].members, (std::vector<Bitile>{top, low}));
    EXPECT_EQ(back.trees()[1].top, (Bitile{1, 0, 0}));
    EXPECT_TRUE(back.trees()[1].members.empty());
    EXPECT_THROW(forest_from_json(nlohmann::json::parse(R"([{"time_level":0,"time_index":0,"freq_level":2,"freq_index":0,"tree_id":0,"is_top":true}])")),
                 FormatError);
    EXPECT_EQ(bitile_set_from_json(to_json(grid_bitiles(3))), grid_bitiles(3));
}

TEST(ChoiceCsv, RoundTrip) {
    const ChoiceFunction c(2, {1, 4, 2, 0});
    std::stringstream ss;
    write_choice_csv(ss, c);
    EXPECT_EQ(ss.str(), "index,frequency\n0,1\n1,4\n2,2\n3,0\n");
    EXPECT_EQ(read_choice_csv(ss).values(), c.values());
    EXPECT_THROW(ChoiceFunction(2, {1, 5, 2, 0}), ResolutionError);
}
