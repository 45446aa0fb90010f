#include <gtest/gtest.h>

#include <random>

#include "lacuna/tf_decomposition.hpp"

using namespace lacuna;

namespace {

GridSignal random_signs(int n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    GridSignal f(n);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = coin(rng) ? 1.0 : -1.0;
    return f;
}

GridSignal random_signal(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    GridSignal f(n);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = Complex(g(rng), g(rng));
    return f;
}

/// Bitiles << top down to a depth below top; convex by construction.
Tree truncated_cone(const Bitile& top, int depth, int n) {
    std::vector<Bitile> members;
    for (const auto& s : down_cone(top, grid_bitiles(n), n))
        if (s.level <= top.level + depth) members.push_back(s);
    return Tree(top, members);
}

ChoiceFunction random_choice(int n, const std::vector<std::uint64_t>& values, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<std::uint64_t> v(std::size_t{1} << n);
    for (auto& x : v) x = values[pick(rng)];
    return ChoiceFunction(n, v);
}

/// Intersection of the grid with a random down-set of a random top: convex.
BitileSet random_convex_set(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> lvl(0, n - 1);
    BitileSet out;
    for (int r = 0; r < 3; ++r) {
        const int j = lvl(rng);
        std::uniform_int_distribution<std::uint64_t> a(0, (1u << j) - 1), c(0, std::max<std::uint64_t>(1, (1u << (n - j - 1))) - 1);
        const Bitile top{j, a(rng), c(rng)};
        for (const auto& s : truncated_cone(top, n, n).members) out.insert(s);
    }
    return out;
}

}  // namespace

TEST(Size, Examples) {
    const int n = 4;
    const Bitile s{2, 1, 1};
    const auto f = wave_packet(s.lower(), n);
    EXPECT_NEAR(size({s}, f), 2.0, 1e-14);  // |I_s|^{-1/2} with |I_s| = 1/4
    EXPECT_EQ(size(grid_bitiles(n), GridSignal(n)), 0.0);
    const auto one = GridSignal::constant(3, Complex(1.0));
    const auto all = grid_bitiles(3);
    EXPECT_LE(size(all, one), std::sqrt(2.0) * size_maximal_bound(all, one) + 1e-12);
    EXPECT_NEAR(size(all, one), 1.0, 1e-14);
}

TEST(Size, MonotoneAndMaximalBound) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + trial % 6;
        const auto f = random_signal(n, rng);
        const auto all = grid_bitiles(n);
        const auto part = random_convex_set(n, rng);
        ASSERT_LE(size(part, f), size(all, f));
        ASSERT_LE(size(all, f), f.sup_norm() * (1 + 1e-12));
        // The single-bitile bound holds with constant sqrt 2: |<f, w>|^2 |I|^{-1}
        // is at most (avg_I |f|)^2 for each of the two packets.
        for (const auto& s : all) ASSERT_LE(size({s}, f), std::sqrt(2.0) * size_maximal_bound({s}, f) * (1 + 1e-12));
    }
}

TEST(TreeProjection, SpanOrthogonalIdempotent) {
    std::mt19937_64 rng(5);
    const int n = 6;
    const Tree t = truncated_cone({1, 1, 0}, 3, n);
    GridSignal in_span(n);
    for (const auto& s : t.members) in_span += Complex(0.5 + s.level) * wave_packet(s.upper(), n);
    EXPECT_LT(tree_projection(t, in_span).max_abs_diff(in_span), 1e-12);
    const auto away = wave_packet({0, 0, 63}, n);
    EXPECT_LT(tree_projection(Tree({1, 0, 0}, {{1, 0, 0}}), away).sup_norm(), 1e-12);
    const auto f = random_signal(n, rng);
    const auto p = tree_projection(t, f);
    EXPECT_LT(tree_projection(t, p).max_abs_diff(p), 1e-12);
    EXPECT_LE(p.l2_norm(), f.l2_norm());
}

TEST(TreeProjection, ModelSumSeesOnlyTheProjection) {
    std::mt19937_64 rng(6);
    const int n = 6;
    for (int trial = 0; trial < 10; ++trial) {
        std::uniform_int_distribution<int> lvl(0, 3);
        const int j = lvl(rng);
        const Tree t = truncated_cone({j, 0, 0}, 1 + trial % 4, n);
        const auto f = random_signal(n, rng);
        std::uniform_int_distribution<std::uint64_t> freq(0, 64);
        std::vector<std::uint64_t> v(64);
        for (auto& x : v) x = freq(rng);
        const ChoiceFunction choice(n, v);
        const auto set = t.member_set();
        ASSERT_LT(model_sum(set, f, choice).max_abs_diff(model_sum(set, tree_projection(t, f), choice)), 1e-12);
    }
}

TEST(TreeTail, Examples) {
    const int n = 8;
    const Tree t = truncated_cone({0, 0, 0}, 8, n);
    const auto zero = tree_tail_profile(t, GridSignal(n), ChoiceFunction::constant(n, 5));
    for (const auto& p : zero.points) EXPECT_EQ(p.measure, 0.0);
    std::mt19937_64 rng(8);
    const auto f = random_signs(n, rng);
    const auto prof = tree_tail_profile(t, f, greedy_choice(f, LacunarySequence::powers_of_two(n)));
    EXPECT_LE(prof.points.front().measure, 1.0);
    EXPECT_THROW(tree_tail_profile(Tree({0, 0, 0}, {{0, 0, 0}, {2, 0, 0}}), f, ChoiceFunction::constant(n, 1)),
                 PreconditionError);
}

TEST(TreeTail, ExponentialDecayOnRandomSigns) {
    std::mt19937_64 rng(10);
    const int n = 10;
    std::vector<double> lambdas, worst;
    for (int trial = 0; trial < 5; ++trial) {
        const auto f = random_signs(n, rng);
        const Tree t = truncated_cone({0, 0, 0}, 10, n);
        std::vector<std::uint64_t> values;
        for (std::uint64_t k = 1; k <= 1024; ++k) values.push_back(k);
        const auto prof = tree_tail_profile(t, f, random_choice(n, values, rng));
        std::vector<double> x, y;
        for (const auto& p : prof.points) {
            x.push_back(p.lambda);
            y.push_back(p.measure);
        }
        const auto fit = exponential_fit(x, y);
        EXPECT_GT(fit.rate, 0.0);
    }
}

TEST(SizeDecomposition, Examples) {
    const int n = 5;
    const auto set = lacunary_bitiles(n, LacunarySequence::powers_of_two(n));
    const auto empty = size_decomposition(set, GridSignal(n), 1.0);
    EXPECT_TRUE(empty.levels.empty());
    EXPECT_EQ(empty.residual, set);

    std::mt19937_64 rng(4);
    const auto f = random_signal(n, rng);
    const Bitile s{2, 3, 1};
    const double a = size({s}, f);
    const auto one = size_decomposition({s}, f, a);
    ASSERT_EQ(one.levels.size(), 1u);
    EXPECT_EQ(one.levels[0].sigma, 1.0);
    EXPECT_LE(one.c_dec, 1.0 + 1e-12);
    EXPECT_THROW(size_decomposition({s}, f, 0.5 * a), PreconditionError);
    EXPECT_THROW(size_decomposition({{2, 0, 0}, {0, 0, 0}}, f, 10.0), PreconditionError);
}

TEST(SizeDecomposition, ContractOnRandomInputs) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 3 + trial % 6;
        const auto f = trial % 2 ? random_signal(n, rng) : random_signs(n, rng);
        const auto set = random_convex_set(n, rng);
        const double A = std::max(size(set, f), 1e-300);
        const auto dec = size_decomposition(set, f, A);
        BitileSet all = dec.residual;
        for (const auto& s : dec.residual) ASSERT_EQ(size({s}, f), 0.0);
        for (const auto& level : dec.levels) {
            ASSERT_TRUE(level.size_bound_ok);
            ASSERT_LE(size(level.forest.members(), f), A * level.sigma);
            ASSERT_TRUE(is_convex(level.forest.members(), n));
            for (const auto& t : level.forest.trees()) {
                ASSERT_TRUE(is_convex(t.member_set(), n));
                for (const auto& s : t.members) ASSERT_TRUE(all.insert(s));
            }
        }
        ASSERT_EQ(all, set);
        ASSERT_LE(dec.c_dec, 4.0);
    }
}

TEST(Repartition, Examples) {
    const auto seq = LacunarySequence::powers_of_two(5);
    const auto empty = repartition_bounded_crown({}, Forest(), seq, 5);
    EXPECT_TRUE(empty.forest.empty());
    EXPECT_THROW(repartition_bounded_crown({{0, 0, 1}}, Forest(), seq, 5), PreconditionError);

    // Every bitile with 1 in omega_s: one layer, maximal tops with disjoint intervals.
    BitileSet first;
    for (const auto& s : lacunary_bitiles(5, seq))
        if (s.freq().contains_point(1)) first.insert(s);
    const auto rep = repartition_bounded_crown(first, canonical_forest(first, 5), seq, 5);
    const auto tops = maximal_elements(first);
    ASSERT_EQ(rep.forest.size(), tops.size());
    for (std::size_t i = 0; i < rep.forest.size(); ++i) {
        EXPECT_EQ(rep.layer[i], 0);
        EXPECT_EQ(rep.forest.trees()[i].top, tops[i]);
        for (std::size_t k = 0; k < i; ++k)
            EXPECT_FALSE(rep.forest.trees()[i].top.time().intersects(rep.forest.trees()[k].top.time()));
    }
}

TEST(Repartition, CrownBoundForSeveralSequences) {
    std::mt19937_64 rng(23);
    const int n = 6;
    for (const char* text : {"pow2:6", "1,3,9,27", "2,3,5,8,13,21,34", "3,5,9,17,33", "1,2,3,5,8,13,21,34,55"}) {
        const auto seq = LacunarySequence::parse(text);
        const auto base = bitiles_meeting(grid_bitiles(n), seq);
        const int bound = lacunarity_steps(seq.theta()) + 1;
        for (int trial = 0; trial < 20; ++trial) {
            BitileSet set;
            std::bernoulli_distribution keep(trial == 0 ? 1.0 : 0.5);
            for (const auto& s : base)
                if (keep(rng)) set.insert(s);
            const auto rep = repartition_bounded_crown(set, canonical_forest(set, n), seq, n);
            ASSERT_EQ(rep.forest.members(), set);
            ASSERT_EQ(rep.layer_bound, bound);
            ASSERT_TRUE(rep.layers_disjoint) << text;
            for (int c = 0; c < 10; ++c) {
                const auto w = crown_function(rep.forest, random_choice(n, seq.retained(n), rng), n);
                ASSERT_LE(w.sup_norm(), bound) << text;
            }
        }
    }
}

TEST(ExceptionalSet, ZeroSignal) {
    const int n = 6;
    const auto seq = LacunarySequence::powers_of_two(n);
    const auto [e, row] = exceptional_set(lacunary_bitiles(n, seq), GridSignal(n), 1.0, seq, ChoiceFunction::constant(n, 1));
    EXPECT_EQ(row.measure_E, 0.0);
    EXPECT_EQ(row.superlevel_measure, 0.0);
    EXPECT_TRUE(row.inclusion_ok);
    EXPECT_THROW(exceptional_set({}, GridSignal(n), 0.0, seq, ChoiceFunction::constant(n, 1)), ParameterError);
}

TEST(ExceptionalSet, InclusionOnRandomSigns) {
    std::mt19937_64 rng(29);
    const int n = 10;
    const auto seq = LacunarySequence::powers_of_two(n);
    const auto set = lacunary_bitiles(n, seq);
    for (int trial = 0; trial < 3; ++trial) {
        const auto f = random_signs(n, rng);
        const ExceptionalSetBuilder builder(set, f, seq, greedy_choice(f, seq));
        EXPECT_LE(builder.max_crown(), builder.layer_bound());
        for (double lambda : {0.25, 1.0, 2.0, 4.0, 8.0}) {
            const auto [e, row] = builder.evaluate(lambda);
            ASSERT_TRUE(row.inclusion_ok) << lambda;
        }
    }
}

TEST(Multifreq, BoundedSignalHasNoBadPart) {
    std::mt19937_64 rng(3);
    GridSignal f(6);
    std::uniform_real_distribution<double> u(-1, 1);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
    const auto r = multifreq_projection(f, 1.5, LacunarySequence::powers_of_two(6));
    EXPECT_EQ(r.f2.sup_norm(), 0.0);
    EXPECT_EQ(r.g.sup_norm(), 0.0);
    EXPECT_THROW(multifreq_projection(f, 1.0, LacunarySequence::powers_of_two(6)), ParameterError);
    EXPECT_THROW(multifreq_projection(GridSignal::constant(6, Complex(2.0)), 1.5, LacunarySequence::powers_of_two(6)),
                 PreconditionError);
}

TEST(Multifreq, SpikeCoefficientIdentity) {
    const int n = 6;
    GridSignal f(n);
    f[37] = 6.0;  // avg of |f|^p over the whole torus stays below 1
    for (double p : {1.05, 1.5, 2.0}) {
        const auto r = multifreq_projection(f, p, LacunarySequence::powers_of_two(n));
        ASSERT_FALSE(r.intervals.empty());
        for (const auto& i : r.intervals) EXPECT_TRUE(i.interval.intersects({Axis::time, n, 37}));
        EXPECT_GT(r.s1_count, 0u);
        EXPECT_LT(r.coefficient_error, 1e-10);
        EXPECT_LT(r.orthogonality_error, 1e-10);
        // g lives on the bad intervals.
        for (std::size_t x = 0; x < f.size(); ++x) {
            if (std::abs(r.g[x]) < 1e-12) continue;
            const DyadicInterval cell{Axis::time, n, x};
            EXPECT_TRUE(std::any_of(r.intervals.begin(), r.intervals.end(),
                                    [&](const ProjectionInterval& i) { return i.interval.contains(cell); }));
        }
    }
}

TEST(Multifreq, RandomSweepAtP2) {
    std::mt19937_64 rng(37);
    const int n = 6;
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::uniform_int_distribution<std::size_t> cell(0, 63);
    double c_proj = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        GridSignal f(n);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng);
        f[cell(rng)] = 5.0 + 4.0 * u(rng);
        const auto r = multifreq_projection(f, 2.0, LacunarySequence::powers_of_two(n));
        ASSERT_LT(r.coefficient_error, 1e-10);
        c_proj = std::max(c_proj, r.c_proj);
    }
    EXPECT_GT(c_proj, 0.0);
    EXPECT_LT(c_proj, 10.0);
}

TEST(JohnNirenberg, SinglePacketIsFlat) {
    std::mt19937_64 rng(1);
    const DyadicInterval i{Axis::time, 2, 1};
    const auto rows = john_nirenberg_probe(i, {{2, 1, 3}}, 5, rng, 8);
    for (const auto& r : rows) EXPECT_NEAR(r.max_ratio, 1.0 / r.q, 1e-12);
    EXPECT_THROW(john_nirenberg_probe(i, {}, 5, rng, 8), ParameterError);
    EXPECT_THROW(john_nirenberg_probe(i, {{1, 0, 3}}, 5, rng, 8), ParameterError);
}

TEST(JohnNirenberg, LacunaryFamilyStaysBounded) {
    std::mt19937_64 rng(2);
    const int n = 10;
    const DyadicInterval i{Axis::time, 1, 0};
    std::vector<Tile> tiles;
    for (std::uint64_t b = 1; b < 512; b *= 2) tiles.push_back({1, 0, b});
    for (const auto& r : john_nirenberg_probe(i, tiles, 40, rng, n)) EXPECT_LT(r.max_ratio, 1.0);
}

TEST(Json, DecompositionReport) {
    std::mt19937_64 rng(2);
    const int n = 5;
    const auto f = random_signs(n, rng);
    const auto set = lacunary_bitiles(n, LacunarySequence::powers_of_two(n));
    const auto j = to_json(size_decomposition(set, f, size(set, f)));
    ASSERT_TRUE(j.at("levels").is_array());
    for (const auto& row : j.at("levels")) {
        EXPECT_TRUE(row.contains("sigma") && row.contains("tree_count") && row.contains("counting_norm"));
        EXPECT_TRUE(row.at("size_bound_ok").get<bool>());
    }
}
