#pragma once

// Size, tree projections, the size decomposition, the crown-bounded
// repartition of lacunary collections, exceptional sets and the
// multi-frequency projection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "lacuna/carleson_model.hpp"
#include "lacuna/dyadic_walsh.hpp"
#include "lacuna/error.hpp"
#include "lacuna/fit.hpp"
#include "lacuna/geometry.hpp"
#include "lacuna/norms_orlicz.hpp"
#include "lacuna/tile_plane.hpp"

namespace lacuna {

// ---------------------------------------------------------------------------
// Size

/// ||Pi_{s} f||_2 / sqrt|I_s|; w_{s1}, w_{s2} are orthonormal.
inline double bitile_size(const Bitile& s, const PacketTable& packets) {
    const double e = std::norm(packets.coefficient(s.lower())) + std::norm(packets.coefficient(s.upper()));
    return std::sqrt(e * std::ldexp(1.0, s.level));
}

inline double size(const BitileSet& set, const PacketTable& packets) {
    double best = 0.0;
    for (const auto& s : set) best = std::max(best, bitile_size(s, packets));
    return best;
}

inline double size(const BitileSet& set, const GridSignal& f) { return size(set, PacketTable(f)); }

/// inf over I of M_1 f, for every dyadic I, built bottom-up.
class MaximalInfTable {
public:
    explicit MaximalInfTable(const GridSignal& f) {
        const int n = f.resolution();
        const auto m = maximal_mp(f, 1.0);
        lows_.resize(static_cast<std::size_t>(n) + 1);
        for (const auto& v : m.values()) lows_[static_cast<std::size_t>(n)].push_back(v.real());
        for (int j = n - 1; j >= 0; --j) {
            const auto& fine = lows_[static_cast<std::size_t>(j) + 1];
            auto& coarse = lows_[static_cast<std::size_t>(j)];
            coarse.resize(fine.size() / 2);
            for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = std::min(fine[2 * i], fine[2 * i + 1]);
        }
    }
    [[nodiscard]] double at(const DyadicInterval& i) const { return lows_[static_cast<std::size_t>(i.level)][i.index]; }

private:
    std::vector<std::vector<double>> lows_;
};

/// sup_s inf_{x in I_s} M_1 f(x). Bounds size up to a factor sqrt 2.
inline double size_maximal_bound(const BitileSet& set, const GridSignal& f) {
    const MaximalInfTable table(f);
    double best = 0.0;
    for (const auto& s : set) best = std::max(best, table.at(s.time()));
    return best;
}

// ---------------------------------------------------------------------------
// Tree projection

/// Orthogonal projection onto span{w_{s1}, w_{s2} : s in T}; modified
/// Gram-Schmidt applied twice. Intended for small grids (N <= 8).
inline GridSignal tree_projection(const Tree& tree, const GridSignal& f) {
    const int n = f.resolution();
    std::set<Tile> tiles;
    for (const auto& s : tree.members)
        for (const Tile& t : {s.lower(), s.upper()})
            if (t.representable(n)) tiles.insert(t);
    std::vector<GridSignal> basis;
    for (const auto& t : tiles) {
        GridSignal v = wave_packet(t, n);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) v -= v.inner(q) * q;
        const double norm = v.l2_norm();
        if (norm > 1e-9) basis.push_back(Complex(1.0 / norm) * v);
    }
    GridSignal out(n);
    for (const auto& q : basis) out += f.inner(q) * q;
    return out;
}

// ---------------------------------------------------------------------------
// Tree tail profile

struct TailPoint {
    double lambda = 0.0;
    double measure = 0.0;  // |{x in I_T : |C_T f(x)| > lambda sigma}| / |I_T|
};

struct TailProfile {
    double sigma = 0.0;
    std::vector<TailPoint> points;
};

inline std::vector<double> default_lambda_grid() {
    std::vector<double> out;
    for (int i = 0; i <= 16; ++i) out.push_back(0.5 * i);
    return out;
}

inline TailProfile tree_tail_profile(const Tree& tree, const GridSignal& f, const ChoiceFunction& choice,
                                     const std::vector<double>& lambdas = default_lambda_grid()) {
    const int n = f.resolution();
    const BitileSet members = tree.member_set();
    if (!is_convex(members, n)) throw PreconditionError("tree_tail_profile: tree is not convex");
    const PacketTable packets(f);
    TailProfile prof;
    prof.sigma = size(members, packets);
    const auto cells = cells_of(tree.top.time(), n);
    const auto ct = model_sum_on(members, packets, choice, cells);
    double peak = 0.0;
    for (const auto& v : ct) peak = std::max(peak, std::abs(v));
    if (prof.sigma == 0.0 && peak > 1e-12) throw InternalError("tree model sum nonzero at zero size");
    for (double lambda : lambdas) {
        std::size_t count = 0;
        if (prof.sigma > 0.0)
            for (const auto& v : ct) count += std::abs(v) > lambda * prof.sigma;
        prof.points.push_back({lambda, static_cast<double>(count) / static_cast<double>(cells.count)});
    }
    return prof;
}

// ---------------------------------------------------------------------------
// Size decomposition

struct SizeLevel {
    double sigma = 1.0;
    Forest forest;
    double size = 0.0;            // size of the union of the forest
    double counting_norm = 0.0;   // ||N_F||_1
    double counting_ratio = 0.0;  // ||N_F||_1 sigma^2 A^2 / ||f||_2^2
    bool size_bound_ok = true;    // size <= A sigma
};

struct SizeDecomposition {
    double A = 0.0;
    std::vector<SizeLevel> levels;
    BitileSet residual;  // bitiles of size exactly zero
    double c_dec = 0.0;  // max counting ratio over levels
};

/// Greedy selection: at each sigma, the remaining bitile of size > A sigma / 2
/// with the longest time interval (then leftmost, then lowest frequency)
/// becomes a top and takes its whole down-cone in the remainder. Levels at
/// which nothing is selected are skipped.
inline SizeDecomposition size_decomposition(const BitileSet& set, const GridSignal& f, double A) {
    const int n = f.resolution();
    if (!(A > 0.0)) throw ParameterError("size_decomposition: A must be positive");
    if (!is_convex(set, n)) throw PreconditionError("size_decomposition: collection is not convex");
    const PacketTable packets(f);
    std::unordered_map<std::uint64_t, double> sizes;
    double top_size = 0.0;
    for (const auto& s : set) {
        const double v = bitile_size(s, packets);
        sizes.emplace(s.key(), v);
        top_size = std::max(top_size, v);
    }
    if (A < top_size) throw PreconditionError("size_decomposition: A below size(S, f)");
    const double energy = f.inner(f).real();

    SizeDecomposition dec;
    dec.A = A;
    BitileSet rest = set;
    double sigma = 1.0;
    for (;;) {
        double peak = 0.0;
        for (const auto& s : rest) peak = std::max(peak, sizes.at(s.key()));
        if (peak == 0.0) break;
        while (peak <= A * sigma / 2) sigma /= 2;
        const double threshold = A * sigma / 2;
        std::vector<Tree> trees;
        const std::vector<Bitile> order = rest.items();
        for (const auto& s : order) {
            if (!rest.contains(s) || sizes.at(s.key()) <= threshold) continue;
            auto members = down_cone(s, rest, n);
            for (const auto& m : members) rest.erase(m);
            trees.emplace_back(s, std::move(members));
        }
        SizeLevel level;
        level.sigma = sigma;
        level.forest = Forest(std::move(trees));
        for (const auto& t : level.forest.trees())
            for (const auto& s : t.members) level.size = std::max(level.size, sizes.at(s.key()));
        level.counting_norm = level.forest.counting_norm();
        level.counting_ratio = level.counting_norm * sigma * sigma * A * A / energy;
        level.size_bound_ok = level.size <= A * sigma;
        dec.c_dec = std::max(dec.c_dec, level.counting_ratio);
        dec.levels.push_back(std::move(level));
        sigma /= 2;
    }
    dec.residual = rest;
    return dec;
}

inline nlohmann::json to_json(const SizeDecomposition& dec) {
    auto rows = nlohmann::json::array();
    for (const auto& l : dec.levels)
        rows.push_back({{"sigma", l.sigma},
                        {"tree_count", l.forest.size()},
                        {"counting_norm", l.counting_norm},
                        {"counting_ratio", l.counting_ratio},
                        {"size", l.size},
                        {"size_bound_ok", l.size_bound_ok}});
    return {{"A", dec.A}, {"levels", rows}, {"residual_count", dec.residual.size()}, {"c_dec", dec.c_dec}};
}

/// Trees headed by the maximal elements, each taking its unassigned down-cone.
inline Forest canonical_forest(const BitileSet& set, int resolution) {
    BitileSet rest = set;
    std::vector<Tree> trees;
    for (const auto& top : maximal_elements(set)) {
        auto members = down_cone(top, rest, resolution);
        for (const auto& m : members) rest.erase(m);
        trees.emplace_back(top, std::move(members));
    }
    return Forest(std::move(trees));
}

// ---------------------------------------------------------------------------
// Crown-bounded repartition

/// Smallest m >= 1 with theta^m >= 2.
inline int lacunarity_steps(double theta) {
    if (!(theta > 1.0)) throw ParameterError("lacunarity constant must exceed 1");
    int m = 1;
    while (std::pow(theta, m) < 2.0 * (1 - 1e-12)) ++m;
    return m;
}

struct Repartition {
    Forest forest;
    std::vector<int> layer;   // layer index of each tree
    int layer_bound = 0;      // lacunarity_steps + 1
    double counting_ratio = 0.0;  // ||N_{F*}||_1 / ||N_F||_1
    bool layers_disjoint = true;  // I_T x (cr(T) cap seq) disjoint within each layer
};

/// Repartitions a collection whose bitiles all have upper frequency
/// intervals meeting the sequence. Layer 0: bitiles whose frequency interval
/// holds n_1, grouped under their maximal elements. The rest is processed by
/// anchor (index of the smallest term in omega_{s2}): maximal anchor-k
/// bitiles become tops, each taking its down-cone in what remains, in layer
/// 1 + (k mod L) with L = lacunarity_steps(theta).
inline Repartition repartition_bounded_crown(const BitileSet& set, const Forest& input, const LacunarySequence& seq,
                                             int resolution) {
    const auto& terms = seq.terms();
    auto term_range = [](const DyadicInterval& w) {
        const std::uint64_t lo = w.inf_frequency();
        return std::pair{lo, lo + (std::uint64_t{1} << w.level)};
    };
    std::unordered_map<std::uint64_t, std::size_t> anchor;
    for (const auto& s : set) {
        const auto [lo, hi] = term_range(s.upper().freq());
        const std::size_t k = seq.first_index_in(lo, hi);
        if (k == terms.size()) throw PreconditionError("bitile " + to_string(s) + " has omega_s2 missing the sequence");
        anchor.emplace(s.key(), k);
    }
    const int steps = lacunarity_steps(seq.theta() == std::numeric_limits<double>::infinity() ? 2.0 : seq.theta());

    Repartition rep;
    rep.layer_bound = steps + 1;
    std::vector<Tree> trees;

    BitileSet first, rest;
    for (const auto& s : set) (s.freq().contains_point(terms.front()) ? first : rest).insert(s);
    for (const auto& top : maximal_elements(first)) {
        trees.emplace_back(top, down_cone(top, first, resolution));
        rep.layer.push_back(0);
    }

    std::map<std::size_t, BitileSet> by_anchor;
    for (const auto& s : rest) by_anchor[anchor.at(s.key())].insert(s);
    for (auto& [k, group] : by_anchor) {
        BitileSet live;
        for (const auto& s : group)
            if (rest.contains(s)) live.insert(s);
        for (const auto& top : maximal_elements(live)) {
            if (!rest.contains(top)) continue;
            auto members = down_cone(top, rest, resolution);
            for (const auto& m : members) rest.erase(m);
            trees.emplace_back(top, std::move(members));
            rep.layer.push_back(1 + static_cast<int>(k % static_cast<std::size_t>(steps)));
        }
    }
    if (!rest.empty()) throw InternalError("repartition left bitiles unassigned");
    rep.forest = Forest(std::move(trees));

    const double before = input.counting_norm(), after = rep.forest.counting_norm();
    rep.counting_ratio = before > 0.0 ? after / before : (after > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);

    // Within a layer, trees whose crowns share a term need disjoint tops.
    std::map<std::pair<int, std::size_t>, std::vector<DyadicInterval>> owners;
    for (std::size_t i = 0; i < rep.forest.size(); ++i) {
        const auto& t = rep.forest.trees()[i];
        const Crown cr = crown(t);
        for (std::size_t k = 0; k < terms.size(); ++k)
            if (cr.contains(terms[k])) owners[{rep.layer[i], k}].push_back(t.top.time());
    }
    for (auto& [key, tops] : owners) {
        std::sort(tops.begin(), tops.end(), [](const DyadicInterval& a, const DyadicInterval& b) {
            const double la = std::ldexp(static_cast<double>(a.index), -a.level);
            const double lb = std::ldexp(static_cast<double>(b.index), -b.level);
            return la < lb || (la == lb && a.level < b.level);
        });
        double reach = 0.0;
        for (const auto& i : tops) {
            const double start = std::ldexp(static_cast<double>(i.index), -i.level);
            if (start < reach) rep.layers_disjoint = false;
            reach = std::max(reach, start + i.length());
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Exceptional sets

struct ExceptionalRow {
    double lambda = 0.0;
    double threshold = 0.0;       // K0 lambda
    double measure_E = 0.0;
    double rhs = 0.0;             // exp(-lambda/A) ||f||_2^2 / A^2
    double tail_measure = 0.0;    // |{|C_S f| > lambda}|
    double superlevel_measure = 0.0;  // |{|C_S f| > K0 lambda}|
    bool inclusion_ok = true;     // {|C_S f| > K0 lambda} inside E
    bool trivial = false;         // lambda <= A, where the bound is automatic
};

/// Decomposes once (size levels, then crown-bounded repartition per level)
/// and evaluates E = union over sigma and T of {x in I_T : |C_T f| > tau_sigma}
/// with tau_sigma = lambda sigma (1 + 4 log(1/sigma)) for any lambda.
class ExceptionalSetBuilder {
public:
    ExceptionalSetBuilder(const BitileSet& set, const GridSignal& f, const LacunarySequence& seq,
                          const ChoiceFunction& choice, std::optional<double> A = std::nullopt)
        : n_(f.resolution()), f_norm_sq_(f.inner(f).real()) {
        const PacketTable packets(f);
        // size <= ||f||_inf by Bessel on I_s; the max only guards rounding.
        A_ = A.value_or(std::max(f.sup_norm(), size(set, packets)));
        cs_ = model_sum(set, f, choice, packets);
        if (A_ <= 0.0) return;  // f = 0: nothing fires
        const auto dec = size_decomposition(set, f, A_);
        double sum = 0.0;
        for (const auto& level : dec.levels) {
            const auto rep = repartition_bounded_crown(level.forest.members(), level.forest, seq, n_);
            layer_bound_ = std::max(layer_bound_, rep.layer_bound);
            max_crown_ = std::max(max_crown_, crown_function(rep.forest, choice, n_).sup_norm());
            c_dec_ = std::max(c_dec_, level.counting_ratio);
            sum += level.sigma * (1.0 + 4.0 * std::log(1.0 / level.sigma));
            for (const auto& t : rep.forest.trees()) {
                const auto cells = cells_of(t.top.time(), n_);
                const auto ct = model_sum_on(t.member_set(), packets, choice, cells);
                Field field{level.sigma, cells, {}};
                for (const auto& v : ct) field.abs.push_back(std::abs(v));
                fields_.push_back(std::move(field));
            }
        }
        K0_ = static_cast<double>(layer_bound_) * sum;
    }

    [[nodiscard]] double K0() const { return K0_; }
    [[nodiscard]] double A() const { return A_; }
    [[nodiscard]] int layer_bound() const { return layer_bound_; }
    [[nodiscard]] double max_crown() const { return max_crown_; }
    [[nodiscard]] double c_dec() const { return c_dec_; }
    [[nodiscard]] const GridSignal& model() const { return cs_; }

    /// Cells of E (1 = in E) and the comparison row.
    std::pair<std::vector<char>, ExceptionalRow> evaluate(double lambda) const {
        if (!(lambda > 0.0)) throw ParameterError("exceptional set needs lambda > 0");
        std::vector<char> in_e(std::size_t{1} << n_, 0);
        for (const auto& field : fields_) {
            const double tau = lambda * field.sigma * (1.0 + 4.0 * std::log(1.0 / field.sigma));
            for (std::size_t i = 0; i < field.abs.size(); ++i)
                if (field.abs[i] > tau) in_e[field.cells.begin + i] = 1;
        }
        ExceptionalRow row;
        row.lambda = lambda;
        row.threshold = K0_ * lambda;
        const double cell = std::ldexp(1.0, -n_);
        for (std::size_t x = 0; x < in_e.size(); ++x) {
            const double v = std::abs(cs_[x]);
            row.measure_E += in_e[x] * cell;
            row.tail_measure += (v > lambda) * cell;
            if (v > row.threshold) {
                row.superlevel_measure += cell;
                if (!in_e[x]) row.inclusion_ok = false;
            }
        }
        row.rhs = A_ > 0.0 ? std::exp(-lambda / A_) * f_norm_sq_ / (A_ * A_) : 0.0;
        row.trivial = lambda <= A_;
        return {std::move(in_e), row};
    }

private:
    struct Field {
        double sigma;
        CellRange cells;
        std::vector<double> abs;
    };
    int n_;
    double f_norm_sq_;
    double A_ = 0.0;
    double K0_ = 0.0;
    int layer_bound_ = 0;
    double max_crown_ = 0.0;
    double c_dec_ = 0.0;
    GridSignal cs_;
    std::vector<Field> fields_;
};

inline std::pair<std::vector<char>, ExceptionalRow> exceptional_set(const BitileSet& set, const GridSignal& f,
                                                                    double lambda, const LacunarySequence& seq,
                                                                    const ChoiceFunction& choice,
                                                                    std::optional<double> A = std::nullopt) {
    if (!(lambda > 0.0)) throw ParameterError("exceptional set needs lambda > 0");
    return ExceptionalSetBuilder(set, f, seq, choice, A).evaluate(lambda);
}

inline nlohmann::json to_json(const ExceptionalRow& r) {
    return {{"lambda", r.lambda},           {"threshold", r.threshold},
            {"measure_E", r.measure_E},     {"rhs", r.rhs},
            {"tail_measure", r.tail_measure}, {"superlevel_measure", r.superlevel_measure},
            {"inclusion_ok", r.inclusion_ok}, {"trivial", r.trivial}};
}

// ---------------------------------------------------------------------------
// Multi-frequency projection

struct ProjectionInterval {
    DyadicInterval interval;
    std::size_t tile_count = 0;
    double g_norm = 0.0;  // ||g_I||_{L^2(I)}, normalized on I
    double ratio_to_pprime = 0.0;
};

struct MultifreqProjection {
    GridSignal f1, f2, g;
    std::vector<ProjectionInterval> intervals;
    std::size_t s1_count = 0;
    double pprime = 2.0;
    double coefficient_error = 0.0;  // max over S^1 of |<g - f2, w_{s1}>|
    double orthogonality_error = 0.0;  // max over I of |<g_I, f2 1_I - g_I>|
    double g_norm_sq = 0.0;
    double bad_measure = 0.0;  // |{M_p f > 1}|
    double c_proj = 0.0;       // ||g||^2 / ((p')^2 |{M_p f > 1}|)
};

/// Maximal dyadic intervals with avg_I |f|^p > 1 (they tile {M_p f > 1}).
inline std::vector<DyadicInterval> maximal_bad_intervals(const GridSignal& f, double p) {
    const int n = f.resolution();
    std::vector<std::vector<double>> sums(static_cast<std::size_t>(n) + 1);
    for (const auto& v : f.values()) sums[static_cast<std::size_t>(n)].push_back(std::pow(std::abs(v), p));
    for (int j = n - 1; j >= 0; --j) {
        const auto& fine = sums[static_cast<std::size_t>(j) + 1];
        auto& coarse = sums[static_cast<std::size_t>(j)];
        coarse.resize(fine.size() / 2);
        for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = fine[2 * i] + fine[2 * i + 1];
    }
    std::vector<DyadicInterval> out;
    std::vector<char> covered{0};
    for (int j = 0; j <= n; ++j) {
        const auto& level = sums[static_cast<std::size_t>(j)];
        const double len = std::ldexp(1.0, n - j);
        std::vector<char> next(level.size());
        for (std::size_t a = 0; a < level.size(); ++a) {
            const bool parent = j > 0 && covered[a / 2];
            next[a] = parent;
            if (!parent && level[a] / len > 1.0) {
                out.push_back({Axis::time, j, a});
                next[a] = 1;
            }
        }
        covered = std::move(next);
    }
    return out;
}

inline MultifreqProjection multifreq_projection(const GridSignal& f, double p, const LacunarySequence& seq) {
    if (!(p > 1.0 && p <= 2.0)) throw ParameterError("multifreq_projection: p must lie in (1, 2]");
    const int n = f.resolution();
    const auto bad = maximal_bad_intervals(f, p);
    if (!bad.empty() && bad.front().level == 0)
        throw PreconditionError("multifreq_projection: {M_p f > 1} is the whole torus");

    MultifreqProjection out{f, GridSignal(n), GridSignal(n), {}, 0, p / (p - 1.0)};
    for (const auto& i : bad) {
        const auto cells = cells_of(i, n);
        for (std::size_t c = 0; c < cells.count; ++c) out.f2[cells.begin + c] = f[cells.begin + c];
        out.bad_measure += i.length();
    }
    out.f1 = f - out.f2;

    // S^1: lacunary bitiles with inf_{I_s} M_1 f <= 1.
    BitileSet s1;
    const MaximalInfTable m1(f);
    for (const auto& s : lacunary_bitiles(n, seq))
        if (m1.at(s.time()) <= 1.0) s1.insert(s);
    out.s1_count = s1.size();

    const PacketTable f2_packets(out.f2);
    for (const auto& interval : bad) {
        // Frequencies (at the level of I) of tiles over I comparable to some s1.
        std::set<std::uint64_t> freqs;
        for (const auto& s : s1) {
            if (!s.time().intersects(interval)) continue;
            const std::uint64_t c1 = s.lower().freq_index;
            if (interval.level > s.level) {
                freqs.insert(c1 >> (interval.level - s.level));
            } else {
                const int d = s.level - interval.level;
                for (std::uint64_t k = c1 << d; k < (c1 + 1) << d; ++k) freqs.insert(k);
            }
        }
        ProjectionInterval row{interval, freqs.size()};
        GridSignal gi(n);
        for (auto b : freqs) {
            const Tile t{interval.level, interval.index, b};
            if (!t.representable(n)) throw InternalError("projection tile off the grid");
            gi += f2_packets.coefficient(t) * wave_packet(t, n);
        }
        const auto cells = cells_of(interval, n);
        GridSignal f2_i(n);
        double energy = 0.0;
        for (std::size_t c = 0; c < cells.count; ++c) {
            f2_i[cells.begin + c] = out.f2[cells.begin + c];
            energy += std::norm(gi[cells.begin + c]);
        }
        out.orthogonality_error = std::max(out.orthogonality_error, std::abs(gi.inner(f2_i - gi)));
        row.g_norm = std::sqrt(energy / static_cast<double>(cells.count));
        row.ratio_to_pprime = row.g_norm / out.pprime;
        out.g += gi;
        out.intervals.push_back(row);
    }

    const PacketTable diff(out.g - out.f2);
    for (const auto& s : s1) out.coefficient_error = std::max(out.coefficient_error, std::abs(diff.coefficient(s.lower())));
    out.g_norm_sq = out.g.inner(out.g).real();
    out.c_proj = out.bad_measure > 0.0 ? out.g_norm_sq / (out.pprime * out.pprime * out.bad_measure) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// John-Nirenberg probe

struct JohnNirenbergRow {
    double q = 0.0;
    double max_ratio = 0.0;   // max over trials of ||v||_{L^q(I)} / (q ||v||_{L^2(I)})
    double mean_ratio = 0.0;
};

/// Random combinations v of the packets of a tile family over one interval.
template <class Rng>
std::vector<JohnNirenbergRow> john_nirenberg_probe(const DyadicInterval& interval, const std::vector<Tile>& tiles,
                                                   int trials, Rng& rng, int resolution,
                                                   const std::vector<double>& qs = {4.0, 8.0, 16.0}) {
    if (tiles.empty()) throw ParameterError("john_nirenberg_probe: empty tile family");
    if (trials < 1) throw ParameterError("john_nirenberg_probe: trials must be positive");
    for (const auto& t : tiles)
        if (!(t.time() == interval)) throw ParameterError("john_nirenberg_probe: tile not over the interval");
    std::vector<GridSignal> packets;
    for (const auto& t : tiles) packets.push_back(wave_packet(t, resolution));
    const auto cells = cells_of(interval, resolution);
    std::vector<JohnNirenbergRow> rows;
    for (double q : qs) rows.push_back({q, 0.0, 0.0});
    std::normal_distribution<double> g;
    for (int trial = 0; trial < trials; ++trial) {
        GridSignal v(resolution);
        for (const auto& w : packets) v += Complex(g(rng)) * w;
        std::vector<double> a(cells.count);
        for (std::size_t c = 0; c < cells.count; ++c) a[c] = std::abs(v[cells.begin + c]);
        auto local = [&](double q) {
            double acc = 0.0;
            for (double x : a) acc += std::pow(x, q);
            return std::pow(acc / static_cast<double>(a.size()), 1.0 / q);
        };
        const double l2 = local(2.0);
        if (l2 == 0.0) continue;
        for (auto& row : rows) {
            const double r = local(row.q) / (row.q * l2);
            row.max_ratio = std::max(row.max_ratio, r);
            row.mean_ratio += r / trials;
        }
    }
    return rows;
}

}  // namespace lacuna
