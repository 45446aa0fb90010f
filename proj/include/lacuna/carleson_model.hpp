#pragma once

// Lacunary maximal operator and the bitile model sum C_S.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "lacuna/dyadic_walsh.hpp"
#include "lacuna/error.hpp"
#include "lacuna/geometry.hpp"
#include "lacuna/tile_plane.hpp"

namespace lacuna {

inline std::atomic<bool>& warnings_enabled() {
    static std::atomic<bool> flag{true};
    return flag;
}

inline void warn(const std::string& msg) {
    if (warnings_enabled()) std::cerr << "lacuna: warning: " << msg << '\n';
}

/// Strictly increasing positive integers with n_{j+1}/n_j >= theta > 1.
class LacunarySequence {
public:
    LacunarySequence() = default;
    explicit LacunarySequence(std::vector<std::uint64_t> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw ParameterError("lacunary sequence is empty");
        if (terms_.front() == 0) throw ParameterError("lacunary sequence terms must be >= 1");
        theta_ = std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j < terms_.size(); ++j) {
            if (terms_[j] <= terms_[j - 1]) throw ParameterError("lacunary sequence must be strictly increasing");
            theta_ = std::min(theta_, static_cast<double>(terms_[j]) / static_cast<double>(terms_[j - 1]));
        }
    }

    /// 1, 2, 4, ..., 2^{count-1}.
    static LacunarySequence powers_of_two(int count) {
        if (count < 1 || count > 62) throw ParameterError("pow2 count must lie in [1, 62]");
        std::vector<std::uint64_t> t;
        for (int j = 0; j < count; ++j) t.push_back(std::uint64_t{1} << j);
        return LacunarySequence(std::move(t));
    }

    /// Accepts "1,2,4,8" or "pow2:J".
    static LacunarySequence parse(const std::string& text) {
        if (text.rfind("pow2:", 0) == 0) {
            try {
                return powers_of_two(std::stoi(text.substr(5)));
            } catch (const std::logic_error&) {
                throw ParameterError("bad sequence '" + text + "'");
            }
        }
        std::vector<std::uint64_t> t;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto comma = text.find(',', pos);
            const auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                std::size_t used = 0;
                if (item.empty() || item.front() == '-') throw std::invalid_argument("neg");
                t.push_back(std::stoull(item, &used));
                if (used != item.size()) throw std::invalid_argument("trailing");
            } catch (const std::logic_error&) {
                throw ParameterError("bad sequence term '" + item + "' in '" + text + "'");
            }
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return LacunarySequence(std::move(t));
    }

    [[nodiscard]] const std::vector<std::uint64_t>& terms() const { return terms_; }
    [[nodiscard]] double theta() const { return theta_; }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }

    /// Terms below 2^N.
    [[nodiscard]] std::vector<std::uint64_t> retained(int resolution) const {
        std::vector<std::uint64_t> out;
        for (auto n : terms_)
            if (n < (std::uint64_t{1} << resolution)) out.push_back(n);
        return out;
    }

    /// Some term lies in [lo, hi).
    [[nodiscard]] bool meets(std::uint64_t lo, std::uint64_t hi) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), lo);
        return it != terms_.end() && *it < hi;
    }

    /// Index of the smallest term in [lo, hi), or size() if none.
    [[nodiscard]] std::size_t first_index_in(std::uint64_t lo, std::uint64_t hi) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), lo);
        if (it == terms_.end() || *it >= hi) return terms_.size();
        return static_cast<std::size_t>(it - terms_.begin());
    }

    [[nodiscard]] std::string to_string() const {
        std::string s;
        for (std::size_t i = 0; i < terms_.size(); ++i) s += (i ? "," : "") + std::to_string(terms_[i]);
        return s;
    }

private:
    std::vector<std::uint64_t> terms_{1};
    double theta_ = std::numeric_limits<double>::infinity();
};

namespace detail {
inline std::vector<std::uint64_t> retained_or_throw(const LacunarySequence& seq, int resolution) {
    auto kept = seq.retained(resolution);
    if (kept.size() < seq.size())
        warn(std::to_string(seq.size() - kept.size()) + " sequence term(s) >= 2^" + std::to_string(resolution) +
             " dropped");
    if (kept.empty()) throw ParameterError("no sequence term below 2^" + std::to_string(resolution));
    return kept;
}
}  // namespace detail

/// W*f(x) = max_j |W_{n_j} f(x)| over the retained terms.
inline GridSignal maximal_operator(const GridSignal& f, const LacunarySequence& seq) {
    const auto terms = detail::retained_or_throw(seq, f.resolution());
    const auto c = walsh_coefficients(f);
    GridSignal out(f.resolution());
    for (auto n : terms) {
        const auto w = partial_sum_from_coefficients(c, n, f.resolution());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i].real(), std::abs(w[i]));
    }
    return out;
}

/// Per-cell argmax over the retained terms of |W_{n_j} f(x)|, smallest index on ties.
inline ChoiceFunction greedy_choice(const GridSignal& f, const LacunarySequence& seq) {
    const auto terms = detail::retained_or_throw(seq, f.resolution());
    const auto c = walsh_coefficients(f);
    std::vector<std::uint64_t> choice(f.size(), terms.front());
    std::vector<double> best(f.size(), -1.0);
    for (auto n : terms) {
        const auto w = partial_sum_from_coefficients(c, n, f.resolution());
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double v = std::abs(w[i]);
            if (v > best[i]) {
                best[i] = v;
                choice[i] = n;
            }
        }
    }
    return ChoiceFunction(f.resolution(), std::move(choice));
}

/// Distribution of W*(1_cell) at resolution N, in closed form, for N up to 62.
/// W_n f = 2^{-N} D_{n+1}(x + cell) with D_m = sum_{k < m} W_k. With j the
/// first binary digit where x and the cell differ, |D_m| = |(m mod 2^j) - m_j 2^j|,
/// and D_m = m on the cell itself.
/// Lets spikes with ||f||_inf / ||f||_1 = 2^N be evaluated far past grid reach.
inline std::vector<DistributionLevel> spike_maximal_distribution(int resolution, const LacunarySequence& seq) {
    if (resolution < 1 || resolution > 62) throw ResolutionError("spike resolution must lie in [1, 62]");
    const auto terms = detail::retained_or_throw(seq, resolution);
    const double cell = std::ldexp(1.0, -resolution);
    std::vector<DistributionLevel> out;
    for (int j = 0; j < resolution; ++j) {
        std::uint64_t best = 0;
        for (auto n : terms) {
            const std::uint64_t m = n + 1;
            const std::uint64_t low = m & ((std::uint64_t{1} << j) - 1);
            const std::uint64_t high = ((m >> j) & 1U) << j;
            best = std::max(best, low > high ? low - high : high - low);
        }
        out.push_back({static_cast<double>(best) * cell, std::ldexp(1.0, -j - 1)});
    }
    out.push_back({static_cast<double>(terms.back() + 1) * cell, cell});
    return out;
}

/// Bitiles of `pool` whose upper-child frequency interval meets the sequence.
inline BitileSet bitiles_meeting(const BitileSet& pool, const LacunarySequence& seq) {
    BitileSet out;
    for (const auto& s : pool) {
        const auto up = s.upper().freq();
        const std::uint64_t lo = up.inf_frequency();
        if (seq.meets(lo, lo + (std::uint64_t{1} << up.level))) out.insert(s);
    }
    return out;
}

/// Bitiles inside [0, 2^N) whose upper child frequency interval holds a term.
/// Not convex for every sequence; callers needing convexity check it.
inline BitileSet lacunary_bitiles(int resolution, const LacunarySequence& seq) {
    return bitiles_meeting(enumerate_bitiles(resolution, std::uint64_t{1} << resolution), seq);
}

namespace detail {
// For each cell only one bitile per level can fire, so the sum is evaluated
// by walking the set bits of N(x).
inline Complex model_sum_at(const BitileSet& set, const PacketTable& packets, std::uint64_t freq, std::size_t x) {
    const int n = packets.resolution();
    Complex acc{};
    for (int j = 0; j <= n; ++j) {
        if (((freq >> j) & 1U) == 0) continue;
        const Bitile s{j, static_cast<std::uint64_t>(x) >> (n - j), freq >> (j + 1)};
        if (!set.contains(s)) continue;
        acc += packets.coefficient(s.lower()) * wave_packet_value(s.lower(), x, n);
    }
    return acc;
}
}  // namespace detail

/// C_S f(x) = sum_s <f, w_{s1}> w_{s1}(x) 1_{omega_{s2}}(N(x)).
inline GridSignal model_sum(const BitileSet& set, const GridSignal& f, const ChoiceFunction& choice,
                            const PacketTable& packets) {
    const int n = f.resolution();
    if (choice.resolution() != n) throw ResolutionError("choice function resolution mismatch");
    if (packets.resolution() != n) throw ResolutionError("packet table resolution mismatch");
    GridSignal out(n);
    if (set.empty()) return out;
    for (std::size_t x = 0; x < f.size(); ++x) out[x] = detail::model_sum_at(set, packets, choice[x], x);
    return out;
}

/// C_S f on the cells of one range only.
inline std::vector<Complex> model_sum_on(const BitileSet& set, const PacketTable& packets, const ChoiceFunction& choice,
                                         CellRange cells) {
    if (choice.resolution() != packets.resolution()) throw ResolutionError("choice function resolution mismatch");
    std::vector<Complex> out(cells.count);
    for (std::size_t i = 0; i < cells.count; ++i)
        out[i] = detail::model_sum_at(set, packets, choice[cells.begin + i], cells.begin + i);
    return out;
}

inline GridSignal model_sum(const BitileSet& set, const GridSignal& f, const ChoiceFunction& choice) {
    for (const auto& s : set)
        if (!s.representable(f.resolution())) throw ResolutionError("bitile " + to_string(s) + " not on the grid");
    return model_sum(set, f, choice, PacketTable(f));
}

/// Offset fixed by the exhaustive N = 3 oracle: tile_sum_partial(f, n) equals
/// partial_sum(f, n - kTileSumIndexShift).
inline constexpr std::uint64_t kTileSumIndexShift = 1;

/// Literal sum over every grid bitile with n in omega_{s2}.
inline GridSignal tile_sum_partial(const GridSignal& f, std::uint64_t n, int resolution) {
    if (f.resolution() != resolution) throw ResolutionError("signal resolution mismatch");
    if (n < 1 || n > (std::uint64_t{1} << resolution)) throw ParameterError("tile sum frequency outside [1, 2^N]");
    const PacketTable packets(f);
    GridSignal out(resolution);
    for (const auto& s : grid_bitiles(resolution)) {
        if (!s.upper().freq().contains_point(n)) continue;
        const Complex a = packets.coefficient(s.lower());
        if (a == Complex{}) continue;
        out += a * wave_packet(s.lower(), resolution);
    }
    return out;
}

/// Walsh partial sum that the tile sum at frequency n reproduces.
inline GridSignal calibrated_partial_sum(const GridSignal& f, std::uint64_t n) {
    return partial_sum(f, {n - kTileSumIndexShift});
}

/// Bitile collection and choice function whose model sum realizes W* f.
struct MaximalRealization {
    BitileSet bitiles;
    ChoiceFunction choice;
    GridSignal value;  // C_S f with that choice
};

/// With the calibrated shift, the tile sum at frequency n_j + 1 is W_{n_j} f,
/// so the model sum over the bitiles meeting {n_j + 1} with choice N(x) + 1
/// equals W_{N(x)} f pointwise.
inline MaximalRealization realize_maximal(const GridSignal& f, const LacunarySequence& seq) {
    const int n = f.resolution();
    const auto terms = detail::retained_or_throw(seq, n);
    std::vector<std::uint64_t> shifted;
    for (auto t : terms) shifted.push_back(t + kTileSumIndexShift);
    const LacunarySequence shifted_seq(shifted);
    const auto greedy = greedy_choice(f, seq);
    std::vector<std::uint64_t> values(greedy.values());
    for (auto& v : values) v += kTileSumIndexShift;
    MaximalRealization r{bitiles_meeting(grid_bitiles(n), shifted_seq), ChoiceFunction(n, std::move(values)),
                         GridSignal(n)};
    r.value = model_sum(r.bitiles, f, r.choice);
    return r;
}

}  // namespace lacuna
