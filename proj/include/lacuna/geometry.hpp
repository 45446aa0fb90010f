#pragma once

// Dyadic intervals, tiles and bitiles of the Walsh phase plane, stored as
// integer (level, index) pairs so every containment test is exact.

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "lacuna/error.hpp"

namespace lacuna {

/// Largest supported grid resolution; keys pack indices into 29 bits.
inline constexpr int kMaxResolution = 26;

inline void check_resolution(int resolution) {
    if (resolution < 0 || resolution > kMaxResolution) {
        throw ResolutionError("resolution " + std::to_string(resolution) +
                              " outside [0, " + std::to_string(kMaxResolution) + "]");
    }
}

enum class Axis { time, frequency };

/// Time kind: [index 2^-level, (index+1) 2^-level) inside [0,1).
/// Frequency kind: [index 2^level, (index+1) 2^level) inside [0, inf).
struct DyadicInterval {
    Axis kind = Axis::time;
    int level = 0;
    std::uint64_t index = 0;

    [[nodiscard]] double length() const {
        return kind == Axis::time ? std::ldexp(1.0, -level) : std::ldexp(1.0, level);
    }

    [[nodiscard]] bool contains(const DyadicInterval& other) const {
        if (kind != other.kind) return false;
        if (kind == Axis::time) {
            return level <= other.level && (other.index >> (other.level - level)) == index;
        }
        return level >= other.level && (other.index >> (level - other.level)) == index;
    }

    [[nodiscard]] bool intersects(const DyadicInterval& other) const {
        return contains(other) || other.contains(*this);
    }

    /// Frequency intervals only: whether the integer n lies in the interval.
    [[nodiscard]] bool contains_point(std::uint64_t n) const {
        return kind == Axis::frequency && (n >> level) == index;
    }

    [[nodiscard]] std::uint64_t inf_frequency() const { return index << level; }

    friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
    friend auto operator<=>(const DyadicInterval&, const DyadicInterval&) = default;
};

/// First cell and cell count of a time interval on a 2^resolution grid.
struct CellRange {
    std::size_t begin = 0;
    std::size_t count = 0;
};

inline CellRange cells_of(const DyadicInterval& time, int resolution) {
    if (time.kind != Axis::time || time.level > resolution) {
        throw ResolutionError("time interval finer than the grid");
    }
    const int shift = resolution - time.level;
    return {static_cast<std::size_t>(time.index) << shift, std::size_t{1} << shift};
}

/// Area-one dyadic rectangle; time level j pairs with frequency level j.
struct Tile {
    int level = 0;
    std::uint64_t time_index = 0;
    std::uint64_t freq_index = 0;

    [[nodiscard]] DyadicInterval time() const { return {Axis::time, level, time_index}; }
    [[nodiscard]] DyadicInterval freq() const { return {Axis::frequency, level, freq_index}; }
    /// Walsh index of the packet, |I_t| inf(omega_t).
    [[nodiscard]] std::uint64_t walsh_index() const { return freq_index; }

    /// Packet defined on the 2^resolution grid.
    [[nodiscard]] bool representable(int resolution) const {
        return level >= 0 && level <= resolution && time_index < (std::uint64_t{1} << level) &&
               freq_index < (std::uint64_t{1} << (resolution - level));
    }

    friend bool operator==(const Tile&, const Tile&) = default;
    friend auto operator<=>(const Tile&, const Tile&) = default;
};

/// Area-two dyadic rectangle I x omega with |omega| = 2 |I|^{-1}.
struct Bitile {
    int level = 0;  // time level
    std::uint64_t time_index = 0;
    std::uint64_t freq_index = 0;  // omega = [freq_index 2^{level+1}, (freq_index+1) 2^{level+1})

    [[nodiscard]] DyadicInterval time() const { return {Axis::time, level, time_index}; }
    [[nodiscard]] DyadicInterval freq() const { return {Axis::frequency, level + 1, freq_index}; }
    [[nodiscard]] Tile lower() const { return {level, time_index, 2 * freq_index}; }
    [[nodiscard]] Tile upper() const { return {level, time_index, 2 * freq_index + 1}; }

    /// The lower child's packet lives on the grid.
    [[nodiscard]] bool representable(int resolution) const { return lower().representable(resolution); }

    [[nodiscard]] std::uint64_t key() const {
        return (static_cast<std::uint64_t>(level) << 58) | (time_index << 29) | freq_index;
    }
    static Bitile from_key(std::uint64_t key) {
        constexpr std::uint64_t mask = (std::uint64_t{1} << 29) - 1;
        return {static_cast<int>(key >> 58), (key >> 29) & mask, key & mask};
    }

    friend bool operator==(const Bitile&, const Bitile&) = default;
    friend auto operator<=>(const Bitile&, const Bitile&) = default;
};

namespace detail {
// Tiles and bitiles share the rule: frequency levels differ by the time-level gap.
template <class R>
bool feff_leq_impl(const R& a, const R& b) {
    if (a.level < b.level) return false;
    const int d = a.level - b.level;
    return (a.time_index >> d) == b.time_index && (b.freq_index >> d) == a.freq_index;
}
}  // namespace detail

/// Fefferman order a << b: I_a inside I_b and omega_a containing omega_b.
inline bool feff_leq(const Bitile& a, const Bitile& b) { return detail::feff_leq_impl(a, b); }
inline bool feff_leq(const Tile& a, const Tile& b) { return detail::feff_leq_impl(a, b); }

/// Rectangles (as subsets of the phase plane) intersect.
inline bool overlaps(const Tile& a, const Tile& b) {
    return a.time().intersects(b.time()) && a.freq().intersects(b.freq());
}

inline std::string to_string(const DyadicInterval& i) {
    return std::string(i.kind == Axis::time ? "T" : "F") + "(" + std::to_string(i.level) + "," +
           std::to_string(i.index) + ")";
}
inline std::string to_string(const Bitile& s) {
    return "[" + to_string(s.time()) + " x " + to_string(s.freq()) + "]";
}

}  // namespace lacuna

template <>
struct std::hash<lacuna::Bitile> {
    std::size_t operator()(const lacuna::Bitile& s) const noexcept {
        return std::hash<std::uint64_t>{}(s.key());
    }
};
