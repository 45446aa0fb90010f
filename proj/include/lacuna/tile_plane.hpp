#pragma once

// Bitile collections, Fefferman-order convexity, trees, forests, crowns and
// the counting / crown functions of a forest.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <bit>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lacuna/dyadic_walsh.hpp"
#include "lacuna/error.hpp"
#include "lacuna/geometry.hpp"

namespace lacuna {

/// Finite set of bitiles with O(1) membership and a canonical iteration order
/// (level, time index, frequency index).
class BitileSet {
public:
    BitileSet() = default;
    BitileSet(std::initializer_list<Bitile> items) {
        for (const auto& s : items) insert(s);
    }
    template <class It>
    BitileSet(It first, It last) {
        for (; first != last; ++first) insert(*first);
    }

    bool insert(const Bitile& s) {
        if (keys_.contains(s.key())) return false;
        if (stale_) (void)items();  // compact first so a re-inserted key is not listed twice
        keys_.insert(s.key());
        items_.push_back(s);
        sorted_ = false;
        return true;
    }
    bool erase(const Bitile& s) {
        if (keys_.erase(s.key()) == 0) return false;
        stale_ = true;
        return true;
    }
    [[nodiscard]] bool contains(const Bitile& s) const { return keys_.contains(s.key()); }
    [[nodiscard]] std::size_t size() const { return keys_.size(); }
    [[nodiscard]] bool empty() const { return keys_.empty(); }

    [[nodiscard]] const std::vector<Bitile>& items() const {
        if (stale_) {
            std::erase_if(items_, [&](const Bitile& s) { return !keys_.contains(s.key()); });
            stale_ = false;
        }
        if (!sorted_) {
            std::sort(items_.begin(), items_.end());
            sorted_ = true;
        }
        return items_;
    }
    [[nodiscard]] auto begin() const { return items().begin(); }
    [[nodiscard]] auto end() const { return items().end(); }

    friend bool operator==(const BitileSet& a, const BitileSet& b) {
        return a.size() == b.size() && std::all_of(a.begin(), a.end(), [&](const Bitile& s) { return b.contains(s); });
    }

private:
    mutable std::vector<Bitile> items_;
    mutable bool sorted_ = true;
    mutable bool stale_ = false;  // erased keys still listed in items_
    std::unordered_set<std::uint64_t> keys_;
};

inline BitileSet set_union(const BitileSet& a, const BitileSet& b) {
    BitileSet out = a;
    for (const auto& s : b) out.insert(s);
    return out;
}

inline BitileSet set_intersection(const BitileSet& a, const BitileSet& b) {
    BitileSet out;
    for (const auto& s : a)
        if (b.contains(s)) out.insert(s);
    return out;
}

/// All bitiles with time level 0..N-1 and frequency interval inside [0, freq_bound).
inline BitileSet enumerate_bitiles(int resolution, std::uint64_t freq_bound) {
    check_resolution(resolution);
    if (freq_bound > (std::uint64_t{1} << resolution)) {
        throw ResolutionError("frequency bound " + std::to_string(freq_bound) + " exceeds 2^" +
                              std::to_string(resolution));
    }
    BitileSet out;
    for (int j = 0; j < resolution; ++j) {
        const std::uint64_t width = std::uint64_t{1} << (j + 1);
        const std::uint64_t count = freq_bound / width;
        for (std::uint64_t a = 0; a < (std::uint64_t{1} << j); ++a)
            for (std::uint64_t c = 0; c < count; ++c) out.insert({j, a, c});
    }
    return out;
}

/// Every bitile whose lower tile lives on the grid, time levels 0..N. The
/// level-N bitiles reach the top frequency 2^N through their upper half.
inline BitileSet grid_bitiles(int resolution) {
    check_resolution(resolution);
    BitileSet out;
    for (int j = 0; j <= resolution; ++j) {
        const std::uint64_t count = j < resolution ? (std::uint64_t{1} << (resolution - j - 1)) : 1;
        for (std::uint64_t a = 0; a < (std::uint64_t{1} << j); ++a)
            for (std::uint64_t c = 0; c < count; ++c) out.insert({j, a, c});
    }
    return out;
}

namespace detail {

// Walks the cone {b : s << b} of a bitile. For every non-member b of the cone
// with a member strictly above it, s << b << member is a convexity violation.
class ConeWalker {
public:
    explicit ConeWalker(const BitileSet& set) : set_(set) {}

    /// True if some b in the cone of s (b != s) breaks convexity.
    bool has_violation(const Bitile& s) {
        violation_ = false;
        root_ = s;
        walk(s);
        return violation_;
    }

private:
    // Returns whether the cone of b (inclusive) holds a member.
    bool walk(const Bitile& b) {
        bool above = false;
        if (b.level > 0) {
            const Bitile lo{b.level - 1, b.time_index >> 1, 2 * b.freq_index};
            const Bitile hi{b.level - 1, b.time_index >> 1, 2 * b.freq_index + 1};
            above = walk(lo);
            above = walk(hi) || above;
        }
        const bool member = set_.contains(b);
        if (above && !member && !(b == root_)) violation_ = true;
        return above || member;
    }

    const BitileSet& set_;
    Bitile root_{};
    bool violation_ = false;
};

}  // namespace detail

/// s, s'' in S and s << s' << s'' (s' any grid bitile) imply s' in S.
inline bool is_convex(const BitileSet& set, int resolution) {
    check_resolution(resolution);
    detail::ConeWalker walker(set);
    for (const auto& s : set) {
        if (!s.representable(resolution)) throw ResolutionError("bitile " + to_string(s) + " not on the grid");
        if (walker.has_violation(s)) return false;
    }
    return true;
}

/// Drops every bitile that is the lower end of a violating chain. One pass
/// suffices: the survivors form a convex subset.
inline BitileSet convex_interior(const BitileSet& set, int resolution) {
    check_resolution(resolution);
    detail::ConeWalker walker(set);
    BitileSet out;
    for (const auto& s : set)
        if (!walker.has_violation(s)) out.insert(s);
    return out;
}

/// Bitiles of `pool` that are << top (the down-cone of top inside pool).
inline std::vector<Bitile> down_cone(const Bitile& top, const BitileSet& pool, int resolution) {
    std::vector<Bitile> out;
    const int max_level = resolution;
    for (int l = top.level; l <= max_level; ++l) {
        const int d = l - top.level;
        const std::uint64_t freq = top.freq_index >> d;
        for (std::uint64_t k = 0; k < (std::uint64_t{1} << d); ++k) {
            const Bitile s{l, (top.time_index << d) | k, freq};
            if (pool.contains(s)) out.push_back(s);
        }
    }
    return out;
}

/// ≪-maximal elements of a set.
inline std::vector<Bitile> maximal_elements(const BitileSet& set) {
    std::vector<Bitile> out;
    for (const auto& s : set) {
        bool dominated = false;
        // Walk the up-cone of s looking for any member above it.
        std::vector<Bitile> stack;
        if (s.level > 0) {
            stack.push_back({s.level - 1, s.time_index >> 1, 2 * s.freq_index});
            stack.push_back({s.level - 1, s.time_index >> 1, 2 * s.freq_index + 1});
        }
        while (!stack.empty() && !dominated) {
            const Bitile b = stack.back();
            stack.pop_back();
            if (set.contains(b)) {
                dominated = true;
                break;
            }
            if (b.level > 0) {
                stack.push_back({b.level - 1, b.time_index >> 1, 2 * b.freq_index});
                stack.push_back({b.level - 1, b.time_index >> 1, 2 * b.freq_index + 1});
            }
        }
        if (!dominated) out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Crowns

/// Union of frequency intervals, kept as the minimal disjoint dyadic cover.
class Crown {
public:
    Crown() = default;

    explicit Crown(std::vector<DyadicInterval> pieces) {
        std::map<std::pair<int, std::uint64_t>, bool> cover;
        // Largest first so nested pieces are absorbed.
        std::sort(pieces.begin(), pieces.end(),
                  [](const DyadicInterval& a, const DyadicInterval& b) { return a.level > b.level; });
        std::vector<DyadicInterval> kept;
        for (const auto& p : pieces) {
            if (p.kind != Axis::frequency) throw ParameterError("crown pieces must be frequency intervals");
            if (std::none_of(kept.begin(), kept.end(), [&](const DyadicInterval& k) { return k.contains(p); }))
                kept.push_back(p);
        }
        for (const auto& k : kept) cover[{k.level, k.index}] = true;
        // Merge sibling pairs into their parent until none remain.
        bool merged = true;
        while (merged) {
            merged = false;
            for (auto it = cover.begin(); it != cover.end(); ++it) {
                const auto [level, index] = it->first;
                if (index % 2 == 0 && cover.contains({level, index + 1})) {
                    cover.erase({level, index + 1});
                    cover.erase(it);
                    cover[{level + 1, index / 2}] = true;
                    merged = true;
                    break;
                }
            }
        }
        for (const auto& [key, unused] : cover) intervals_.push_back({Axis::frequency, key.first, key.second});
        std::sort(intervals_.begin(), intervals_.end(), [](const DyadicInterval& a, const DyadicInterval& b) {
            return a.inf_frequency() < b.inf_frequency();
        });
    }

    [[nodiscard]] const std::vector<DyadicInterval>& intervals() const { return intervals_; }
    [[nodiscard]] bool empty() const { return intervals_.empty(); }

    [[nodiscard]] bool contains(std::uint64_t n) const {
        auto it = std::upper_bound(intervals_.begin(), intervals_.end(), n,
                                   [](std::uint64_t v, const DyadicInterval& i) { return v < i.inf_frequency(); });
        if (it == intervals_.begin()) return false;
        return std::prev(it)->contains_point(n);
    }

    friend bool operator==(const Crown&, const Crown&) = default;

private:
    std::vector<DyadicInterval> intervals_;
};

// ---------------------------------------------------------------------------
// Trees and forests

/// Bitiles all << a top bitile.
struct Tree {
    Bitile top;
    std::vector<Bitile> members;

    Tree() = default;
    Tree(Bitile t, std::vector<Bitile> m) : top(t), members(std::move(m)) {
        std::sort(members.begin(), members.end());
        for (const auto& s : members) {
            if (!feff_leq(s, top)) throw PreconditionError("tree member " + to_string(s) + " not below top " + to_string(top));
        }
    }

    [[nodiscard]] BitileSet member_set() const { return BitileSet(members.begin(), members.end()); }
};

inline Crown crown(const Tree& tree) {
    std::vector<DyadicInterval> pieces;
    pieces.reserve(tree.members.size());
    for (const auto& s : tree.members) pieces.push_back(s.upper().freq());
    return Crown(std::move(pieces));
}

/// Partition of a bitile collection into trees.
class Forest {
public:
    Forest() = default;
    explicit Forest(std::vector<Tree> trees) : trees_(std::move(trees)) {
        std::unordered_set<std::uint64_t> seen;
        for (const auto& t : trees_)
            for (const auto& s : t.members)
                if (!seen.insert(s.key()).second) throw InternalError("forest trees overlap at " + to_string(s));
    }

    [[nodiscard]] const std::vector<Tree>& trees() const { return trees_; }
    [[nodiscard]] std::size_t size() const { return trees_.size(); }
    [[nodiscard]] bool empty() const { return trees_.empty(); }

    [[nodiscard]] BitileSet members() const {
        BitileSet out;
        for (const auto& t : trees_)
            for (const auto& s : t.members) out.insert(s);
        return out;
    }

    /// ||N_F||_1 = sum of top interval lengths.
    [[nodiscard]] double counting_norm() const {
        double total = 0.0;
        for (const auto& t : trees_) total += t.top.time().length();
        return total;
    }

private:
    std::vector<Tree> trees_;
};

/// Per-cell frequency choice N(x).
class ChoiceFunction {
public:
    ChoiceFunction() = default;
    ChoiceFunction(int resolution, std::vector<std::uint64_t> values)
        : resolution_(resolution), values_(std::move(values)) {
        check_resolution(resolution);
        if (values_.size() != (std::size_t{1} << resolution))
            throw ResolutionError("choice function length does not match resolution");
        const std::uint64_t limit = std::uint64_t{1} << resolution;
        for (auto v : values_)
            if (v > limit) throw ResolutionError("choice value " + std::to_string(v) + " above 2^" + std::to_string(resolution));
    }
    static ChoiceFunction constant(int resolution, std::uint64_t n) {
        return ChoiceFunction(resolution, std::vector<std::uint64_t>(std::size_t{1} << resolution, n));
    }

    [[nodiscard]] int resolution() const { return resolution_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] std::uint64_t operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] const std::vector<std::uint64_t>& values() const { return values_; }

private:
    int resolution_ = 0;
    std::vector<std::uint64_t> values_{0};
};

/// N_F(x) = number of tree tops whose interval contains x.
inline GridSignal counting_function(const Forest& forest, int resolution) {
    GridSignal out(resolution);
    for (const auto& t : forest.trees()) {
        const auto cells = cells_of(t.top.time(), resolution);
        for (std::size_t i = 0; i < cells.count; ++i) out[cells.begin + i] += 1.0;
    }
    return out;
}

/// W_F(x) = number of trees with x in I_T and N(x) in cr(T).
inline GridSignal crown_function(const Forest& forest, const ChoiceFunction& choice, int resolution) {
    if (choice.resolution() != resolution) throw ResolutionError("choice function resolution mismatch");
    GridSignal out(resolution);
    for (const auto& t : forest.trees()) {
        const Crown cr = crown(t);
        const auto cells = cells_of(t.top.time(), resolution);
        for (std::size_t i = 0; i < cells.count; ++i)
            if (cr.contains(choice[cells.begin + i])) out[cells.begin + i] += 1.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON: bitile sets and forests

inline nlohmann::json bitile_record(const Bitile& s) {
    return {{"time_level", s.level}, {"time_index", s.time_index}, {"freq_level", s.level + 1}, {"freq_index", s.freq_index}};
}

inline Bitile bitile_from_record(const nlohmann::json& r) {
    try {
        const int tl = r.at("time_level").get<int>();
        const int fl = r.at("freq_level").get<int>();
        if (fl != tl + 1) throw FormatError("bitile record needs freq_level = time_level + 1");
        const Bitile s{tl, r.at("time_index").get<std::uint64_t>(), r.at("freq_index").get<std::uint64_t>()};
        if (tl < 0 || s.time_index >= (std::uint64_t{1} << tl)) throw FormatError("bitile record outside [0,1)");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bitile record: ") + e.what());
    }
}

inline nlohmann::json to_json(const BitileSet& set) {
    auto arr = nlohmann::json::array();
    for (const auto& s : set) arr.push_back(bitile_record(s));
    return arr;
}

inline BitileSet bitile_set_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw FormatError("bitile set JSON must be a list");
    BitileSet out;
    for (const auto& r : j) out.insert(bitile_from_record(r));
    return out;
}

inline nlohmann::json to_json(const Forest& forest) {
    auto arr = nlohmann::json::array();
    for (std::size_t id = 0; id < forest.size(); ++id) {
        const auto& t = forest.trees()[id];
        bool top_listed = false;
        for (const auto& s : t.members) {
            auto r = bitile_record(s);
            r["tree_id"] = id;
            r["is_top"] = s == t.top;
            top_listed = top_listed || s == t.top;
            arr.push_back(std::move(r));
        }
        if (!top_listed) {
            auto r = bitile_record(t.top);
            r["tree_id"] = id;
            r["is_top"] = true;
            r["member"] = false;
            arr.push_back(std::move(r));
        }
    }
    return arr;
}

inline Forest forest_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw FormatError("forest JSON must be a list");
    std::map<std::size_t, std::pair<std::optional<Bitile>, std::vector<Bitile>>> trees;
    for (const auto& r : j) {
        const Bitile s = bitile_from_record(r);
        std::size_t id = 0;
        bool is_top = false;
        try {
            id = r.at("tree_id").get<std::size_t>();
            is_top = r.at("is_top").get<bool>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("forest record: ") + e.what());
        }
        auto& entry = trees[id];
        if (is_top) {
            if (entry.first) throw FormatError("tree " + std::to_string(id) + " has two tops");
            entry.first = s;
        }
        if (r.value("member", true)) entry.second.push_back(s);
    }
    std::vector<Tree> out;
    for (auto& [id, entry] : trees) {
        if (!entry.first) throw FormatError("tree " + std::to_string(id) + " has no top");
        out.emplace_back(*entry.first, std::move(entry.second));
    }
    return Forest(std::move(out));
}

// Choice function CSV: header `index,frequency`.

inline void write_choice_csv(std::ostream& os, const ChoiceFunction& choice) {
    os << "index,frequency\n";
    for (std::size_t i = 0; i < choice.size(); ++i) os << i << ',' << choice[i] << '\n';
}

inline ChoiceFunction read_choice_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || (line != "index,frequency" && line != "index,frequency\r"))
        throw FormatError("choice CSV: expected header 'index,frequency'");
    std::vector<std::uint64_t> values;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r") continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("choice CSV: malformed row '" + line + "'");
        try {
            if (std::stoull(line.substr(0, comma)) != values.size()) throw FormatError("choice CSV: rows out of order");
            values.push_back(std::stoull(line.substr(comma + 1)));
        } catch (const std::logic_error&) {
            throw FormatError("choice CSV: bad number in '" + line + "'");
        }
    }
    if (values.empty() || !std::has_single_bit(values.size()))
        throw FormatError("choice CSV: row count is not a power of two");
    const int resolution = std::countr_zero(values.size());
    return ChoiceFunction(resolution, std::move(values));
}

}  // namespace lacuna
