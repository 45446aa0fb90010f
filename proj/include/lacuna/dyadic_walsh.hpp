#pragma once

// Walsh-Paley system on the dyadic grid of 2^N cells: Rademacher factors,
// Walsh functions, the fast Walsh transform, partial sums and tile packets.

#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lacuna/error.hpp"
#include "lacuna/geometry.hpp"

namespace lacuna {

using Complex = std::complex<double>;

/// A function on the torus [0,1), constant on the 2^N half-open cells.
class GridSignal {
public:
    GridSignal() = default;

    /// Zero signal at the given resolution.
    explicit GridSignal(int resolution) : resolution_(resolution) {
        check_resolution(resolution);
        values_.assign(std::size_t{1} << resolution, Complex{});
    }

    GridSignal(int resolution, std::vector<Complex> values)
        : resolution_(resolution), values_(std::move(values)) {
        check_resolution(resolution);
        if (values_.size() != (std::size_t{1} << resolution)) {
            throw ResolutionError("signal length " + std::to_string(values_.size()) +
                                  " is not 2^" + std::to_string(resolution));
        }
    }

    static GridSignal from_real(int resolution, std::span<const double> values) {
        std::vector<Complex> v(values.begin(), values.end());
        return GridSignal(resolution, std::move(v));
    }

    static GridSignal constant(int resolution, Complex c) {
        GridSignal g(resolution);
        for (auto& v : g.values_) v = c;
        return g;
    }

    [[nodiscard]] int resolution() const { return resolution_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] double cell_measure() const { return std::ldexp(1.0, -resolution_); }

    [[nodiscard]] const std::vector<Complex>& values() const { return values_; }
    std::vector<Complex>& values() { return values_; }

    Complex& operator[](std::size_t i) { return values_[i]; }
    const Complex& operator[](std::size_t i) const { return values_[i]; }

    GridSignal& operator+=(const GridSignal& other) {
        require_same_grid(other);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
        return *this;
    }
    GridSignal& operator-=(const GridSignal& other) {
        require_same_grid(other);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
        return *this;
    }
    GridSignal& operator*=(Complex c) {
        for (auto& v : values_) v *= c;
        return *this;
    }
    friend GridSignal operator+(GridSignal a, const GridSignal& b) { return a += b; }
    friend GridSignal operator-(GridSignal a, const GridSignal& b) { return a -= b; }
    friend GridSignal operator*(Complex c, GridSignal a) { return a *= c; }

    /// Pointwise product.
    friend GridSignal operator*(const GridSignal& a, const GridSignal& b) {
        a.require_same_grid(b);
        GridSignal out(a.resolution_);
        for (std::size_t i = 0; i < a.size(); ++i) out.values_[i] = a.values_[i] * b.values_[i];
        return out;
    }

    /// <f, g> = integral of f conj(g) over the torus.
    [[nodiscard]] Complex inner(const GridSignal& other) const {
        require_same_grid(other);
        Complex acc{};
        for (std::size_t i = 0; i < values_.size(); ++i) acc += values_[i] * std::conj(other.values_[i]);
        return acc * cell_measure();
    }

    [[nodiscard]] double l2_norm() const { return std::sqrt(inner(*this).real()); }

    [[nodiscard]] double sup_norm() const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    [[nodiscard]] double max_abs_diff(const GridSignal& other) const {
        require_same_grid(other);
        double m = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) m = std::max(m, std::abs(values_[i] - other.values_[i]));
        return m;
    }

    void require_same_grid(const GridSignal& other) const {
        if (other.resolution_ != resolution_) {
            throw ResolutionError("signals live on different grids (" + std::to_string(resolution_) +
                                  " vs " + std::to_string(other.resolution_) + ")");
        }
    }

private:
    int resolution_ = 0;
    std::vector<Complex> values_{Complex{}};
};

/// Nonnegative frequency n of the Walsh system.
struct WalshIndex {
    std::uint64_t n = 0;
};

namespace detail {

inline std::uint64_t bit_reverse(std::uint64_t i, int bits) {
    std::uint64_t r = 0;
    for (int b = 0; b < bits; ++b) {
        r = (r << 1) | (i & 1u);
        i >>= 1;
    }
    return r;
}

/// W_n on cell i at resolution `bits`: r_k flips on bit (bits-1-k) of i.
inline int walsh_sign(std::uint64_t n, std::uint64_t cell, int bits) {
    return (std::popcount(n & bit_reverse(cell, bits)) & 1) ? -1 : 1;
}

/// Unnormalized Hadamard butterfly: out[j] = sum_i in[i] (-1)^{popcount(i & j)}.
inline void hadamard_in_place(std::span<Complex> data) {
    const std::size_t n = data.size();
    for (std::size_t h = 1; h < n; h <<= 1) {
        for (std::size_t i = 0; i < n; i += h << 1) {
            for (std::size_t j = i; j < i + h; ++j) {
                const Complex x = data[j];
                const Complex y = data[j + h];
                data[j] = x + y;
                data[j + h] = x - y;
            }
        }
    }
}

/// Paley-ordered coefficients of one block of 2^bits samples, normalized by
/// the block length; out[b] = mean over the block of data * W_b.
inline void block_walsh_coefficients(std::span<const Complex> block, int bits, std::span<Complex> out) {
    std::vector<Complex> work(block.begin(), block.end());
    hadamard_in_place(work);
    const double scale = std::ldexp(1.0, -bits);
    for (std::size_t b = 0; b < work.size(); ++b) {
        out[b] = work[bit_reverse(b, bits)] * scale;
    }
}

}  // namespace detail

/// Rademacher factor sign sin(2^k 2 pi x): +1 on even cells of level k+1.
inline GridSignal rademacher(int k, int resolution) {
    check_resolution(resolution);
    if (k < 0 || k >= resolution) {
        throw ResolutionError("rademacher factor " + std::to_string(k) + " needs resolution > " +
                              std::to_string(k) + ", grid has " + std::to_string(resolution));
    }
    GridSignal r(resolution);
    const int shift = resolution - k - 1;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = ((i >> shift) & 1u) ? -1.0 : 1.0;
    return r;
}

inline void check_frequency(std::uint64_t n, int resolution) {
    if (n >= (std::uint64_t{1} << resolution)) {
        throw ResolutionError("frequency " + std::to_string(n) + " beyond grid 2^" + std::to_string(resolution));
    }
}

/// Walsh-Paley function W_n = prod_k r_k^{eps_k(n)}.
inline GridSignal walsh_function(WalshIndex n, int resolution) {
    check_resolution(resolution);
    check_frequency(n.n, resolution);
    GridSignal w(resolution);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(detail::walsh_sign(n.n, i, resolution));
    return w;
}

/// output[k] = <f, W_k>, in O(2^N N).
inline std::vector<Complex> walsh_coefficients(const GridSignal& f) {
    std::vector<Complex> out(f.size());
    detail::block_walsh_coefficients(f.values(), f.resolution(), out);
    return out;
}

/// Inverse of walsh_coefficients: sum_k c_k W_k.
inline GridSignal walsh_synthesis(std::span<const Complex> coefficients, int resolution) {
    check_resolution(resolution);
    if (coefficients.size() != (std::size_t{1} << resolution)) {
        throw ResolutionError("coefficient count does not match resolution");
    }
    std::vector<Complex> work(coefficients.size());
    for (std::size_t m = 0; m < work.size(); ++m) work[m] = coefficients[detail::bit_reverse(m, resolution)];
    detail::hadamard_in_place(work);
    return GridSignal(resolution, std::move(work));
}

/// W_n f = sum_{k <= n} <f, W_k> W_k.
inline GridSignal partial_sum(const GridSignal& f, WalshIndex n) {
    check_frequency(n.n, f.resolution());
    auto c = walsh_coefficients(f);
    for (std::size_t k = n.n + 1; k < c.size(); ++k) c[k] = Complex{};
    return walsh_synthesis(c, f.resolution());
}

/// Same as partial_sum but reusing precomputed coefficients.
inline GridSignal partial_sum_from_coefficients(std::span<const Complex> c, std::uint64_t n, int resolution) {
    check_frequency(n, resolution);
    std::vector<Complex> masked(c.begin(), c.end());
    for (std::size_t k = n + 1; k < masked.size(); ++k) masked[k] = Complex{};
    return walsh_synthesis(masked, resolution);
}

/// L^2-normalized packet |I|^{-1/2} W_{n_t}((x - inf I)/|I|) supported on I.
inline GridSignal wave_packet(const Tile& t, int resolution) {
    check_resolution(resolution);
    if (!t.representable(resolution)) {
        throw ResolutionError("tile " + std::to_string(t.level) + "/" + std::to_string(t.time_index) + "/" +
                              std::to_string(t.freq_index) + " not representable at resolution " +
                              std::to_string(resolution));
    }
    GridSignal w(resolution);
    const auto cells = cells_of(t.time(), resolution);
    const int local_bits = resolution - t.level;
    const double amp = std::sqrt(std::ldexp(1.0, t.level));
    for (std::size_t i = 0; i < cells.count; ++i) {
        w[cells.begin + i] = amp * detail::walsh_sign(t.freq_index, i, local_bits);
    }
    return w;
}

/// Packet value at one cell (zero off the time interval).
inline double wave_packet_value(const Tile& t, std::size_t cell, int resolution) {
    const int local_bits = resolution - t.level;
    if ((cell >> local_bits) != t.time_index) return 0.0;
    const std::uint64_t local = cell & ((std::uint64_t{1} << local_bits) - 1);
    return std::sqrt(std::ldexp(1.0, t.level)) * detail::walsh_sign(t.freq_index, local, local_bits);
}

/// All packet coefficients <f, w_t> for every representable tile, computed
/// level by level with block Walsh transforms (O(2^N N^2) total).
class PacketTable {
public:
    explicit PacketTable(const GridSignal& f) : resolution_(f.resolution()) {
        const int n = resolution_;
        levels_.resize(static_cast<std::size_t>(n) + 1);
        for (int j = 0; j <= n; ++j) {
            auto& table = levels_[static_cast<std::size_t>(j)];
            table.resize(f.size());
            const std::size_t block = std::size_t{1} << (n - j);
            const double scale = std::sqrt(std::ldexp(1.0, -j));
            for (std::size_t a = 0; a < (std::size_t{1} << j); ++a) {
                std::span<const Complex> in(f.values().data() + a * block, block);
                std::span<Complex> out(table.data() + a * block, block);
                detail::block_walsh_coefficients(in, n - j, out);
                for (auto& v : out) v *= scale;
            }
        }
    }

    [[nodiscard]] int resolution() const { return resolution_; }

    /// <f, w_t>; tiles whose frequency exceeds the grid pair to zero with
    /// cell-constant signals.
    [[nodiscard]] Complex coefficient(const Tile& t) const {
        if (t.level < 0 || t.level > resolution_) throw ResolutionError("tile finer than the grid");
        const std::size_t block = std::size_t{1} << (resolution_ - t.level);
        if (t.freq_index >= block) return Complex{};
        return levels_[static_cast<std::size_t>(t.level)][t.time_index * block + t.freq_index];
    }

private:
    int resolution_;
    std::vector<std::vector<Complex>> levels_;
};

// ---------------------------------------------------------------------------
// Signal CSV: header `index,re,im`, one row per cell, 17 significant digits.

inline void write_signal_csv(std::ostream& os, const GridSignal& f) {
    os << "index,re,im\n";
    char buf[96];
    for (std::size_t i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, f[i].real(), f[i].imag());
        os << buf;
    }
}

inline GridSignal read_signal_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("signal CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "index,re,im") throw FormatError("signal CSV: expected header 'index,re,im', got '" + line + "'");
    std::vector<Complex> values;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string idx, re, im;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, re, ',') || !std::getline(ss, im)) {
            throw FormatError("signal CSV: malformed row " + std::to_string(row + 1));
        }
        char* end = nullptr;
        const auto index = std::strtoull(idx.c_str(), &end, 10);
        if (*end != '\0' || index != row) throw FormatError("signal CSV: row " + std::to_string(row + 1) + " has index " + idx);
        const double r = std::strtod(re.c_str(), &end);
        if (*end != '\0') throw FormatError("signal CSV: bad real part '" + re + "'");
        const double m = std::strtod(im.c_str(), &end);
        if (*end != '\0') throw FormatError("signal CSV: bad imaginary part '" + im + "'");
        values.emplace_back(r, m);
        ++row;
    }
    if (values.empty() || !std::has_single_bit(values.size())) {
        throw FormatError("signal CSV: row count " + std::to_string(values.size()) + " is not a power of two");
    }
    const int resolution = std::countr_zero(values.size());
    return GridSignal(resolution, std::move(values));
}

inline void save_signal_csv(const std::string& path, const GridSignal& f) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot open '" + path + "' for writing");
    write_signal_csv(os, f);
    if (!os) throw FormatError("write failed for '" + path + "'");
}

inline GridSignal load_signal_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot open '" + path + "'");
    try {
        return read_signal_csv(is);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

/// One level of a distribution: |g| = value on a set of the given measure.
struct DistributionLevel {
    double value = 0.0;
    double measure = 0.0;
};

}  // namespace lacuna
