#pragma once

// Norms on the dyadic grid, iterated logarithms, Young functions and the
// layer-cake embedding decomposition carried out in log domain.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lacuna/dyadic_walsh.hpp"
#include "lacuna/error.hpp"
#include "lacuna/geometry.hpp"

namespace lacuna {

namespace detail {

inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (std::isinf(a)) return a;
    return a + std::log1p(std::exp(b - a));
}

inline double iterate_log(double y, int times) {
    for (int i = 0; i < times; ++i) y = std::log(y);
    return y;
}

inline double log_sum_exp(const std::vector<double>& xs) {
    double acc = -std::numeric_limits<double>::infinity();
    for (double x : xs) acc = log_add_exp(acc, x);
    return acc;
}

}  // namespace detail

/// e_0 = 1, e_k = exp(e_{k-1}); +inf from k = 4 on.
inline double tower_constant(int k) {
    if (k < 0) throw ParameterError("tower index must be nonnegative");
    double e = 1.0;
    for (int i = 0; i < k && std::isfinite(e); ++i) e = std::exp(e);
    return e;
}

inline double log_tower_from_log(int k, double log_t);

/// log_k(t) = log(...log(e_k + t)) with k logarithms; log_0(t) = 1 + t.
inline double log_tower(int k, double t) {
    if (k < 0) throw ParameterError("tower index must be nonnegative");
    if (!(t >= 0.0)) throw ParameterError("log_tower: t must be >= 0");
    if (k == 0) return 1.0 + t;
    if (t == 0.0) return 1.0;
    if (k <= 3 && std::isfinite(t)) return detail::iterate_log(std::log(tower_constant(k) + t), k - 1);
    return log_tower_from_log(k, std::log(t));
}

/// log_k(t) given log t.
inline double log_tower_from_log(int k, double log_t) {
    if (k < 0) throw ParameterError("tower index must be nonnegative");
    if (std::isnan(log_t)) throw ParameterError("log_tower_from_log: NaN argument");
    if (k == 0) return 1.0 + std::exp(log_t);
    const double c = tower_constant(k - 1);  // log e_k
    // From k = 5 on e_k dwarfs every double-range t and the tower returns 1.
    if (std::isinf(c)) return 1.0;
    return detail::iterate_log(detail::log_add_exp(c, log_t), k - 1);
}

/// log_k(t) given log log t, for k >= 2 (k = 0, 1 overflow at tower scale).
inline double log_tower_from_loglog(int k, double loglog_t) {
    if (std::isnan(loglog_t)) throw ParameterError("log_tower_from_loglog: NaN argument");
    if (loglog_t < 700.0) return log_tower_from_log(k, std::exp(loglog_t));
    if (k < 2) return std::numeric_limits<double>::infinity();
    // log log(e_k + t) = max(log log e_k, log log t) up to a relative e^{-700}.
    const double lc = tower_constant(k - 2);
    if (std::isinf(lc)) return 1.0;
    return detail::iterate_log(std::max(lc, loglog_t), k - 2);
}

/// phi_b(t) = t log_2(t) log_b(t), used for every t >= 0.
inline double young_phi(int b, double t) {
    if (b != 3 && b != 4) throw ParameterError("Young function index must be 3 or 4");
    if (!(t >= 0.0)) throw ParameterError("young_phi: t must be >= 0");
    if (t == 0.0) return 0.0;
    return t * log_tower(2, t) * log_tower(b, t);
}

/// log phi_b(t) given log t; safe far beyond the double range of t.
inline double young_phi_log(int b, double log_t) {
    if (b != 3 && b != 4) throw ParameterError("Young function index must be 3 or 4");
    if (log_t == -std::numeric_limits<double>::infinity()) return log_t;
    return log_t + std::log(log_tower_from_log(2, log_t)) + std::log(log_tower_from_log(b, log_t));
}

struct YoungFunction {
    int b = 4;

    explicit YoungFunction(int index) : b(index) {
        if (b != 3 && b != 4) throw ParameterError("Young function index must be 3 or 4");
    }
    double operator()(double t) const { return young_phi(b, t); }
    [[nodiscard]] double log_value(double log_t) const { return young_phi_log(b, log_t); }
};

// ---------------------------------------------------------------------------
// Norms on the grid (normalized measure, cells of length 2^-N)

namespace detail {
inline void check_exponent(double p, bool allow_inf) {
    if (std::isnan(p) || p < 1.0 || (!allow_inf && std::isinf(p)))
        throw ParameterError("exponent p = " + std::to_string(p) + " outside the admissible range");
}
}  // namespace detail

inline double lp_norm(const GridSignal& f, double p) {
    detail::check_exponent(p, true);
    const double s = f.sup_norm();
    if (std::isinf(p) || s == 0.0) return s;
    double acc = 0.0;
    for (const auto& v : f.values()) acc += std::pow(std::abs(v) / s, p);
    return s * std::pow(acc * f.cell_measure(), 1.0 / p);
}

/// sup_lambda lambda |{|f| > lambda}|^{1/p}, attained at the values of |f|.
inline double weak_lp(const GridSignal& f, double p) {
    detail::check_exponent(p, true);
    if (std::isinf(p)) return f.sup_norm();
    std::vector<double> v;
    v.reserve(f.size());
    for (const auto& x : f.values()) v.push_back(std::abs(x));
    std::sort(v.begin(), v.end(), std::greater<>());
    double best = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        best = std::max(best, v[i] * std::pow(static_cast<double>(i + 1) * f.cell_measure(), 1.0 / p));
    return best;
}

/// Weak L^p quasinorm of a function given by its distribution.
inline double weak_lp(const std::vector<DistributionLevel>& dist, double p) {
    detail::check_exponent(p, true);
    std::vector<DistributionLevel> d(dist);
    std::sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.value > b.value; });
    if (std::isinf(p)) return d.empty() ? 0.0 : d.front().value;
    double best = 0.0, mass = 0.0;
    for (const auto& l : d) {
        mass += l.measure;
        best = std::max(best, l.value * std::pow(mass, 1.0 / p));
    }
    return best;
}

/// M_p f(x) = sup over dyadic I containing x of (avg_I |f|^p)^{1/p}.
inline GridSignal maximal_mp(const GridSignal& f, double p) {
    detail::check_exponent(p, false);
    const int n = f.resolution();
    GridSignal out(n);
    const double s = f.sup_norm();
    if (s == 0.0) return out;
    // avg[j] holds level-j averages of (|f|/s)^p, coarsest first.
    std::vector<std::vector<double>> avg(static_cast<std::size_t>(n) + 1);
    avg[static_cast<std::size_t>(n)].resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) avg[static_cast<std::size_t>(n)][i] = std::pow(std::abs(f[i]) / s, p);
    for (int j = n - 1; j >= 0; --j) {
        const auto& fine = avg[static_cast<std::size_t>(j) + 1];
        auto& coarse = avg[static_cast<std::size_t>(j)];
        coarse.resize(fine.size() / 2);
        for (std::size_t i = 0; i < coarse.size(); ++i) coarse[i] = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
    }
    std::vector<double> best{avg[0][0]};
    for (int j = 1; j <= n; ++j) {
        const auto& level = avg[static_cast<std::size_t>(j)];
        std::vector<double> next(level.size());
        for (std::size_t i = 0; i < level.size(); ++i) next[i] = std::max(best[i / 2], level[i]);
        best = std::move(next);
    }
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = s * std::pow(best[i], 1.0 / p);
    return out;
}

/// inf{lambda > 0 : avg_I phi(|f|/lambda) <= 1}, by bisection to 1e-10 relative.
template <class Phi>
double local_orlicz_norm(const GridSignal& f, const DyadicInterval& interval, const Phi& phi) {
    const auto cells = cells_of(interval, f.resolution());
    std::vector<double> a(cells.count);
    double top = 0.0;
    for (std::size_t i = 0; i < cells.count; ++i) {
        a[i] = std::abs(f[cells.begin + i]);
        top = std::max(top, a[i]);
    }
    if (top == 0.0) return 0.0;
    auto mean_phi = [&](double lambda) {
        double acc = 0.0;
        for (double v : a) acc += phi(v / lambda);
        return acc / static_cast<double>(a.size());
    };
    double hi = top, lo = top;
    for (int i = 0; mean_phi(hi) > 1.0; ++i) {
        if (i > 2000) throw ParameterError("local_orlicz_norm: no upper bracket");
        hi *= 2.0;
    }
    for (int i = 0; !(mean_phi(lo) > 1.0); ++i) {
        if (i > 2000) throw ParameterError("local_orlicz_norm: no lower bracket");
        lo *= 0.5;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-10 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_phi(mid) > 1.0 ? lo : hi) = mid;
    }
    return hi;
}

/// sup over dyadic I of avg_I |f - avg_I f|.
inline double dyadic_bmo(const GridSignal& f) {
    const int n = f.resolution();
    double best = 0.0;
    for (int j = 0; j <= n; ++j) {
        const std::size_t len = std::size_t{1} << (n - j);
        for (std::size_t a = 0; a < (std::size_t{1} << j); ++a) {
            Complex mean{};
            for (std::size_t i = 0; i < len; ++i) mean += f[a * len + i];
            mean /= static_cast<double>(len);
            double osc = 0.0;
            for (std::size_t i = 0; i < len; ++i) osc += std::abs(f[a * len + i] - mean);
            best = std::max(best, osc / static_cast<double>(len));
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Tower-scale magnitudes

/// Positive magnitude t stored as log t, or as log log t once log t itself
/// would overflow.
class LogMagnitude {
public:
    static constexpr double kHugeLogLog = 700.0;

    static LogMagnitude from_log(double log_t) {
        if (std::isnan(log_t) || log_t == std::numeric_limits<double>::infinity())
            throw ParameterError("LogMagnitude: log t must be finite");
        return LogMagnitude(false, log_t);
    }
    static LogMagnitude from_loglog(double loglog_t) {
        if (!std::isfinite(loglog_t)) throw ParameterError("LogMagnitude: log log t must be finite");
        if (loglog_t < kHugeLogLog) return LogMagnitude(false, std::exp(loglog_t));
        return LogMagnitude(true, loglog_t);
    }

    [[nodiscard]] bool huge() const { return huge_; }
    /// log t (+inf when huge).
    [[nodiscard]] double log() const { return huge_ ? std::numeric_limits<double>::infinity() : v_; }
    /// log log t (-inf or NaN-free: -inf for t <= 1).
    [[nodiscard]] double loglog() const {
        if (huge_) return v_;
        return v_ > 0.0 ? std::log(v_) : -std::numeric_limits<double>::infinity();
    }

    /// Magnitude t * e^{-d}.
    [[nodiscard]] LogMagnitude shifted_down(double d) const {
        if (!huge_) return from_log(v_ - d);
        return LogMagnitude(true, v_ + std::log1p(-d * std::exp(-v_)));
    }

    /// log_k(t) for k >= 1 (k = 1 may be +inf when huge).
    [[nodiscard]] double tower_log(int k) const {
        return huge_ ? log_tower_from_loglog(k, v_) : log_tower_from_log(k, v_);
    }

    friend std::partial_ordering operator<=>(const LogMagnitude& a, const LogMagnitude& b) {
        if (!a.huge_ && !b.huge_) return a.v_ <=> b.v_;
        return a.loglog() <=> b.loglog();
    }
    friend bool operator==(const LogMagnitude& a, const LogMagnitude& b) {
        return a.huge_ == b.huge_ && a.v_ == b.v_;
    }

private:
    LogMagnitude(bool huge, double v) : huge_(huge), v_(v) {}
    bool huge_ = false;
    double v_ = 0.0;
};

/// One level of a layer cake: magnitude t on a set of measure mu, kept as
/// (t, log(t mu)) so that tower-scale t with tiny mu stays representable.
struct Layer {
    LogMagnitude mag = LogMagnitude::from_log(0.0);
    double logmass = 0.0;

    [[nodiscard]] double logmeasure() const { return logmass - mag.log(); }
};

/// Nonnegative simple function described by its distribution.
class LayerCake {
public:
    LayerCake() = default;
    explicit LayerCake(std::vector<Layer> layers) {
        for (const auto& l : layers)
            if (std::isnan(l.logmass) || l.logmass == std::numeric_limits<double>::infinity())
                throw ParameterError("LayerCake: layer mass must be finite");
        std::sort(layers.begin(), layers.end(), [](const Layer& a, const Layer& b) { return a.mag > b.mag; });
        for (const auto& l : layers) {
            if (l.logmass == -std::numeric_limits<double>::infinity()) continue;
            if (!layers_.empty() && layers_.back().mag == l.mag)
                layers_.back().logmass = detail::log_add_exp(layers_.back().logmass, l.logmass);
            else
                layers_.push_back(l);
        }
        std::vector<double> lm;
        for (const auto& l : layers_) lm.push_back(l.logmeasure());
        if (detail::log_sum_exp(lm) > 1e-12) throw ParameterError("LayerCake: total measure exceeds 1");
    }

    /// Layers given as (log t, log measure).
    static LayerCake from_log_measures(const std::vector<std::pair<double, double>>& rows) {
        std::vector<Layer> layers;
        for (auto [logmag, logmeasure] : rows) layers.push_back({LogMagnitude::from_log(logmag), logmag + logmeasure});
        return LayerCake(std::move(layers));
    }

    [[nodiscard]] const std::vector<Layer>& layers() const { return layers_; }
    [[nodiscard]] bool empty() const { return layers_.empty(); }

    /// log ||f||_1.
    [[nodiscard]] double log_l1() const {
        std::vector<double> m;
        for (const auto& l : layers_) m.push_back(l.logmass);
        return detail::log_sum_exp(m);
    }

    /// log of integral phi_b(|f|) = log sum t mu log_2(t) log_b(t).
    [[nodiscard]] double log_phi_integral(int b) const {
        std::vector<double> m;
        for (const auto& l : layers_) m.push_back(l.logmass + std::log(l.mag.tower_log(2)) + std::log(l.mag.tower_log(b)));
        return detail::log_sum_exp(m);
    }

    /// Rescales the layer measures so that the phi_4 integral equals 1.
    [[nodiscard]] LayerCake normalized_to_unit_ball() const {
        const double shift = log_phi_integral(4);
        std::vector<Layer> out = layers_;
        for (auto& l : out) l.logmass -= shift;
        return LayerCake(std::move(out));
    }

private:
    std::vector<Layer> layers_;
};

/// CSV with header `logmag,logmeasure`, or `loglogmag,logmass` when a layer
/// magnitude is beyond log-domain range.
inline void write_layer_cake_csv(std::ostream& os, const LayerCake& cake) {
    const bool tower = std::any_of(cake.layers().begin(), cake.layers().end(), [](const Layer& l) { return l.mag.huge(); });
    os << (tower ? "loglogmag,logmass\n" : "logmag,logmeasure\n");
    char buf[96];
    for (const auto& l : cake.layers()) {
        if (tower)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", l.mag.loglog(), l.logmass);
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", l.mag.log(), l.logmeasure());
        os << buf;
    }
}

inline LayerCake read_layer_cake_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw FormatError("layer cake CSV: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const bool tower = line == "loglogmag,logmass";
    if (!tower && line != "logmag,logmeasure")
        throw FormatError("layer cake CSV: expected header 'logmag,logmeasure' or 'loglogmag,logmass'");
    std::vector<Layer> layers;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        char* end = nullptr;
        const std::string a = line.substr(0, comma == std::string::npos ? line.size() : comma);
        const double x = std::strtod(a.c_str(), &end);
        if (comma == std::string::npos || *end != '\0') throw FormatError("layer cake CSV: malformed row '" + line + "'");
        const std::string b = line.substr(comma + 1);
        const double y = std::strtod(b.c_str(), &end);
        if (*end != '\0') throw FormatError("layer cake CSV: malformed row '" + line + "'");
        if (tower)
            layers.push_back({LogMagnitude::from_loglog(x), y});
        else
            layers.push_back({LogMagnitude::from_log(x), x + y});
    }
    return LayerCake(std::move(layers));
}

// ---------------------------------------------------------------------------
// Embedding decomposition

/// Band index: 0 for |f| <= e^{e^e}, else the k >= 1 with
/// e^{e^{e^k}} < |f| <= e^{e^{e^{k+1}}}.
inline int embedding_band(const LogMagnitude& mag) {
    if (!mag.huge() && mag.log() <= tower_constant(2)) return 0;
    const double ll = mag.loglog();
    int k = std::max(1, static_cast<int>(std::ceil(std::log(ll))) - 1);
    while (ll > std::exp(static_cast<double>(k + 1))) ++k;
    while (k > 1 && ll <= std::exp(static_cast<double>(k))) --k;
    return k;
}

struct EmbeddingPiece {
    int k = 0;
    LayerCake cake;
};

/// f_k = f 1_{F_k}, one piece per nonempty band, in increasing k.
inline std::vector<EmbeddingPiece> embedding_decomposition(const LayerCake& f) {
    std::vector<EmbeddingPiece> out;
    std::vector<Layer> current;
    int band = -1;
    // Layers run in decreasing magnitude, hence decreasing band.
    for (const auto& l : f.layers()) {
        const int k = embedding_band(l.mag);
        if (k != band && !current.empty()) {
            out.push_back({band, LayerCake(std::move(current))});
            current.clear();
        }
        band = k;
        current.push_back(l);
    }
    if (!current.empty()) out.push_back({band, LayerCake(std::move(current))});
    std::reverse(out.begin(), out.end());
    return out;
}

struct QuasinormRow {
    int k = 0;
    int regime = 1;           // 1 or 2
    double log_A = 0.0;       // log of A_k = integral phi_4(|f_k|)
    double A = 0.0;
    double log_bare = 0.0;    // log of ||f_k||_1 log_2(||f_k||_inf / ||f_k||_1)
    double term = 0.0;        // log_1(k) times the bare quantity
    double regime_ratio = 0.0;  // bare / (A_k / log_1 k) in R1, bare / e^{-k} in R2
};

struct QuasinormReport {
    double total = 0.0;
    std::vector<QuasinormRow> rows;
};

/// Sum over pieces of log_1(k) ||f_k||_1 log_2(||f_k||_inf / ||f_k||_1), with
/// the per-piece regime classification.
inline QuasinormReport quasinorm_bound(const std::vector<EmbeddingPiece>& pieces) {
    QuasinormReport rep;
    for (const auto& piece : pieces) {
        if (piece.cake.empty()) continue;
        QuasinormRow row;
        row.k = piece.k;
        const double log_n1 = piece.cake.log_l1();
        const LogMagnitude ratio = piece.cake.layers().front().mag.shifted_down(log_n1);
        const double log2_ratio = ratio.tower_log(2);
        const double log1k = log_tower(1, static_cast<double>(piece.k));
        row.log_bare = log_n1 + std::log(log2_ratio);
        row.term = log1k * std::exp(row.log_bare);
        row.log_A = piece.cake.log_phi_integral(4);
        row.A = std::exp(row.log_A);
        const double kk = static_cast<double>(piece.k);
        const double r1_gap = row.log_A - kk - std::log(log1k);
        row.regime = r1_gap >= -std::exp(std::exp(kk + 1.0)) ? 1 : 2;
        row.regime_ratio = row.regime == 1 ? std::exp(row.log_bare - row.log_A + std::log(log1k))
                                           : std::exp(row.log_bare + kk);
        rep.total += row.term;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace lacuna
