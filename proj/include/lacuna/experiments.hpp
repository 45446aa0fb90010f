#pragma once

// Verification campaigns: seeded function families, the five sweeps and
// deterministic report emission.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lacuna/carleson_model.hpp"
#include "lacuna/dyadic_walsh.hpp"
#include "lacuna/error.hpp"
#include "lacuna/fit.hpp"
#include "lacuna/norms_orlicz.hpp"
#include "lacuna/tf_decomposition.hpp"

namespace lacuna {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    int resolution = 10;
    std::string seq = "pow2";  // "pow2" = 1, 2, ..., below 2^resolution
    std::uint64_t seed = 1;
    int trials = 20;  // functions per family
    std::vector<std::string> families{"signs", "spikes"};
    std::vector<double> p_grid{1.02, 1.05, 1.1, 1.2, 1.5, 2.0};
    // exp-tail: inclusion checked at these multiples of ||f||_inf, decay
    // fitted over the finer tail grid.
    std::vector<double> lambda_grid{1.0, 2.0, 4.0, 8.0};
    std::vector<double> tail_grid{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0};
    // estimate-ww: single-cell spikes evaluated in closed form at these resolutions.
    std::vector<int> spike_resolutions{12, 16, 20, 24, 28, 32, 36, 40};
    // embedding
    int cakes = 280;  // a quarter of them sit inside the ball, at the regime threshold
    int max_band = 40;
    // weak-lp: the log fit used for extrapolation only sees p >= fit_min_p.
    double fit_min_p = 1.1;

    // Acceptance thresholds; the measured constants are reported regardless.
    double max_extrapolation = 3.0;
    double min_tail_rate = 0.1;
    double max_K = 10.0;
    double max_strong_constant = 10.0;
    double max_embedding_constant = 10.0;

    [[nodiscard]] LacunarySequence sequence() const {
        if (seq == "pow2") return LacunarySequence::powers_of_two(resolution);
        return LacunarySequence::parse(seq);
    }
};

inline const std::vector<std::string>& known_families() {
    static const std::vector<std::string> names{"signs", "spikes", "indicators", "characters", "lacunary"};
    return names;
}

inline void validate(const ExperimentConfig& c) {
    if (c.resolution < 1 || c.resolution > 24) throw ParameterError("config: resolution must lie in [1, 24]");
    if (c.trials < 1) throw ParameterError("config: trials must be positive");
    if (c.families.empty()) throw ParameterError("config: empty function family");
    for (const auto& f : c.families)
        if (std::find(known_families().begin(), known_families().end(), f) == known_families().end())
            throw ParameterError("config: unknown family '" + f + "'");
    for (double p : c.p_grid)
        if (!(p > 1.0 && p <= 2.0)) throw ParameterError("config: p = " + std::to_string(p) + " outside (1, 2]");
    for (double l : c.lambda_grid)
        if (!(l > 0.0)) throw ParameterError("config: lambda multiples must be positive");
    for (int n : c.spike_resolutions)
        if (n < 1 || n > 62) throw ParameterError("config: spike resolutions must lie in [1, 62]");
    if (c.cakes < 0 || c.max_band < 0) throw ParameterError("config: cakes and max_band must be >= 0");
    (void)c.sequence();  // throws on a malformed sequence
}

inline ordered_json to_json(const ExperimentConfig& c) {
    return ordered_json{{"resolution", c.resolution},
                        {"seq", c.seq},
                        {"seed", c.seed},
                        {"trials", c.trials},
                        {"families", c.families},
                        {"p_grid", c.p_grid},
                        {"lambda_grid", c.lambda_grid},
                        {"tail_grid", c.tail_grid},
                        {"spike_resolutions", c.spike_resolutions},
                        {"cakes", c.cakes},
                        {"max_band", c.max_band},
                        {"fit_min_p", c.fit_min_p},
                        {"max_extrapolation", c.max_extrapolation},
                        {"min_tail_rate", c.min_tail_rate},
                        {"max_K", c.max_K},
                        {"max_strong_constant", c.max_strong_constant},
                        {"max_embedding_constant", c.max_embedding_constant}};
}

/// Overlays the keys present in `j` on `base`; unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {}) {
    if (!j.is_object()) throw FormatError("config: expected a JSON object");
    const auto keys = to_json(base);
    try {
        for (const auto& [key, value] : j.items()) {
            if (!keys.contains(key)) throw FormatError("config: unknown key '" + key + "'");
            if (key == "resolution") base.resolution = value.get<int>();
            else if (key == "seq") base.seq = value.get<std::string>();
            else if (key == "seed") base.seed = value.get<std::uint64_t>();
            else if (key == "trials") base.trials = value.get<int>();
            else if (key == "families") base.families = value.get<std::vector<std::string>>();
            else if (key == "p_grid") base.p_grid = value.get<std::vector<double>>();
            else if (key == "lambda_grid") base.lambda_grid = value.get<std::vector<double>>();
            else if (key == "tail_grid") base.tail_grid = value.get<std::vector<double>>();
            else if (key == "spike_resolutions") base.spike_resolutions = value.get<std::vector<int>>();
            else if (key == "cakes") base.cakes = value.get<int>();
            else if (key == "max_band") base.max_band = value.get<int>();
            else if (key == "fit_min_p") base.fit_min_p = value.get<double>();
            else if (key == "max_extrapolation") base.max_extrapolation = value.get<double>();
            else if (key == "min_tail_rate") base.min_tail_rate = value.get<double>();
            else if (key == "max_K") base.max_K = value.get<double>();
            else if (key == "max_strong_constant") base.max_strong_constant = value.get<double>();
            else if (key == "max_embedding_constant") base.max_embedding_constant = value.get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config: ") + e.what());
    }
    return base;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config '" + path + "'");
    try {
        return config_from_json(nlohmann::json::parse(in), std::move(base));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("config '" + path + "': " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Function families
//
// Every generator draws from an engine seeded by (seed, family, trial), so a
// trial's function does not depend on which other trials ran.

inline std::mt19937_64 trial_engine(std::uint64_t seed, std::size_t family, std::size_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(family), static_cast<std::uint32_t>(trial)};
    return std::mt19937_64(seq);
}

/// Independent fair +-1 values.
inline GridSignal random_signs(int n, std::mt19937_64& rng) {
    std::bernoulli_distribution coin(0.5);
    GridSignal f(n);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = coin(rng) ? 1.0 : -1.0;
    return f;
}

/// One to three cells carrying signed heights 2^u, u uniform on [0, N].
inline GridSignal sparse_spikes(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> cell(0, (std::size_t{1} << n) - 1);
    std::uniform_int_distribution<int> count(1, 3);
    std::uniform_real_distribution<double> u(0.0, n);
    std::bernoulli_distribution coin(0.5);
    GridSignal f(n);
    for (int k = count(rng); k > 0; --k) f[cell(rng)] = (coin(rng) ? 1.0 : -1.0) * std::exp2(u(rng));
    return f;
}

/// 1_F with F a random set of density drawn from (0, 1/2].
inline GridSignal random_indicator(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double density = 0.5 * (1.0 - u(rng));
    GridSignal f(n);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = u(rng) < density ? 1.0 : 0.0;
    if (f.sup_norm() == 0.0) f[0] = 1.0;
    return f;
}

/// W_m for m uniform in [0, 2^N).
inline GridSignal random_character(int n, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::uint64_t> m(0, (std::uint64_t{1} << n) - 1);
    return walsh_function({m(rng)}, n);
}

/// sum_j c_j W_{n_j} over the retained terms, c_j standard normal.
inline GridSignal lacunary_polynomial(int n, const LacunarySequence& seq, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    GridSignal f(n);
    for (auto t : seq.retained(n)) f += Complex(g(rng)) * walsh_function({t}, n);
    return f;
}

struct FamilyMember {
    std::string family;
    std::size_t trial = 0;
    GridSignal f;
};

inline GridSignal make_function(const std::string& family, int n, const LacunarySequence& seq, std::mt19937_64& rng) {
    if (family == "signs") return random_signs(n, rng);
    if (family == "spikes") return sparse_spikes(n, rng);
    if (family == "indicators") return random_indicator(n, rng);
    if (family == "characters") return random_character(n, rng);
    if (family == "lacunary") return lacunary_polynomial(n, seq, rng);
    throw ParameterError("unknown family '" + family + "'");
}

inline std::vector<FamilyMember> make_family(const ExperimentConfig& c) {
    validate(c);
    const auto seq = c.sequence();
    std::vector<FamilyMember> out;
    for (std::size_t fam = 0; fam < c.families.size(); ++fam) {
        const auto it = std::find(known_families().begin(), known_families().end(), c.families[fam]);
        const auto id = static_cast<std::size_t>(it - known_families().begin());
        for (int t = 0; t < c.trials; ++t) {
            auto rng = trial_engine(c.seed, id, static_cast<std::size_t>(t));
            out.push_back({c.families[fam], static_cast<std::size_t>(t), make_function(c.families[fam], c.resolution, seq, rng)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports

struct Report {
    std::string experiment;
    ordered_json config;
    std::vector<std::string> columns;
    std::vector<ordered_json> rows;  // one object per row, keys in column order
    ordered_json constants = ordered_json::object();
    bool pass = false;
    std::vector<std::string> notes;
};

namespace detail {
// NaN and infinities have no JSON literal; they are written as null.
inline ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

inline std::string csv_cell(const ordered_json& v) {
    if (v.is_null()) return "";
    if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
    if (v.is_number_float()) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
        return buf;
    }
    if (v.is_number()) return v.dump();
    const auto s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
}
}  // namespace detail

inline ordered_json to_json(const Report& r) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : r.rows) rows.push_back(row);
    return ordered_json{{"experiment", r.experiment}, {"config", r.config},   {"rows", rows},
                        {"constants", r.constants},   {"pass", r.pass},       {"notes", r.notes}};
}

/// Plot-ready rows only; constants and the pass flag live in the JSON form.
inline void write_report_csv(std::ostream& os, const Report& r) {
    for (std::size_t i = 0; i < r.columns.size(); ++i) os << (i ? "," : "") << r.columns[i];
    os << '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < r.columns.size(); ++i)
            os << (i ? "," : "") << (row.contains(r.columns[i]) ? detail::csv_cell(row.at(r.columns[i])) : "");
        os << '\n';
    }
}

inline void write_report(std::ostream& os, const Report& r, const std::string& format) {
    if (format == "json")
        os << to_json(r).dump(2) << '\n';
    else if (format == "csv")
        write_report_csv(os, r);
    else
        throw ParameterError("unknown report format '" + format + "' (expected csv or json)");
}

/// Writes to `path`, or to stdout when path is empty or "-".
inline void emit_report(const Report& r, const std::string& format, const std::string& path) {
    if (format != "csv" && format != "json")
        throw ParameterError("unknown report format '" + format + "' (expected csv or json)");
    if (path.empty() || path == "-") {
        write_report(std::cout, r, format);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    write_report(out, r, format);
    if (!out) throw FormatError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Weak L^p sweep

/// B(p) = max over the family of ||C f||_{p,inf} / ||f||_p, where C f is the
/// bitile model sum realizing W* f pointwise.
inline Report run_weak_lp_sweep(const ExperimentConfig& c) {
    validate(c);
    if (c.p_grid.size() < 2) throw ParameterError("weak-lp: need at least two exponents");
    const auto seq = c.sequence();
    const auto family = make_family(c);
    Report rep{"weak-lp", to_json(c), {"p", "p_prime", "B", "log_fit", "power_fit"}, {}, {}, false, {}};
    std::vector<double> best(c.p_grid.size(), 0.0);
    for (const auto& m : family) {
        if (m.f.sup_norm() == 0.0) continue;
        const auto cf = realize_maximal(m.f, seq).value;
        for (std::size_t i = 0; i < c.p_grid.size(); ++i)
            best[i] = std::max(best[i], weak_lp(cf, c.p_grid[i]) / lp_norm(m.f, c.p_grid[i]));
    }
    std::vector<double> log1, root, log1_fit, b_fit;
    for (std::size_t i = 0; i < c.p_grid.size(); ++i) {
        const double pp = c.p_grid[i] / (c.p_grid[i] - 1.0);
        log1.push_back(log_tower(1, pp));
        root.push_back(std::sqrt(pp));
        if (c.p_grid[i] >= c.fit_min_p) {
            log1_fit.push_back(log1.back());
            b_fit.push_back(best[i]);
        }
    }
    // Log fit on p >= fit_min_p for extrapolation; both fits on every p for
    // the residual comparison.
    const auto extrap = linear_fit(log1_fit, b_fit);
    const auto log_all = linear_fit(log1, best);
    const auto pow_all = linear_fit(root, best);
    const auto smallest = static_cast<std::size_t>(std::min_element(c.p_grid.begin(), c.p_grid.end()) - c.p_grid.begin());
    const double predicted = extrap(log1[smallest]);
    const double excess = predicted > 0.0 ? best[smallest] / predicted : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.p_grid.size(); ++i)
        rep.rows.push_back(ordered_json{{"p", c.p_grid[i]},
                                        {"p_prime", c.p_grid[i] / (c.p_grid[i] - 1.0)},
                                        {"B", best[i]},
                                        {"log_fit", log_all(log1[i])},
                                        {"power_fit", pow_all(root[i])}});
    rep.constants = ordered_json{{"log_fit_intercept", log_all.intercept},
                                 {"log_fit_slope", log_all.slope},
                                 {"log_fit_residual", log_all.residual_norm},
                                 {"power_fit_intercept", pow_all.intercept},
                                 {"power_fit_slope", pow_all.slope},
                                 {"power_fit_residual", pow_all.residual_norm},
                                 {"extrapolation_p", c.p_grid[smallest]},
                                 {"extrapolation_predicted", predicted},
                                 {"extrapolation_ratio", detail::finite_or_null(excess)},
                                 {"max_extrapolation", c.max_extrapolation},
                                 {"functions", family.size()}};
    rep.pass = excess <= c.max_extrapolation && log_all.residual_norm <= pow_all.residual_norm;
    return rep;
}

// ---------------------------------------------------------------------------
// Weak L^1 estimate chain

struct ChainSample {
    std::string source;
    int resolution = 0;
    double ratio = 0.0;      // ||f||_inf / ||f||_1
    double pbar_prime = 0.0;
    double weak1 = 0.0;      // ||W* f||_{1,inf}
    double weak_pbar = 0.0;  // ||W* f||_{pbar,inf}
    double lp_pbar = 0.0;    // ||f||_pbar
    double l1 = 0.0;
};

namespace detail {
inline double pbar_prime_for(double ratio) { return std::max(2.0, std::log(ratio)); }

inline ChainSample chain_from_grid(const GridSignal& f, const LacunarySequence& seq, std::string source) {
    ChainSample s{std::move(source), f.resolution()};
    s.l1 = lp_norm(f, 1.0);
    s.ratio = f.sup_norm() / s.l1;
    s.pbar_prime = pbar_prime_for(s.ratio);
    const double pbar = s.pbar_prime / (s.pbar_prime - 1.0);
    const auto w = maximal_operator(f, seq);
    s.weak1 = weak_lp(w, 1.0);
    s.weak_pbar = weak_lp(w, pbar);
    s.lp_pbar = lp_norm(f, pbar);
    return s;
}

// f = 1_cell at resolution n; every norm is closed form.
inline ChainSample chain_from_spike(int n, const LacunarySequence& seq) {
    ChainSample s{"spike_closed_form", n};
    const double cell = std::ldexp(1.0, -n);
    s.l1 = cell;
    s.ratio = std::ldexp(1.0, n);
    s.pbar_prime = pbar_prime_for(s.ratio);
    const double pbar = s.pbar_prime / (s.pbar_prime - 1.0);
    const auto dist = spike_maximal_distribution(n, seq);
    s.weak1 = weak_lp(dist, 1.0);
    s.weak_pbar = weak_lp(dist, pbar);
    s.lp_pbar = std::pow(cell, 1.0 / pbar);
    return s;
}
}  // namespace detail

/// Constant of the last step: log_1(pbar') ratio^{1/pbar'} <= 2e log_2(ratio)
/// once pbar' = max(2, log ratio).
inline constexpr double kChainTailConstant = 2.0 * 2.718281828459045;

inline Report run_estimate_ww(const ExperimentConfig& c) {
    validate(c);
    const auto seq = c.sequence();
    Report rep{"estimate-ww",
               to_json(c),
               {"source", "resolution", "ratio", "pbar_prime", "weak1", "weak_pbar", "lp_pbar", "l1", "step1", "step2",
                "step3", "step4", "bound13"},
               {},
               {},
               false,
               {}};
    std::vector<ChainSample> samples;
    std::size_t skipped = 0;
    for (const auto& m : make_family(c)) {
        if (m.f.sup_norm() == 0.0) {
            ++skipped;
            continue;
        }
        samples.push_back(detail::chain_from_grid(m.f, seq, m.family));
    }
    for (int n : c.spike_resolutions) samples.push_back(detail::chain_from_spike(n, seq));
    if (skipped) rep.notes.push_back(std::to_string(skipped) + " zero function(s) skipped");
    if (samples.empty()) throw ParameterError("estimate-ww: no nonzero function to test");

    // K is the largest observed ratio in the one step that is not elementary.
    double K = 0.0, K13 = 0.0, max_ratio = 0.0;
    for (const auto& s : samples) {
        K = std::max(K, s.weak_pbar / (log_tower(1, s.pbar_prime) * s.lp_pbar));
        K13 = std::max(K13, s.weak1 / (s.l1 * log_tower(2, s.ratio)));
        max_ratio = std::max(max_ratio, s.ratio);
    }
    constexpr double slack = 1e-12;
    bool all = true;
    for (const auto& s : samples) {
        const double l1p = log_tower(1, s.pbar_prime);
        const double holder = s.l1 * std::pow(s.ratio, 1.0 / s.pbar_prime);
        const bool step1 = s.weak1 <= s.weak_pbar * (1 + slack);
        const bool step2 = s.weak_pbar <= K * l1p * s.lp_pbar * (1 + slack);
        const bool step3 = s.lp_pbar <= holder * (1 + slack);
        const bool step4 = l1p * holder <= kChainTailConstant * s.l1 * log_tower(2, s.ratio) * (1 + slack);
        all = all && step1 && step2 && step3 && step4;
        rep.rows.push_back(ordered_json{{"source", s.source},
                                        {"resolution", s.resolution},
                                        {"ratio", s.ratio},
                                        {"pbar_prime", s.pbar_prime},
                                        {"weak1", s.weak1},
                                        {"weak_pbar", s.weak_pbar},
                                        {"lp_pbar", s.lp_pbar},
                                        {"l1", s.l1},
                                        {"step1", step1},
                                        {"step2", step2},
                                        {"step3", step3},
                                        {"step4", step4},
                                        {"bound13", K * kChainTailConstant * s.l1 * log_tower(2, s.ratio)}});
    }
    rep.constants = ordered_json{{"K", K},
                                 {"max_K", c.max_K},
                                 {"tail_constant", kChainTailConstant},
                                 {"K_weak_l1", K13},
                                 {"max_ratio", max_ratio},
                                 {"functions", samples.size()}};
    rep.pass = all && K <= c.max_K;
    return rep;
}

// ---------------------------------------------------------------------------
// Exponential tail of the model sum

inline Report run_exp_tail(const ExperimentConfig& c) {
    validate(c);
    const auto seq = c.sequence();
    const int n = c.resolution;
    auto set = lacunary_bitiles(n, seq);
    Report rep{"exp-tail",
               to_json(c),
               {"family", "trial", "lambda_ratio", "lambda", "tail_measure", "superlevel_measure", "measure_E", "rhs",
                "inclusion_ok", "trivial"},
               {},
               {},
               false,
               {}};
    if (!is_convex(set, n)) {
        set = convex_interior(set, n);
        rep.notes.push_back("bitile collection not convex for this sequence; its convex interior is used");
    }
    const auto family = make_family(c);
    std::vector<double> tail(c.tail_grid.size(), 0.0);
    std::size_t used = 0;
    double K0 = 0.0, energy_ratio = 0.0;
    bool inclusion = true;
    for (const auto& m : family) {
        const double sup = m.f.sup_norm();
        if (sup == 0.0) continue;
        ++used;
        const ExceptionalSetBuilder builder(set, m.f, seq, greedy_choice(m.f, seq));
        K0 = std::max(K0, builder.K0());
        const auto& cf = builder.model();
        for (std::size_t i = 0; i < c.tail_grid.size(); ++i) {
            std::size_t count = 0;
            // Relative slack keeps |C f| = ||f||_inf up to rounding out of the tail.
            for (const auto& v : cf.values()) count += std::abs(v) > c.tail_grid[i] * sup * (1.0 + 1e-12);
            tail[i] += static_cast<double>(count) * cf.cell_measure();
        }
        for (double mult : c.lambda_grid) {
            const auto row = builder.evaluate(mult * sup).second;
            inclusion = inclusion && row.inclusion_ok;
            if (!row.trivial && row.rhs > 0.0) energy_ratio = std::max(energy_ratio, row.measure_E / row.rhs);
            rep.rows.push_back(ordered_json{{"family", m.family},
                                            {"trial", m.trial},
                                            {"lambda_ratio", mult},
                                            {"lambda", row.lambda},
                                            {"tail_measure", row.tail_measure},
                                            {"superlevel_measure", row.superlevel_measure},
                                            {"measure_E", row.measure_E},
                                            {"rhs", row.rhs},
                                            {"inclusion_ok", row.inclusion_ok},
                                            {"trivial", row.trivial}});
        }
    }
    if (used == 0) throw ParameterError("exp-tail: every function in the family is zero");
    ordered_json profile = ordered_json::array();
    for (std::size_t i = 0; i < tail.size(); ++i) {
        tail[i] /= static_cast<double>(used);
        profile.push_back(ordered_json{{"lambda_ratio", c.tail_grid[i]}, {"mean_measure", tail[i]}});
    }
    // Too few positive samples means the tail vanished inside the grid, which
    // is faster than any exponential rate.
    double rate = std::numeric_limits<double>::infinity(), prefactor = 0.0;
    if (std::count_if(tail.begin(), tail.end(), [](double t) { return t > 0.0; }) >= 2) {
        const auto fit = exponential_fit(c.tail_grid, tail);
        rate = fit.rate;
        prefactor = fit.prefactor;
    } else {
        rep.notes.push_back("tail vanishes inside the grid; rate reported as null (unbounded)");
    }
    rep.constants = ordered_json{{"tail_rate", detail::finite_or_null(rate)},
                                 {"tail_prefactor", prefactor},
                                 {"min_tail_rate", c.min_tail_rate},
                                 {"K0_max", K0},
                                 {"energy_ratio_max", energy_ratio},
                                 {"inclusion_ok", inclusion},
                                 {"tail_profile", profile},
                                 {"functions", used}};
    rep.pass = inclusion && rate > c.min_tail_rate;
    return rep;
}

// ---------------------------------------------------------------------------
// Embedding of the Orlicz ball

/// Layer cakes on the phi_4 unit sphere: bounded cakes, single layers at each
/// band up to max_band, random multi-layer cakes and cakes straddling the
/// two-regime threshold.
inline std::vector<std::pair<std::string, LayerCake>> embedding_family(const ExperimentConfig& c) {
    std::vector<std::pair<std::string, LayerCake>> out;
    auto rng = trial_engine(c.seed, 100, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto mag_in_band = [&](int k, double frac) {
        // log t in [0, e^e] for k = 0, otherwise log log t in (e^k, e^{k+1}].
        if (k == 0) return LogMagnitude::from_log(frac * tower_constant(2));
        const double lo = std::exp(static_cast<double>(k)), hi = std::exp(static_cast<double>(k + 1));
        return LogMagnitude::from_loglog(lo + (hi - lo) * std::max(frac, 1e-9));
    };
    // Random measure below 1/count. Once log t swamps log mu in a double only
    // the mass t mu is meaningful and the measure is numerically zero.
    auto layer = [&](const LogMagnitude& mag, int count) {
        const double logmeasure = std::log(std::max(u(rng), 1e-3) / count);
        const bool tower = mag.huge() || mag.log() > 1e12;
        return Layer{mag, tower ? -20.0 * u(rng) : mag.log() + logmeasure};
    };
    const int bands = c.max_band + 1;
    while (static_cast<int>(out.size()) < c.cakes) {
        const auto i = out.size() % 4;
        std::vector<Layer> layers;
        std::string kind;
        if (i == 0) {
            kind = "bounded";
            const int count = 1 + static_cast<int>(u(rng) * 4);
            for (int l = 0; l < count; ++l) layers.push_back(layer(mag_in_band(0, u(rng)), count));
        } else if (i == 1) {
            kind = "single";
            layers.push_back(layer(mag_in_band(static_cast<int>(out.size() / 4) % bands, u(rng)), 1));
        } else if (i == 2) {
            kind = "multi";
            const int count = 2 + static_cast<int>(u(rng) * 5);
            for (int l = 0; l < count; ++l)
                layers.push_back(layer(mag_in_band(static_cast<int>(u(rng) * bands) % bands, u(rng)), count));
        } else {
            // A_k = e^k log_1(k) e^{-e^{e^{k+1}}} separates the regimes; it is
            // representable for k <= 4. Place A_k just above or below it.
            kind = "threshold";
            const int k = 1 + static_cast<int>(out.size() / 4) % 4;
            const auto mag = mag_in_band(k, 0.5);
            const double weight = std::log(mag.tower_log(2)) + std::log(mag.tower_log(4));
            const double threshold = k + std::log(log_tower(1, k)) - std::exp(std::exp(k + 1.0));
            const double off = (out.size() / 16 % 2 ? 1.0 : -1.0) * std::max(5.0, 1e-6 * std::abs(threshold));
            out.emplace_back(kind, LayerCake({Layer{mag, threshold + off - weight}}));
            continue;
        }
        out.emplace_back(kind, LayerCake(std::move(layers)).normalized_to_unit_ball());
    }
    return out;
}

inline Report run_embedding(const ExperimentConfig& c) {
    validate(c);
    Report rep{"embedding",
               to_json(c),
               {"cake", "kind", "k", "regime", "log_A", "log_bare", "term", "regime_ratio", "total"},
               {},
               {},
               false,
               {}};
    double total_max = 0.0, r1 = 0.0, r2 = 0.0;
    std::size_t r1_rows = 0, r2_rows = 0, id = 0, renormalized = 0;
    for (const auto& [kind, raw] : embedding_family(c)) {
        LayerCake cake = raw;
        // Rounding in log t + log mu scales with the largest finite log involved.
        double scale = 1.0;
        for (const auto& l : cake.layers()) scale = std::max({scale, std::abs(l.logmass), l.mag.huge() ? 0.0 : std::abs(l.mag.log())});
        if (cake.log_phi_integral(4) > 1e-12 * scale) {
            cake = cake.normalized_to_unit_ball();
            ++renormalized;
        }
        const auto q = quasinorm_bound(embedding_decomposition(cake));
        total_max = std::max(total_max, q.total);
        for (const auto& row : q.rows) {
            (row.regime == 1 ? r1 : r2) = std::max(row.regime == 1 ? r1 : r2, row.regime_ratio);
            ++(row.regime == 1 ? r1_rows : r2_rows);
            rep.rows.push_back(ordered_json{{"cake", id},
                                            {"kind", kind},
                                            {"k", row.k},
                                            {"regime", row.regime},
                                            {"log_A", row.log_A},
                                            {"log_bare", row.log_bare},
                                            {"term", row.term},
                                            {"regime_ratio", row.regime_ratio},
                                            {"total", q.total}});
        }
        ++id;
    }
    if (renormalized) rep.notes.push_back(std::to_string(renormalized) + " cake(s) outside the unit ball normalized first");
    const double C = std::max({total_max, r1, r2});
    rep.constants = ordered_json{{"total_max", total_max},
                                 {"regime1_constant", r1},
                                 {"regime2_constant", r2},
                                 {"regime1_rows", r1_rows},
                                 {"regime2_rows", r2_rows},
                                 {"C", C},
                                 {"max_embedding_constant", c.max_embedding_constant},
                                 {"cakes", id}};
    rep.pass = C <= c.max_embedding_constant;
    return rep;
}

// ---------------------------------------------------------------------------
// Strong L^p bound

inline Report run_strong_lp(const ExperimentConfig& c) {
    validate(c);
    if (c.p_grid.empty()) throw ParameterError("strong-lp: empty p grid");
    const auto seq = c.sequence();
    const auto family = make_family(c);
    Report rep{"strong-lp", to_json(c), {"p", "p_prime", "ratio", "reference", "normalized"}, {}, {}, false, {}};
    std::vector<double> best(c.p_grid.size(), 0.0);
    for (const auto& m : family) {
        if (m.f.sup_norm() == 0.0) continue;
        const auto w = maximal_operator(m.f, seq);
        for (std::size_t i = 0; i < c.p_grid.size(); ++i)
            best[i] = std::max(best[i], lp_norm(w, c.p_grid[i]) / lp_norm(m.f, c.p_grid[i]));
    }
    double C = 0.0;
    for (std::size_t i = 0; i < c.p_grid.size(); ++i) {
        const double pp = c.p_grid[i] / (c.p_grid[i] - 1.0);
        const double ref = pp * log_tower(1, pp);
        C = std::max(C, best[i] / ref);
        rep.rows.push_back(ordered_json{
            {"p", c.p_grid[i]}, {"p_prime", pp}, {"ratio", best[i]}, {"reference", ref}, {"normalized", best[i] / ref}});
    }
    rep.constants = ordered_json{{"C", C}, {"max_strong_constant", c.max_strong_constant}, {"functions", family.size()}};
    rep.pass = C <= c.max_strong_constant;
    return rep;
}

}  // namespace lacuna
