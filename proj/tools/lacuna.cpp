// Command-line front end: signal utilities and the verification campaigns.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lacuna/lacuna.hpp"

using namespace lacuna;

namespace {

struct Globals {
    int resolution = 10;
    std::string seq = "pow2";
    std::uint64_t seed = 1;
    int trials = 20;
    std::string out;
    std::string format = "json";
    std::string config;
};

// Defaults, then the config file, then flags given explicitly.
ExperimentConfig build_config(const CLI::App& app, const Globals& g) {
    ExperimentConfig c;
    if (!g.config.empty()) c = load_config(g.config, c);
    if (app.count("--resolution")) c.resolution = g.resolution;
    if (app.count("--seq")) c.seq = g.seq;
    if (app.count("--seed")) c.seed = g.seed;
    if (app.count("--trials")) c.trials = g.trials;
    validate(c);
    return c;
}

// "pow2" follows the resolution of the signal at hand.
LacunarySequence sequence_for(ExperimentConfig c, int resolution) {
    c.resolution = resolution;
    return c.sequence();
}

// Writes text to --out, or stdout.
void emit_text(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << text;
}

std::string signal_text(const GridSignal& f) {
    std::ostringstream os;
    write_signal_csv(os, f);
    return os.str();
}

std::string bitiles_text(const BitileSet& set, const std::string& format) {
    if (format == "json") return to_json(set).dump(2) + "\n";
    if (format != "csv") throw ParameterError("unknown format '" + format + "' (expected csv or json)");
    std::ostringstream os;
    os << "time_level,time_index,freq_level,freq_index\n";
    for (const auto& s : set) {
        const auto r = bitile_record(s);
        os << r["time_level"] << ',' << r["time_index"] << ',' << r["freq_level"] << ',' << r["freq_index"] << '\n';
    }
    return os.str();
}

BitileSet load_bitiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open bitile file '" + path + "'");
    try {
        return bitile_set_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bitile file '" + path + "': " + e.what());
    }
}

ChoiceFunction load_choice(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open choice file '" + path + "'");
    return read_choice_csv(in);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lacunary Walsh-Carleson laboratory"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--resolution,-N", g.resolution, "grid resolution N (2^N cells)");
    app.add_option("--seq", g.seq, "lacunary sequence: 1,2,4,... or pow2 or pow2:J");
    app.add_option("--seed", g.seed, "random seed");
    app.add_option("--trials", g.trials, "functions per family");
    app.add_option("--out,-o", g.out, "output path (default stdout)");
    app.add_option("--format", g.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--config", g.config, "JSON config with the same keys")->check(CLI::ExistingFile);
    app.add_flag("--quiet", [](std::int64_t) { warnings_enabled() = false; }, "suppress warnings");

    // walsh
    auto* walsh = app.add_subcommand("walsh", "Walsh functions, coefficients and partial sums");
    std::optional<std::uint64_t> walsh_index, walsh_partial;
    std::string walsh_input;
    bool want_coefficients = false, want_maximal = false;
    walsh->add_option("--index", walsh_index, "emit W_m on the grid");
    walsh->add_option("--input", walsh_input, "signal CSV (index,re,im)");
    walsh->add_option("--partial", walsh_partial, "emit W_n f = sum_{k<=n} <f,W_k> W_k");
    walsh->add_flag("--coefficients", want_coefficients, "emit the Paley coefficients of the input");
    walsh->add_flag("--maximal", want_maximal, "emit W* f over --seq");

    // tiles
    auto* tiles = app.add_subcommand("tiles", "enumerate bitiles");
    std::optional<std::uint64_t> freq_bound;
    bool tiles_lacunary = false, tiles_grid = false;
    tiles->add_option("--freq-bound", freq_bound, "frequency bound (default 2^N)");
    tiles->add_flag("--lacunary", tiles_lacunary, "keep bitiles whose upper child meets --seq");
    tiles->add_flag("--grid", tiles_grid, "every grid bitile, levels 0..N");

    // model-sum
    auto* msum = app.add_subcommand("model-sum", "C_S f for a bitile set and a choice function");
    std::string ms_input, ms_set, ms_choice;
    msum->add_option("--input", ms_input, "signal CSV")->required();
    msum->add_option("--set", ms_set, "bitile JSON (default: lacunary bitiles of --seq)");
    msum->add_option("--choice", ms_choice, "choice CSV index,frequency (default: greedy)");

    // decompose
    auto* dec = app.add_subcommand("decompose", "size decomposition of the lacunary bitiles");
    std::string dec_input, dec_set;
    std::optional<double> dec_A;
    dec->add_option("--input", dec_input, "signal CSV")->required();
    dec->add_option("--set", dec_set, "bitile JSON (default: lacunary bitiles of --seq)");
    dec->add_option("--A", dec_A, "normalization A (default: the size of the set)");

    auto* weak = app.add_subcommand("weak-lp", "weak L^p sweep of the model sum");
    auto* ww = app.add_subcommand("estimate-ww", "weak L^1 estimate and its derivation chain");
    auto* tail = app.add_subcommand("exp-tail", "exponential tail and exceptional sets");
    auto* emb = app.add_subcommand("embedding", "Orlicz-ball embedding via the layer decomposition");
    auto* strong = app.add_subcommand("strong-lp", "strong L^p ratios against p' log(p')");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto config = build_config(app, g);
        const int n = config.resolution;

        if (*walsh) {
            if (walsh_index) {
                emit_text(signal_text(walsh_function({*walsh_index}, n)), g.out);
                return 0;
            }
            if (walsh_input.empty()) throw ParameterError("walsh: give --index or --input");
            const auto f = load_signal_csv(walsh_input);
            if (want_coefficients) {
                emit_text(signal_text(GridSignal(f.resolution(), walsh_coefficients(f))), g.out);
            } else if (want_maximal) {
                emit_text(signal_text(maximal_operator(f, sequence_for(config, f.resolution()))), g.out);
            } else if (walsh_partial) {
                emit_text(signal_text(partial_sum(f, {*walsh_partial})), g.out);
            } else {
                throw ParameterError("walsh: give --coefficients, --partial or --maximal with --input");
            }
            return 0;
        }
        if (*tiles) {
            BitileSet set = tiles_grid ? grid_bitiles(n)
                                       : enumerate_bitiles(n, freq_bound.value_or(std::uint64_t{1} << n));
            if (tiles_lacunary) set = bitiles_meeting(set, config.sequence());
            emit_text(bitiles_text(set, g.format), g.out);
            return 0;
        }
        if (*msum || *dec) {
            const auto f = load_signal_csv(*msum ? ms_input : dec_input);
            const auto seq = sequence_for(config, f.resolution());
            const std::string set_path = *msum ? ms_set : dec_set;
            const auto set = set_path.empty() ? lacunary_bitiles(f.resolution(), seq) : load_bitiles(set_path);
            if (*msum) {
                const auto choice = ms_choice.empty() ? greedy_choice(f, seq) : load_choice(ms_choice);
                emit_text(signal_text(model_sum(set, f, choice)), g.out);
            } else {
                const double A = dec_A.value_or(size(set, f));
                emit_text(to_json(size_decomposition(set, f, A)).dump(2) + "\n", g.out);
            }
            return 0;
        }

        Report report;
        if (*weak) report = run_weak_lp_sweep(config);
        else if (*ww) report = run_estimate_ww(config);
        else if (*tail) report = run_exp_tail(config);
        else if (*emb) report = run_embedding(config);
        else if (*strong) report = run_strong_lp(config);
        emit_report(report, g.format, g.out);
        if (!report.pass) std::cerr << "lacuna: " << report.experiment << ": pass flag false\n";
        return report.pass ? 0 : 1;
    } catch (const ParameterError& e) {
        std::cerr << "lacuna: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "lacuna: " << e.what() << '\n';
        return 3;
    }
}
