// Command-line front end: instance generation, single-bound evaluation,
// parameter tuning, Lagrangian mixing, exact solving, the exhaustive oracle,
// and gap-vs-s sweeps emitting plot-ready CSV.
//
// Data goes to stdout or --out; logs (including timings) go to stderr so that
// identical configs produce byte-identical data across runs.
// Exit codes: 0 success, 2 usage error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mesp/bnb.hpp"
#include "mesp/bqp.hpp"
#include "mesp/instance.hpp"
#include "mesp/linx.hpp"
#include "mesp/mixer.hpp"
#include "mesp/nlp.hpp"
#include "mesp/tuner.hpp"

using json = nlohmann::ordered_json;
using namespace mesp;

namespace {

constexpr int kSchemaVersion = 1;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << "\n";
    } else {
        std::ofstream f(out_path);
        if (!f) throw ParseError(out_path + ": cannot open for writing");
        f << text;
        if (!text.empty() && text.back() != '\n') f << "\n";
    }
}

json report_to_json(const BoundReport& rep) {
    json j;
    j["value"] = rep.value;
    j["primal_value"] = rep.primal_value;
    j["dual_value"] = rep.dual_value;
    j["params"] = {{"alpha", rep.params.alpha}, {"psi1", rep.params.psi1}, {"psi2", rep.params.psi2}};
    j["iterations"] = rep.iterations;
    j["kkt_residual"] = rep.kkt_residual;
    j["optimizer_x"] = rep.optimizer_x;
    std::vector<std::string> flags;
    for (auto f : rep.flags) flags.push_back(to_string(f));
    j["flags"] = flags;
    return j;
}

BoundKind parse_kind(const std::string& name) {
    for (BoundKind k : {BoundKind::linx, BoundKind::bqp, BoundKind::cbqp, BoundKind::nlp,
                        BoundKind::cnlp, BoundKind::mbqp, BoundKind::mnlp}) {
        if (name == to_string(k)) return k;
    }
    throw InvalidParam("unknown bound kind: " + name);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Deterministic default gamma for the NLP bounds: geometric midpoint of the
// valid scaling interval.
double default_nlp_gamma(const NlpParams& par) {
    return std::sqrt((1.0 / par.d_max()) * (1.0 / par.d_min()));
}

struct TunedBoundValue {
    double value = 0.0;
    json detail;
};

// Tuned value of one bound family, as plotted in the curve command.
TunedBoundValue tuned_bound_value(const CovarianceInstance& inst, int s, BoundKind kind,
                                  double tol) {
    TunedBoundValue out;
    switch (kind) {
        case BoundKind::linx: {
            auto t = tune_linx_gamma(inst, s, 0.0, 1e-6);
            out.value = t.value;
            out.detail = {{"psi", t.psi}};
            return out;
        }
        case BoundKind::bqp: {
            auto [psi, value] = tune_bqp_psi_endpoint(inst, s, false, 0.0);
            out.value = value;
            out.detail = {{"psi1", psi}};
            return out;
        }
        case BoundKind::cbqp: {
            auto [psi, value] = tune_bqp_psi_endpoint(inst, s, true, 0.0);
            out.value = value;
            out.detail = {{"psi2", psi}};
            return out;
        }
        case BoundKind::mbqp: {
            auto [psi1, v1] = tune_bqp_psi_endpoint(inst, s, false, 0.0);
            auto [psi2, v2] = tune_bqp_psi_endpoint(inst, s, true, 0.0);
            auto tuned = alternate_tune(inst, s, MixParams{0.5, psi1, psi2});
            out.value = tuned.report.value;
            out.detail = {{"alpha", tuned.params.alpha},
                          {"psi1", tuned.params.psi1},
                          {"psi2", tuned.params.psi2}};
            return out;
        }
        case BoundKind::nlp: {
            auto par = nlp_trace_params(inst);
            auto grid = gamma_grid(inst, s, par, 100, tol);
            out.value = grid.value;
            out.detail = {{"gamma", grid.gamma}};
            return out;
        }
        case BoundKind::cnlp: {
            auto [comp, shift] = complement(inst);
            auto par = nlp_trace_params(comp);
            auto grid = gamma_grid(comp, inst.n() - s, par, 100, tol);
            out.value = shift + grid.value;
            out.detail = {{"gamma", grid.gamma}};
            return out;
        }
        case BoundKind::mnlp: {
            auto [comp, shift] = complement(inst);
            auto par1 = nlp_trace_params(inst);
            auto par2 = nlp_trace_params(comp);
            auto g1 = gamma_grid(inst, s, par1, 100, tol);
            auto g2 = gamma_grid(comp, inst.n() - s, par2, 100, tol);
            auto grid = alpha_grid_mnlp(inst, s, par1, g1.gamma, par2, g2.gamma, tol);
            out.value = grid.value;
            out.detail = {{"alpha", grid.alpha}, {"gamma1", g1.gamma}, {"gamma2", g2.gamma}};
            return out;
        }
    }
    throw InvalidParam("unsupported bound kind");
}

BoundSpec make_mix_spec(const CovarianceInstance& inst, int s, BoundKind kind, double tol) {
    BoundSpec spec;
    spec.kind = kind;
    switch (kind) {
        case BoundKind::linx: {
            auto t = tune_linx_gamma(inst, s, 0.0, 1e-6);
            spec.gamma = std::exp(t.psi);
            break;
        }
        case BoundKind::bqp: {
            auto [psi, value] = tune_bqp_psi_endpoint(inst, s, false, 0.0);
            spec.gamma = std::exp(psi);
            break;
        }
        case BoundKind::cbqp: {
            auto [psi, value] = tune_bqp_psi_endpoint(inst, s, true, 0.0);
            spec.gamma = std::exp(psi);
            break;
        }
        case BoundKind::nlp: {
            spec.nlp = nlp_trace_params(inst);
            auto grid = gamma_grid(inst, s, *spec.nlp, 100, tol);
            spec.gamma = grid.gamma;
            break;
        }
        case BoundKind::cnlp: {
            auto [comp, shift] = complement(inst);
            spec.nlp = nlp_trace_params(comp);
            auto grid = gamma_grid(comp, inst.n() - s, *spec.nlp, 100, tol);
            spec.gamma = grid.gamma;
            break;
        }
        default:
            throw InvalidParam("mix sides must be one of linx, bqp, cbqp, nlp, cnlp");
    }
    return spec;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"maximum-entropy sampling bounds and exact solver"};
    app.require_subcommand(1);

    std::string out_path;
    app.add_option("--out", out_path, "write data here instead of stdout")->capture_default_str();

    // ---- gen ----
    auto* gen = app.add_subcommand("gen", "generate a synthetic covariance instance");
    int gen_n = 10;
    std::uint64_t gen_seed = 1;
    double gen_cond = 100.0;
    std::string gen_out;
    gen->add_option("--n", gen_n, "order")->required();
    gen->add_option("--seed", gen_seed, "random seed")->required();
    gen->add_option("--cond", gen_cond, "target condition number");
    gen->add_option("--out", gen_out, "matrix file path")->required();

    // ---- bound ----
    auto* bound = app.add_subcommand("bound", "evaluate one bound");
    std::string b_matrix, b_kind;
    int b_s = 1;
    double b_gamma = 0.0, b_psi = 0.0, b_tol = 1e-7;
    bound->add_option("--matrix", b_matrix)->required();
    bound->add_option("--s", b_s)->required();
    bound->add_option("--kind", b_kind, "linx|bqp|cbqp|nlp|cnlp")->required();
    bound->add_option("--gamma", b_gamma, "scaling parameter");
    auto* psi_opt = bound->add_option("--psi", b_psi, "log of the scaling parameter");
    bound->add_option("--tol", b_tol);

    // ---- tune ----
    auto* tune = app.add_subcommand("tune", "tune bound parameters");
    std::string t_matrix, t_kind;
    int t_s = 1, t_budget = 120;
    double t_alpha0 = 0.5;
    std::optional<double> t_psi1, t_psi2;
    tune->add_option("--matrix", t_matrix)->required();
    tune->add_option("--s", t_s)->required();
    tune->add_option("--kind", t_kind, "linx|mbqp")->required();
    tune->add_option("--alpha0", t_alpha0);
    tune->add_option(
        "--psi1",
        [&t_psi1](const CLI::results_t& r) {
            t_psi1 = std::stod(r[0]);
            return true;
        },
        "initial psi1");
    tune->add_option(
        "--psi2",
        [&t_psi2](const CLI::results_t& r) {
            t_psi2 = std::stod(r[0]);
            return true;
        },
        "initial psi2");
    tune->add_option("--budget", t_budget);

    // ---- mix ----
    auto* mix = app.add_subcommand("mix", "Lagrangian mix of two bounds");
    std::string m_matrix, m_a, m_b;
    int m_s = 1, m_iters = 200;
    double m_alpha = 0.5, m_tol = 1e-7;
    mix->add_option("--matrix", m_matrix)->required();
    mix->add_option("--s", m_s)->required();
    mix->add_option("--a", m_a, "A-side bound kind")->required();
    mix->add_option("--b", m_b, "B-side bound kind")->required();
    mix->add_option("--alpha", m_alpha);
    mix->add_option("--iters", m_iters);
    mix->add_option("--tol", m_tol);

    // ---- solve ----
    auto* solve = app.add_subcommand("solve", "exact branch-and-bound solve");
    std::string s_matrix, s_bound = "linx";
    int s_s = 1, s_retune = 3;
    solve->add_option("--matrix", s_matrix)->required();
    solve->add_option("--s", s_s)->required();
    solve->add_option("--bound", s_bound, "linx|bqp|cbqp|nlp|cnlp|mbqp");
    solve->add_option("--retune-depth", s_retune);

    // ---- oracle ----
    auto* oracle = app.add_subcommand("oracle", "exhaustive optimum (n <= 24)");
    std::string o_matrix;
    int o_s = 1;
    oracle->add_option("--matrix", o_matrix)->required();
    oracle->add_option("--s", o_s)->required();

    // ---- curve ----
    auto* curve = app.add_subcommand("curve", "gap-vs-s sweep, CSV output");
    std::string c_matrix, c_bounds = "linx";
    int c_from = 1, c_to = 1;
    double c_tol = 1e-7;
    curve->add_option("--matrix", c_matrix)->required();
    curve->add_option("--s-from", c_from)->required();
    curve->add_option("--s-to", c_to)->required();
    curve->add_option("--bounds", c_bounds, "comma-separated bound kinds");
    curve->add_option("--tol", c_tol);

    for (CLI::App* sc : {gen, bound, tune, mix, solve, oracle, curve}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        json config;
        config["schema_version"] = kSchemaVersion;

        if (gen->parsed()) {
            auto inst = gen_random_pd(gen_n, gen_seed, gen_cond);
            save_instance(inst, gen_out);
            config["command"] = "gen";
            config["n"] = gen_n;
            config["seed"] = gen_seed;
            config["cond"] = gen_cond;
            config["out"] = gen_out;
            json j;
            j["config"] = config;
            j["label"] = inst.label();
            j["ldetC"] = inst.ldetC();
            emit(j.dump(2), "");
            return 0;
        }

        if (bound->parsed()) {
            auto inst = load_instance(b_matrix);
            BoundKind kind = parse_kind(b_kind);
            const bool has_psi = psi_opt->count() > 0;
            config["command"] = "bound";
            config["matrix"] = b_matrix;
            config["s"] = b_s;
            config["kind"] = b_kind;
            config["tol"] = b_tol;

            BoundReport rep;
            double gamma = has_psi ? std::exp(b_psi) : b_gamma;
            switch (kind) {
                case BoundKind::linx: {
                    if (gamma <= 0.0) gamma = 1.0;
                    LinxOptions o;
                    o.tol = b_tol;
                    rep = solve_linx(inst, b_s, gamma, o);
                    break;
                }
                case BoundKind::bqp: {
                    if (gamma <= 0.0) gamma = 1.0;
                    MbqpOptions o;
                    o.tol = b_tol;
                    rep = solve_bqp(inst, b_s, gamma, o).report;
                    break;
                }
                case BoundKind::cbqp: {
                    if (gamma <= 0.0) gamma = 1.0;
                    MbqpOptions o;
                    o.tol = b_tol;
                    rep = solve_cbqp(inst, b_s, gamma, o).report;
                    break;
                }
                case BoundKind::nlp: {
                    auto par = nlp_trace_params(inst);
                    if (gamma <= 0.0) gamma = default_nlp_gamma(par);
                    NlpOptions o;
                    o.tol = b_tol;
                    rep = solve_nlp(inst, b_s, par, gamma, o);
                    break;
                }
                case BoundKind::cnlp: {
                    auto [comp, shift] = complement(inst);
                    auto par = nlp_trace_params(comp);
                    if (gamma <= 0.0) gamma = default_nlp_gamma(par);
                    NlpOptions o;
                    o.tol = b_tol;
                    rep = solve_nlp(comp, inst.n() - b_s, par, gamma, o);
                    rep.value += shift;
                    rep.primal_value += shift;
                    rep.dual_value += shift;
                    for (double& v : rep.optimizer_x) v = 1.0 - v;
                    break;
                }
                default:
                    throw InvalidParam("bound kinds: linx, bqp, cbqp, nlp, cnlp");
            }
            config["gamma"] = gamma;
            json j;
            j["config"] = config;
            j["report"] = report_to_json(rep);
            emit(j.dump(2), out_path);
            std::cerr << "bound " << b_kind << " value " << rep.value << " (" << rep.wall_time_sec
                      << " s)\n";
            return 0;
        }

        if (tune->parsed()) {
            auto inst = load_instance(t_matrix);
            config["command"] = "tune";
            config["matrix"] = t_matrix;
            config["s"] = t_s;
            config["kind"] = t_kind;
            json j;
            if (t_kind == "linx") {
                auto t = tune_linx_gamma(inst, t_s, t_psi1.value_or(0.0), 1e-6);
                config["psi1"] = t_psi1.value_or(0.0);
                j["config"] = config;
                j["psi"] = t.psi;
                j["gamma"] = std::exp(t.psi);
                j["value"] = t.value;
                j["g_residual"] = t.g_residual;
                j["iterations"] = t.iterations;
                json trail = json::array();
                for (auto& [psi, value] : t.trail) trail.push_back({{"psi", psi}, {"value", value}});
                j["trail"] = trail;
            } else if (t_kind == "mbqp") {
                double psi1 = t_psi1 ? *t_psi1 : tune_bqp_psi_endpoint(inst, t_s, false, 0.0).first;
                double psi2 = t_psi2 ? *t_psi2 : tune_bqp_psi_endpoint(inst, t_s, true, 0.0).first;
                AlternateTuneOptions topt;
                topt.budget = t_budget;
                auto tuned = alternate_tune(inst, t_s, MixParams{t_alpha0, psi1, psi2}, topt);
                config["alpha0"] = t_alpha0;
                config["psi1"] = psi1;
                config["psi2"] = psi2;
                config["budget"] = t_budget;
                j["config"] = config;
                j["params"] = {{"alpha", tuned.params.alpha},
                               {"psi1", tuned.params.psi1},
                               {"psi2", tuned.params.psi2}};
                j["report"] = report_to_json(tuned.report);
                json trail = json::array();
                for (auto& row : tuned.trail)
                    trail.push_back({{"k", row.k},
                                     {"alpha", row.alpha},
                                     {"psi1", row.psi1},
                                     {"psi2", row.psi2},
                                     {"value", row.value},
                                     {"r", row.r},
                                     {"g_norm", row.g_norm}});
                j["trail"] = trail;
            } else {
                throw InvalidParam("tune kinds: linx, mbqp");
            }
            emit(j.dump(2), out_path);
            return 0;
        }

        if (mix->parsed()) {
            auto inst = load_instance(m_matrix);
            config["command"] = "mix";
            config["matrix"] = m_matrix;
            config["s"] = m_s;
            config["a"] = m_a;
            config["b"] = m_b;
            config["alpha"] = m_alpha;
            config["iters"] = m_iters;
            BoundSpec A = make_mix_spec(inst, m_s, parse_kind(m_a), m_tol);
            BoundSpec B = make_mix_spec(inst, m_s, parse_kind(m_b), m_tol);
            auto res = subgradient_optimize(inst, m_s, m_alpha, A, B, m_iters, m_tol);
            json j;
            j["config"] = config;
            j["report"] = report_to_json(res.report);
            j["value_at_zero"] = res.value_at_zero;
            j["pi"] = res.pi;
            json trace = json::array();
            for (auto& row : res.trace)
                trace.push_back(
                    {{"t", row.t}, {"dual", row.dual}, {"g_norm", row.g_norm}, {"step", row.step}});
            j["trace"] = trace;
            emit(j.dump(2), out_path);
            std::cerr << "mix best dual " << res.report.value << " after " << res.report.iterations
                      << " iterations\n";
            return 0;
        }

        if (solve->parsed()) {
            auto inst = load_instance(s_matrix);
            config["command"] = "solve";
            config["matrix"] = s_matrix;
            config["s"] = s_s;
            config["bound"] = s_bound;
            config["retune_depth"] = s_retune;
            BnbOptions opt;
            opt.bound = parse_kind(s_bound);
            opt.retune_depth = s_retune;
            auto sol = solve_mesp(inst, s_s, opt);
            json j;
            j["config"] = config;
            j["z"] = sol.z;
            j["S"] = sol.best.indices;
            j["stats"] = {{"nodes_created", sol.stats.nodes_created},
                          {"nodes_expanded", sol.stats.nodes_expanded},
                          {"bound_evals", sol.stats.bound_evals},
                          {"incumbent_updates", sol.stats.incumbent_updates},
                          {"root_bound", sol.stats.root_bound}};
            emit(j.dump(2), out_path);
            std::cerr << "solve z=" << sol.z << " nodes=" << sol.stats.nodes_created << " ("
                      << sol.stats.wall_time_sec << " s)\n";
            return 0;
        }

        if (oracle->parsed()) {
            auto inst = load_instance(o_matrix);
            config["command"] = "oracle";
            config["matrix"] = o_matrix;
            config["s"] = o_s;
            auto [z, sel] = brute_force_opt(inst, o_s);
            json j;
            j["config"] = config;
            j["z"] = z;
            j["S"] = sel.indices;
            emit(j.dump(2), out_path);
            return 0;
        }

        if (curve->parsed()) {
            auto inst = load_instance(c_matrix);
            config["command"] = "curve";
            if (c_from < 1 || c_to > inst.n() || c_from > c_to)
                throw InvalidParam("curve: need 1 <= s-from <= s-to <= n");
            std::vector<BoundKind> kinds;
            {
                std::string tok;
                std::istringstream iss(c_bounds);
                while (std::getline(iss, tok, ',')) kinds.push_back(parse_kind(tok));
            }
            std::vector<std::tuple<int, std::string, std::string>> rows;
            for (int s = c_from; s <= c_to; ++s) {
                double lb = (inst.n() <= 24) ? brute_force_opt(inst, s).first
                                             : greedy_heuristic(inst, s).first;
                for (BoundKind kind : kinds) {
                    std::string value_s = "nan", gap_s = "nan";
                    try {
                        auto tv = tuned_bound_value(inst, s, kind, c_tol);
                        value_s = fmt_double(tv.value);
                        gap_s = fmt_double(tv.value - lb);
                    } catch (const Error& e) {
                        std::cerr << "curve: s=" << s << " bound=" << to_string(kind)
                                  << " failed: " << e.what() << "\n";
                    }
                    rows.emplace_back(s, to_string(kind),
                                      value_s + "," + fmt_double(lb) + "," + gap_s);
                }
            }
            std::sort(rows.begin(), rows.end());
            std::string csv = "s,bound,value,lower_bound,gap\n";
            for (auto& [s, name, rest] : rows)
                csv += std::to_string(s) + "," + name + "," + rest + "\n";
            emit(csv, out_path);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
