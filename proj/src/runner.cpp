#include "seqclt/runner.hpp"

#include "seqclt/clt.hpp"
#include "seqclt/cones.hpp"
#include "seqclt/config.hpp"
#include "seqclt/growth.hpp"
#include "seqclt/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

namespace seqclt {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class BlockStatus { Completed, Pass, Failed, Inconclusive, Conflict };

const char* status_name(BlockStatus s) {
    switch (s) {
    case BlockStatus::Completed: return "COMPLETED";
    case BlockStatus::Pass: return "PASS";
    case BlockStatus::Failed: return "FAILED";
    case BlockStatus::Inconclusive: return "INCONCLUSIVE";
    case BlockStatus::Conflict: return "CONFLICT";
    }
    return "?";
}

struct FittedConstant {
    double value;
    std::string provenance;
};

struct RunContext {
    RunConfig cfg;
    std::shared_ptr<TransferEngine> engine;
    fs::path out;
    std::map<std::string, FittedConstant> fitted;
    std::vector<std::pair<std::string, BlockStatus>> statuses;

    ConeContext cone() const {
        double kappa = 0.5 * std::exp(-cfg.cone_a);
        return ConeContext(cfg.cone_a, cfg.cone_nu, cfg.grid,
                           cfg.cone_tau_scale * kappa, cfg.gauge_stride);
    }

    void write_json(const std::string& name, const json& j) const {
        atomic_write(out / name, j.dump(2) + "\n");
    }
    void write_text(const std::string& name, const std::string& text) const {
        atomic_write(out / name, text);
    }
    void note(const std::string& key, double value, const std::string& provenance) {
        fitted[key] = {value, provenance};
    }
};

std::vector<double> parse_number_list(const ConfigSection& sec, const std::string& key,
                                      std::vector<double> fallback) {
    std::string v = sec.get(key, "");
    if (v.empty()) return fallback;
    std::istringstream is(v);
    std::vector<double> out;
    double d;
    while (is >> d) out.push_back(d);
    if (out.empty())
        throw ConfigError("field '" + key + "': expected a list of numbers");
    return out;
}

std::string csv_grid(const GridFunction& g) {
    std::ostringstream os;
    os << "x,re,im\n";
    for (std::size_t i = 0; i < g.size(); ++i)
        os << format_double(g.grid_point(i)) << ',' << format_double(g.at(i).real())
           << ',' << format_double(g.at(i).imag()) << '\n';
    return os.str();
}

double sigma_for(const CenteredSequence& cs, std::size_t n) {
    double s2 = variance(cs, n, VarianceMode::Full).sigma2;
    return s2 > 0 ? std::sqrt(s2) : 0.0;
}

BlockStatus run_variance(RunContext& rc, const ConfigSection& sec) {
    std::size_t n = sec.get_size("n", 256);
    double c_l = sec.get_double("c_l", 4.0);
    CenteredSequence cs = center_sequence(rc.engine, rc.cfg.sequence, n);
    VarianceResult full = variance(cs, n, VarianceMode::Full);
    double sigma = full.sigma2 > 0 ? std::sqrt(full.sigma2) : 0.0;
    std::size_t ln = sigma > 1.0
                         ? static_cast<std::size_t>(std::ceil(c_l * std::log(sigma)))
                         : 1;
    std::size_t window = sec.get_size("window", std::max<std::size_t>(ln, 1));
    VarianceResult banded = variance(cs, n, VarianceMode::Banded, window);

    std::ostringstream pairs;
    pairs << "k,j,sigma_kj\n";
    for (const auto& p : banded.pairs)
        pairs << p.k << ',' << p.j << ',' << format_double(p.value) << '\n';
    rc.write_text("variance_pairs.csv", pairs.str());

    json j;
    j["n"] = n;
    j["sigma2_full"] = full.sigma2;
    j["sigma2_banded"] = banded.sigma2;
    j["window"] = window;
    j["window_ln"] = ln;
    j["c_l"] = c_l;
    j["sigma"] = sigma;
    j["linear_rate"] = full.sigma2 / static_cast<double>(n);
    rc.write_json("variance.json", j);
    rc.note("variance_linear_rate", full.sigma2 / static_cast<double>(n),
            "fitted from sigma2/n at n=" + std::to_string(n));
    return BlockStatus::Completed;
}

BlockStatus run_charfn(RunContext& rc, const ConfigSection& sec) {
    std::size_t n = sec.get_size("n", 64);
    double lo = sec.get_double("lambda_min", 0.0);
    double hi = sec.get_double("lambda_max", 2.0);
    std::size_t count = sec.get_size("lambda_count", 21);
    double cap = sec.get_double("twist_cap", 0.5);
    double varpi = sec.get_double("varpi", 4.0);
    CenteredSequence cs = center_sequence(rc.engine, rc.cfg.sequence, n);
    double sigma = sigma_for(cs, n);
    if (!(sigma > 0)) throw std::domain_error("charfn: sigma = 0 (degenerate)");

    std::vector<double> lambdas;
    for (std::size_t i = 0; i < count; ++i)
        lambdas.push_back(count == 1 ? lo
                                     : lo + (hi - lo) * static_cast<double>(i) /
                                               static_cast<double>(count - 1));
    auto table = char_fn(cs, n, sigma, lambdas, cap, rc.cfg.workers);

    std::ostringstream csv;
    csv << "lambda,re,im,abs_err\n";
    std::size_t flagged = 0;
    double max_err = 0.0;
    double fitted_c = 0.0;
    for (const auto& e : table) {
        csv << format_double(e.lambda) << ',' << format_double(e.value.real()) << ','
            << format_double(e.value.imag()) << ',' << format_double(e.abs_err) << '\n';
        if (e.flagged) {
            ++flagged;
            continue;
        }
        max_err = std::max(max_err, e.abs_err);
        double l = std::abs(e.lambda);
        if (l > 0) {
            double shape = std::pow(std::log(sigma), 2) * std::pow(l, 4) / (sigma * sigma) +
                           l * l * std::pow(sigma, -varpi) +
                           static_cast<double>(n) * std::pow(l, 3) / std::pow(sigma, 3);
            if (shape > 0) fitted_c = std::max(fitted_c, e.abs_err / shape);
        }
    }
    rc.write_text("upsilon.csv", csv.str());

    json j;
    j["n"] = n;
    j["sigma"] = sigma;
    j["twist_cap"] = cap;
    j["varpi"] = varpi;
    j["flagged"] = flagged;
    j["max_abs_err"] = max_err;
    j["thm_main_fitted_c"] = fitted_c;
    rc.write_json("charfn.json", j);
    rc.note("thm_main_c", fitted_c,
            "fitted envelope constant at n=" + std::to_string(n) + ", varpi=" +
                format_double(varpi));
    return BlockStatus::Completed;
}

BlockStatus run_berry_esseen(RunContext& rc, const ConfigSection& sec) {
    std::size_t n = sec.get_size("n", 400);
    double cap = sec.get_double("twist_cap", 0.5);
    CenteredSequence cs = center_sequence(rc.engine, rc.cfg.sequence, n);
    double sigma = sigma_for(cs, n);
    if (!(sigma > 0)) throw std::domain_error("berry-esseen: sigma = 0 (degenerate)");
    double t_param;
    std::string t_str = sec.get("t", "auto");
    if (t_str == "auto")
        t_param = std::pow(sigma, 3) /
                  (static_cast<double>(n) * std::pow(std::log(sigma), 2));
    else
        t_param = sec.get_double("t", 1.0);
    FellerBound fb = berry_esseen(cs, n, sigma, t_param, cap, rc.cfg.workers);
    json j;
    j["n"] = n;
    j["sigma"] = sigma;
    j["T"] = fb.T;
    j["bound"] = fb.bound;
    j["integral_part"] = fb.integral_part;
    j["tail_part"] = fb.tail_part;
    j["truncated"] = fb.truncated;
    rc.write_json("berry_esseen.json", j);
    return BlockStatus::Completed;
}

BlockStatus run_montecarlo(RunContext& rc, const ConfigSection& sec) {
    std::size_t n = sec.get_size("n", 400);
    std::size_t m = sec.get_size("samples", 100000);
    CenteredSequence cs = center_sequence(rc.engine, rc.cfg.sequence, n);
    double sigma = sigma_for(cs, n);
    if (!(sigma > 0)) throw std::domain_error("montecarlo: sigma = 0 (degenerate)");
    MonteCarloResult mc = monte_carlo(cs, n, m, rc.cfg.seed, sigma, rc.cfg.workers);

    std::ostringstream csv;
    csv << "x,F_emp,Phi,diff\n";
    const double mm = static_cast<double>(mc.samples);
    for (std::size_t i = 0; i < mc.sorted_values.size(); ++i) {
        double x = mc.sorted_values[i];
        double fe = static_cast<double>(i + 1) / mm;
        double phi = 0.5 * std::erfc(-x / std::numbers::sqrt2);
        csv << format_double(x) << ',' << format_double(fe) << ',' << format_double(phi)
            << ',' << format_double(fe - phi) << '\n';
    }
    rc.write_text("cdf.csv", csv.str());

    json j;
    j["n"] = n;
    j["samples"] = mc.samples;
    j["seed"] = mc.seed;
    j["sigma"] = sigma;
    j["ks"] = mc.ks;
    j["dkw99"] = mc.dkw99;
    json q = json::array();
    for (auto [p, v] : mc.quantiles) q.push_back({{"p", p}, {"value", v}});
    j["quantiles"] = q;
    rc.write_json("montecarlo.json", j);
    return BlockStatus::Completed;
}

BlockStatus run_cone_check(RunContext& rc, const ConfigSection& sec) {
    std::size_t trials = sec.get_size("trials", 20);
    std::size_t window = sec.get_size("window", 1);
    auto t_values = parse_number_list(sec, "t_values", {1e-3, 1e-2, 1e-1});
    double slack = sec.get_double("ratio_slack", 0.05);
    double trial_scale = sec.get_double("trial_scale", 1.0);
    std::string parity = sec.get("trial_parity", "all");
    if (parity != "all" && parity != "odd")
        throw ConfigError("cone-check: trial_parity must be 'all' or 'odd'");

    std::string map_name = sec.get("map", rc.cfg.map_names.front());
    std::size_t map_idx = rc.cfg.map_names.size();
    for (std::size_t i = 0; i < rc.cfg.map_names.size(); ++i)
        if (rc.cfg.map_names[i] == map_name) map_idx = i;
    if (map_idx == rc.cfg.map_names.size())
        throw ConfigError("cone-check: unknown map '" + map_name + "'");

    std::string obs_name = sec.get("observable", rc.cfg.obs_names.front());
    std::size_t obs_idx = rc.cfg.obs_names.size();
    for (std::size_t i = 0; i < rc.cfg.obs_names.size(); ++i)
        if (rc.cfg.obs_names[i] == obs_name) obs_idx = i;
    if (obs_idx == rc.cfg.obs_names.size())
        throw ConfigError("cone-check: unknown observable '" + obs_name + "'");

    SequenceSpec seq = rc.cfg.sequence;
    seq.omega_f = IndexSequence::periodic({map_idx});
    seq.omega_g = IndexSequence::periodic({obs_idx});
    OperatorChainSpec chain;
    chain.sequence = &seq;
    chain.first = 0;
    chain.last = window - 1;

    const Observable& g = rc.cfg.sequence.obs_family[obs_idx];
    GridFunction ghat = GridFunction::sample_real(
        rc.cfg.grid, [&g](double x) { return g(x); });
    ghat = ghat.shift(-ghat.integral_real());

    ConeContext ctx = rc.cone();
    ContractionReport rep =
        contraction_report(*rc.engine, chain, ctx, trials, rc.cfg.seed, ghat, t_values,
                           slack, trial_scale, parity == "odd");

    std::ostringstream csv;
    csv << "delta_in,delta_out,ratio\n";
    for (const auto& row : rep.pair_table)
        csv << format_double(row[0]) << ',' << format_double(row[1]) << ','
            << format_double(row[2]) << '\n';
    rc.write_text("cone_trials.csv", csv.str());

    json j;
    j["map"] = map_name;
    j["observable"] = obs_name;
    j["trials"] = trials;
    j["window"] = window;
    j["a"] = ctx.aperture();
    j["nu"] = ctx.contraction_target();
    j["kappa"] = ctx.kappa();
    j["trial_scale"] = trial_scale;
    j["trial_parity"] = parity;
    j["delta_real"] = rep.delta_real;
    j["delta_real_probed"] = rep.delta_real_probed;
    j["probe_count"] = rep.probe_count;
    j["delta_complex"] = rep.delta_complex;
    j["ratio_max"] = rep.ratio_max;
    j["tanh_bound"] = rep.tanh_bound;
    j["contraction_ok"] = rep.contraction_ok;
    j["diam_rel_bound"] = rep.diam_rel_bound;
    j["diam_rel_ok"] = rep.diam_rel_ok;
    j["t_values"] = rep.t_values;
    j["eps_t"] = rep.eps_t;
    j["eps_threshold"] = rep.eps_threshold;
    j["eps_ok"] = rep.eps_ok;
    j["skipped_pairs"] = rep.skipped_pairs;
    rc.write_json("cone_report.json", j);
    rc.note("delta_real_sampled", rep.delta_real, "sampled image diameter");
    rc.note("delta_complex_sampled", rep.delta_complex, "sampled gauge diameter");
    return rep.contraction_ok && rep.diam_rel_ok ? BlockStatus::Pass
                                                 : BlockStatus::Failed;
}

BlockStatus run_conditions(RunContext& rc, const ConfigSection& sec) {
    std::size_t n = sec.get_size("n", 64);
    std::size_t trials = sec.get_size("trials", 8);
    std::size_t window_max = sec.get_size("window_max", 12);
    double c_l = sec.get_double("c_l", 4.0);
    auto fractions = parse_number_list(sec, "lambda_fractions", {0.05, 0.2, 0.5});

    CenteredSequence cs = center_sequence(rc.engine, rc.cfg.sequence, n);
    double sigma = sigma_for(cs, n);
    if (!(sigma > 0)) throw std::domain_error("conditions: sigma = 0 (degenerate)");
    std::vector<double> lambdas;
    for (double f : fractions) lambdas.push_back(f * sigma);
    std::vector<std::size_t> windows;
    for (std::size_t w = 1; w <= window_max; ++w) windows.push_back(w);

    ConeContext ctx = rc.cone();
    ConditionDiagnostics diag = condition_diagnostics(cs, n, sigma, lambdas, windows,
                                                      ctx, trials, rc.cfg.seed, c_l);

    json j;
    j["n"] = n;
    j["sigma"] = sigma;
    j["trials"] = trials;
    j["seed"] = rc.cfg.seed;
    j["windows"] = windows;
    j["c_star"] = diag.c_star;
    j["k_multiplier"] = diag.k_multiplier;
    j["k_by_power"] = diag.k_by_power;
    j["k_twist"] = diag.k_twist;
    j["ell_min"] = diag.ell_min;
    j["failed"] = diag.failed;
    json ro = json::array();
    for (const auto& f : diag.rank_one) {
        json e;
        e["lambda"] = f.lambda;
        e["theta_fit"] = f.theta_fit;
        e["constant"] = f.constant;
        e["trivially_certified"] = f.trivially_certified;
        e["failed"] = f.failed;
        if (f.failed) e["failed_window"] = f.failed_window;
        json res = json::array();
        for (auto [w, r] : f.residuals) res.push_back({{"window", w}, {"residual", r}});
        e["residuals"] = res;
        ro.push_back(e);
    }
    j["rank_one"] = ro;
    json th = json::array();
    for (auto [k, v] : diag.theta1) th.push_back({{"k", k}, {"abs", v}});
    j["theta1"] = th;
    j["theta1_lambda"] = diag.theta1_lambda;
    j["window_ln"] = diag.window_ln;
    rc.write_json("diagnostics.json", j);

    rc.note("c_star", diag.c_star, "fitted power-bound over sampled windows");
    rc.note("k_multiplier", diag.k_multiplier, "fitted multiplier bound, powers <= 3");
    rc.note("k_twist", diag.k_twist, "fitted twisted-chain bound");
    for (const auto& f : diag.rank_one)
        rc.note("theta_fit_lambda_" + format_double(f.lambda), f.theta_fit,
                "fitted rank-one decay rate");
    return diag.failed ? BlockStatus::Failed : BlockStatus::Pass;
}

BlockStatus run_growth(RunContext& rc, const ConfigSection& sec) {
    std::size_t l = sec.get_size("l", 8);
    std::size_t points = sec.get_size("points", 4096);
    bool exhaustive = sec.get("exhaustive", "true") != "false";
    std::size_t samples = sec.get_size("samples", 0);
    std::string mode_name = sec.get("mode", "prop_variance");
    GrowthMode mode;
    if (mode_name == "prop_variance") {
        PropVarianceMode pm;
        pm.a = sec.get_double("a", 0.5);
        pm.eps = sec.get_double("eps", 0.0);
        mode = pm;
    } else if (mode_name == "cor_verify") {
        CorVerifyMode cm;
        cm.kappa = sec.get_double("kappa", 1.0);
        cm.b = sec.get_double("b", 2.0);
        mode = cm;
    } else {
        throw ConfigError("growth: unknown mode '" + mode_name + "'");
    }

    GrowthReport rep = growth_criterion(*rc.engine, rc.cfg.sequence.obs_family, l, mode,
                                        points, exhaustive, samples, rc.cfg.seed);

    std::ostringstream csv;
    csv << "omega_f,omega_g,best_sum,x_best\n";
    auto join = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? "|" : "") + std::to_string(v[i]);
        return s;
    };
    for (const auto& row : rep.table)
        csv << join(row.omega_f) << ',' << join(row.omega_g) << ','
            << format_double(row.best_sum) << ',' << format_double(row.x_best) << '\n';
    rc.write_text("growth_omega.csv", csv.str());

    json j;
    j["pass"] = rep.pass;
    j["mode"] = mode_name;
    j["l"] = l;
    j["exhaustive"] = rep.exhaustive;
    j["coverage"] = rep.coverage;
    j["sequences_checked"] = rep.sequences_checked;
    j["threshold"] = rep.ledger.threshold;
    j["ledger"] = {{"a", rep.ledger.a},
                   {"eps", rep.ledger.eps},
                   {"eps_max", rep.ledger.eps_max},
                   {"d_f", rep.ledger.d_f},
                   {"l_required", rep.ledger.l_required},
                   {"s_window", rep.ledger.s_window},
                   {"eps_ok", rep.ledger.eps_ok},
                   {"l_ok", rep.ledger.l_ok}};
    j["worst"] = {{"omega_f", rep.worst.omega_f},
                  {"omega_g", rep.worst.omega_g},
                  {"best_sum", rep.worst.best_sum},
                  {"x_best", rep.worst.x_best}};
    j["verdict"] = rep.pass ? "PASS" : "INCONCLUSIVE";
    rc.write_json("growth_report.json", j);
    // a failed sufficient criterion is inconclusive for growth, never a
    // boundedness claim
    return rep.pass ? BlockStatus::Pass : BlockStatus::Inconclusive;
}

BlockStatus run_random(RunContext& rc, const ConfigSection& sec) {
    std::size_t trials = sec.get_size("trials", 16);
    std::size_t n = sec.get_size("n", 200);
    std::size_t m_terms = sec.get_size("m_terms", 60);

    const auto& seq = rc.cfg.sequence;
    std::size_t nf = seq.map_family.size();
    std::vector<GridFunction> g_per_map;
    for (std::size_t a = 0; a < nf; ++a) {
        const Observable& g =
            seq.obs_family[seq.obs_family.size() == nf ? a : 0];
        GridFunction gg = GridFunction::sample_real(
            rc.cfg.grid, [&g](double x) { return g(x); });
        if (std::abs(gg.integral_real()) > 1e-12)
            throw ConfigError("random: observables must have zero mean");
        g_per_map.push_back(gg);
    }

    RandomDichotomyReport rep =
        random_dichotomy(rc.engine, g_per_map, trials, n, rc.cfg.seed, m_terms);

    std::ostringstream csv;
    csv << "trial,sigma2_over_n,sigma2_over_2n,beta\n";
    for (std::size_t t = 0; t < trials; ++t)
        csv << t << ',' << format_double(rep.sigma2_over_n[t]) << ','
            << format_double(rep.sigma2_over_2n[t]) << ','
            << format_double(rep.beta[t]) << '\n';
    rc.write_text("random_trials.csv", csv.str());

    const char* cls = nullptr;
    BlockStatus st;
    switch (rep.classification) {
    case RandomClassification::Linear: cls = "LINEAR"; st = BlockStatus::Pass; break;
    case RandomClassification::Bounded: cls = "BOUNDED"; st = BlockStatus::Pass; break;
    case RandomClassification::Conflict: cls = "CONFLICT"; st = BlockStatus::Conflict; break;
    default: cls = "INCONCLUSIVE"; st = BlockStatus::Inconclusive; break;
    }

    json j;
    j["trials"] = trials;
    j["n"] = n;
    j["classification"] = cls;
    j["growth_mean"] = rep.growth_mean;
    j["growth_stderr"] = rep.growth_stderr;
    j["beta_mean"] = rep.beta_mean;
    j["conflict"] = rep.conflict;
    const char* cv = rep.coboundary.verdict == CoboundaryVerdict::Coboundary
                         ? "COBOUNDARY"
                         : rep.coboundary.verdict == CoboundaryVerdict::NotCoboundary
                               ? "NOT_COBOUNDARY"
                               : "INCONCLUSIVE";
    j["coboundary"] = {{"verdict", cv},
                       {"max_residual", rep.coboundary.max_residual},
                       {"cross_consistency", rep.coboundary.cross_consistency},
                       {"tail_ratio", rep.coboundary.tail_ratio},
                       {"terms", rep.coboundary.terms}};
    rc.write_json("random_report.json", j);
    rc.note("beta_mean", rep.beta_mean, "mean stationary variance rate over trials");
    return st;
}

BlockStatus dispatch(RunContext& rc, const ExperimentBlock& block) {
    const ConfigSection& sec = block.section;
    if (block.name == "variance") return run_variance(rc, sec);
    if (block.name == "charfn") return run_charfn(rc, sec);
    if (block.name == "berry-esseen") return run_berry_esseen(rc, sec);
    if (block.name == "montecarlo") return run_montecarlo(rc, sec);
    if (block.name == "cone-check") return run_cone_check(rc, sec);
    if (block.name == "conditions") return run_conditions(rc, sec);
    if (block.name == "growth") return run_growth(rc, sec);
    if (block.name == "random") return run_random(rc, sec);
    throw ConfigError("unknown experiment: " + block.name);
}

void write_manifest(const RunContext& rc) {
    json j;
    j["config_hash"] = rc.cfg.config_hash;
    j["seed"] = rc.cfg.seed;
    j["grid"] = rc.cfg.grid;
    j["cone"] = {{"a", rc.cfg.cone_a},
                 {"nu", rc.cfg.cone_nu},
                 {"tau_scale", rc.cfg.cone_tau_scale}};
    json consts = json::object();
    for (const auto& [k, v] : rc.fitted)
        consts[k] = {{"value", v.value}, {"provenance", v.provenance}};
    j["fitted_constants"] = consts;
    json blocks = json::array();
    for (const auto& [name, st] : rc.statuses)
        blocks.push_back({{"experiment", name}, {"status", status_name(st)}});
    j["blocks"] = blocks;
    rc.write_json("manifest.json", j);
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"sequential transfer-operator CLT toolkit"};
    app.require_subcommand(1);
    app.fallthrough(true);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t grid = 0;
    unsigned workers = 0;
    bool workers_set = false;

    const std::vector<std::string> names = {"variance",   "charfn",    "berry-esseen",
                                            "montecarlo", "cone-check", "conditions",
                                            "growth",     "random",     "all"};
    std::vector<CLI::App*> subs;
    for (const auto& n : names) subs.push_back(app.add_subcommand(n));
    app.add_option("--config", config_path, "run configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", seed, "global seed (overrides config)");
    app.add_option("--grid", grid, "grid size N (overrides config)");
    auto* workers_opt =
        app.add_option("--workers", workers, "worker threads (speed only)");

    std::vector<const char*> argv;
    argv.push_back("seqclt");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) { // --help
            std::cout << app.help();
            return 0;
        }
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }
    seed_set = seed_opt->count() > 0;
    workers_set = workers_opt->count() > 0;

    std::string command;
    for (std::size_t i = 0; i < names.size(); ++i)
        if (subs[i]->parsed()) command = names[i];

    RunContext rc;
    try {
        rc.cfg = load_config(config_path);
        if (!out_dir.empty()) rc.cfg.out_dir = out_dir;
        if (seed_set) rc.cfg.seed = seed;
        if (grid != 0) {
            if ((grid & (grid - 1)) != 0)
                throw ConfigError("--grid: must be a power of two");
            rc.cfg.grid = grid;
        }
        if (workers_set) rc.cfg.workers = workers;

        std::vector<const ExperimentBlock*> to_run;
        if (command == "all") {
            for (const auto& b : rc.cfg.experiments) to_run.push_back(&b);
            if (to_run.empty()) throw ConfigError("config declares no experiment blocks");
        } else {
            const ExperimentBlock* b = rc.cfg.find_experiment(command);
            if (!b)
                throw ConfigError("config has no [experiment " + command + "] block");
            to_run.push_back(b);
        }

        rc.engine =
            std::make_shared<TransferEngine>(rc.cfg.sequence.map_family, rc.cfg.grid);
        rc.out = rc.cfg.out_dir;
        fs::create_directories(rc.out);

        for (std::size_t k : rc.cfg.dump_densities) {
            GridFunction h = GridFunction::sample_real(
                rc.cfg.grid, [&](double x) { return rc.cfg.sequence.rho(x); });
            for (std::size_t i = 0; i < k; ++i)
                h = rc.engine->apply(rc.cfg.sequence.map_index_at(i), h);
            rc.write_text("density_" + std::to_string(k) + ".csv", csv_grid(h));
        }

        for (const auto* b : to_run) {
            BlockStatus st = dispatch(rc, *b);
            rc.statuses.emplace_back(b->name, st);
            std::cout << "[" << status_name(st) << "] " << b->name << "\n";
        }
        write_manifest(rc);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    bool failed = false, soft = false;
    for (const auto& [name, st] : rc.statuses) {
        if (st == BlockStatus::Failed) failed = true;
        if (st == BlockStatus::Inconclusive || st == BlockStatus::Conflict) soft = true;
    }
    if (failed) return 2;
    if (soft) return 3;
    return 0;
}

} // namespace seqclt
