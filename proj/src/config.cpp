#include "seqclt/config.hpp"

#include "seqclt/util.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace seqclt {

bool ConfigSection::has(const std::string& key) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const auto& e) { return e.first == key; });
}

std::string ConfigSection::get(const std::string& key, const std::string& fallback) const {
    for (const auto& e : entries)
        if (e.first == key) return e.second;
    return fallback;
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
    std::string v = get(key);
    if (v.empty()) return fallback;
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        auto it = entry_lines.find(key);
        throw ConfigError("line " + std::to_string(it != entry_lines.end() ? it->second : line) +
                          ": field '" + key + "' in [" + kind +
                          (name.empty() ? "" : " " + name) + "]: not a number: '" + v + "'");
    }
}

std::size_t ConfigSection::get_size(const std::string& key, std::size_t fallback) const {
    double d = get_double(key, static_cast<double>(fallback));
    if (d < 0 || d != std::floor(d))
        throw ConfigError("field '" + key + "': expected a non-negative integer");
    return static_cast<std::size_t>(d);
}

std::vector<std::string> ConfigSection::get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& e : entries)
        if (e.first == key) out.push_back(e.second);
    return out;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

double parse_number(const std::string& tok, std::size_t line, const std::string& field) {
    try {
        std::size_t pos = 0;
        double d = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": field '" + field +
                          "': not a number: '" + tok + "'");
    }
}

IndexSequence parse_omega(const ConfigSection& sec, const std::string& key) {
    std::string v = sec.get(key, "periodic 0");
    auto toks = split_ws(v);
    std::size_t ln = sec.entry_lines.count(key) ? sec.entry_lines.at(key) : sec.line;
    if (toks.empty())
        throw ConfigError("line " + std::to_string(ln) + ": field '" + key + "': empty");
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i < toks.size(); ++i) {
        double d = parse_number(toks[i], ln, key);
        if (d < 0 || d != std::floor(d))
            throw ConfigError("line " + std::to_string(ln) + ": field '" + key +
                              "': indices must be non-negative integers");
        idx.push_back(static_cast<std::size_t>(d));
    }
    if (toks[0] == "periodic") {
        if (idx.empty()) idx.push_back(0);
        return IndexSequence::periodic(idx);
    }
    if (toks[0] == "explicit") {
        if (idx.empty())
            throw ConfigError("line " + std::to_string(ln) + ": field '" + key +
                              "': explicit list needs indices");
        return IndexSequence::explicit_list(idx);
    }
    if (toks[0] == "iid") {
        std::uint64_t seed = idx.empty() ? 0 : static_cast<std::uint64_t>(idx[0]);
        return IndexSequence::iid(seed);
    }
    throw ConfigError("line " + std::to_string(ln) + ": field '" + key +
                      "': unknown mode '" + toks[0] + "' (periodic|explicit|iid)");
}

} // namespace

const ExperimentBlock* RunConfig::find_experiment(const std::string& name) const {
    for (const auto& e : experiments)
        if (e.name == name) return &e;
    return nullptr;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    cfg.raw_text = text;
    {
        char buf[20];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(fnv1a(text)));
        cfg.config_hash = buf;
    }

    std::vector<ConfigSection> sections;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    ConfigSection* cur = nullptr;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unterminated section header");
            auto toks = split_ws(s.substr(1, s.size() - 2));
            if (toks.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section header");
            ConfigSection sec;
            sec.kind = toks[0];
            if (toks.size() > 1) sec.name = toks[1];
            if (toks.size() > 2)
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": section header has too many tokens");
            sec.line = lineno;
            sections.push_back(sec);
            cur = &sections.back();
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value' or a [section] header");
        if (!cur)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": entry outside of any section");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        cur->entries.emplace_back(key, val);
        cur->entry_lines.emplace(key, lineno);
    }

    std::vector<std::pair<std::string, CircleMap>> maps;
    std::vector<std::pair<std::string, Observable>> observables;
    std::vector<std::pair<std::string, Observable>> densities;
    const ConfigSection* seq_sec = nullptr;

    for (const auto& sec : sections) {
        if (sec.kind == "grid") {
            cfg.grid = sec.get_size("n", cfg.grid);
            if (cfg.grid == 0 || (cfg.grid & (cfg.grid - 1)) != 0)
                throw ConfigError("line " + std::to_string(sec.line) +
                                  ": field 'n' in [grid]: must be a power of two");
        } else if (sec.kind == "run") {
            cfg.seed = static_cast<std::uint64_t>(sec.get_size("seed", cfg.seed));
            cfg.workers = static_cast<unsigned>(sec.get_size("workers", cfg.workers));
            cfg.out_dir = sec.get("out", cfg.out_dir);
            for (const auto& v : sec.get_all("dump_density"))
                cfg.dump_densities.push_back(static_cast<std::size_t>(
                    parse_number(v, sec.line, "dump_density")));
        } else if (sec.kind == "cone") {
            cfg.cone_a = sec.get_double("a", cfg.cone_a);
            cfg.cone_nu = sec.get_double("nu", cfg.cone_nu);
            cfg.cone_tau_scale = sec.get_double("tau_scale", cfg.cone_tau_scale);
            cfg.gauge_stride = sec.get_size("gauge_stride", cfg.gauge_stride);
        } else if (sec.kind == "map") {
            if (sec.name.empty())
                throw ConfigError("line " + std::to_string(sec.line) + ": [map] needs a name");
            int degree = static_cast<int>(sec.get_size("degree", 2));
            std::vector<CircleMap::Term> terms;
            for (const auto& t : sec.get_all("term")) {
                auto toks = split_ws(t);
                if (toks.size() != 3)
                    throw ConfigError("line " + std::to_string(sec.line) + ": map term '" + t +
                                      "': expected 'm eps phase'");
                terms.push_back({static_cast<int>(parse_number(toks[0], sec.line, "term")),
                                 parse_number(toks[1], sec.line, "term"),
                                 parse_number(toks[2], sec.line, "term")});
            }
            try {
                maps.emplace_back(sec.name, CircleMap(degree, terms));
            } catch (const std::exception& e) {
                throw ConfigError("line " + std::to_string(sec.line) + ": [map " + sec.name +
                                  "]: " + e.what());
            }
        } else if (sec.kind == "observable" || sec.kind == "density") {
            if (sec.name.empty())
                throw ConfigError("line " + std::to_string(sec.line) + ": [" + sec.kind +
                                  "] needs a name");
            std::vector<Observable::Term> terms;
            for (const auto& t : sec.get_all("term")) {
                auto toks = split_ws(t);
                if (toks.size() != 3)
                    throw ConfigError("line " + std::to_string(sec.line) + ": term '" + t +
                                      "': expected 'm cos_coeff sin_coeff'");
                terms.push_back({static_cast<int>(parse_number(toks[0], sec.line, "term")),
                                 parse_number(toks[1], sec.line, "term"),
                                 parse_number(toks[2], sec.line, "term")});
            }
            if (sec.kind == "observable")
                observables.emplace_back(sec.name, Observable(terms));
            else
                densities.emplace_back(sec.name, Observable(terms));
        } else if (sec.kind == "sequence") {
            seq_sec = &sec;
        } else if (sec.kind == "experiment") {
            if (sec.name.empty())
                throw ConfigError("line " + std::to_string(sec.line) +
                                  ": [experiment] needs a name");
            static const char* known[] = {"variance", "charfn", "berry-esseen",
                                          "montecarlo", "cone-check", "conditions",
                                          "growth", "random"};
            if (std::none_of(std::begin(known), std::end(known),
                             [&](const char* k) { return sec.name == k; }))
                throw ConfigError("line " + std::to_string(sec.line) +
                                  ": unknown experiment '" + sec.name + "'");
            cfg.experiments.push_back({sec.name, sec});
        } else {
            throw ConfigError("line " + std::to_string(sec.line) + ": unknown section [" +
                              sec.kind + "]");
        }
    }

    if (maps.empty()) throw ConfigError("config declares no [map] section");
    if (observables.empty()) throw ConfigError("config declares no [observable] section");

    auto lookup = [](const auto& table, const std::string& name, const char* what,
                     std::size_t line) -> std::size_t {
        for (std::size_t i = 0; i < table.size(); ++i)
            if (table[i].first == name) return i;
        throw ConfigError("line " + std::to_string(line) + ": unknown " + std::string(what) +
                          " '" + name + "'");
    };

    SequenceSpec seq;
    if (seq_sec) {
        auto map_list = split_ws(seq_sec->get("maps", ""));
        auto obs_list = split_ws(seq_sec->get("observables", ""));
        if (map_list.empty())
            for (const auto& m : maps) map_list.push_back(m.first);
        if (obs_list.empty())
            for (const auto& o : observables) obs_list.push_back(o.first);
        for (const auto& nm : map_list) {
            std::size_t i = lookup(maps, nm, "map", seq_sec->line);
            seq.map_family.push_back(maps[i].second);
            cfg.map_names.push_back(nm);
        }
        for (const auto& nm : obs_list) {
            std::size_t i = lookup(observables, nm, "observable", seq_sec->line);
            seq.obs_family.push_back(observables[i].second);
            cfg.obs_names.push_back(nm);
        }
        seq.omega_f = parse_omega(*seq_sec, "omega_f");
        seq.omega_g = parse_omega(*seq_sec, "omega_g");
        std::string rho_name = seq_sec->get("rho", "uniform");
        if (rho_name == "uniform") {
            seq.rho = Observable::constant(1.0);
        } else {
            std::size_t i = lookup(densities, rho_name, "density", seq_sec->line);
            seq.rho = densities[i].second;
        }
    } else {
        for (const auto& m : maps) {
            seq.map_family.push_back(m.second);
            cfg.map_names.push_back(m.first);
        }
        for (const auto& o : observables) {
            seq.obs_family.push_back(o.second);
            cfg.obs_names.push_back(o.first);
        }
        seq.omega_f = IndexSequence::periodic({0});
        seq.omega_g = IndexSequence::periodic({0});
        seq.rho = Observable::constant(1.0);
    }
    if (std::abs(seq.rho.mean() - 1.0) > 1e-12)
        throw ConfigError("density does not integrate to 1 within 1e-12");

    // cone parameter sanity against the declared family
    ExpansionConstants exc = expansion_constants(seq.map_family);
    double inv_theta = 1.0 / exc.min_expansion;
    if (!(cfg.cone_nu > inv_theta && cfg.cone_nu < 1.0)) {
        std::ostringstream msg;
        msg << "cone parameter nu = " << cfg.cone_nu
            << " violates nu in (theta^-1, 1) = (" << inv_theta << ", 1)";
        throw ConfigError(msg.str());
    }
    if (!(cfg.cone_a > 1.0)) throw ConfigError("cone parameter a must exceed 1");
    if (!(cfg.cone_tau_scale > 0.0 && cfg.cone_tau_scale < 1.0))
        throw ConfigError("cone parameter tau_scale must lie in (0,1)");

    cfg.sequence = std::move(seq);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace seqclt
