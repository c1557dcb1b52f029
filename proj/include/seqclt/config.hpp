#ifndef SEQCLT_CONFIG_HPP
#define SEQCLT_CONFIG_HPP

#include "seqclt/maps.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqclt {

// Raised on malformed configuration; carries the offending line/field.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Sectioned key = value text. Keys may repeat inside a section (fourier
// terms do); section headers are `[kind name]` or `[kind]`.
struct ConfigSection {
    std::string kind;
    std::string name;
    std::size_t line = 0;
    std::vector<std::pair<std::string, std::string>> entries;
    std::map<std::string, std::size_t> entry_lines;

    bool has(const std::string& key) const;
    std::string get(const std::string& key, const std::string& fallback = "") const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::vector<std::string> get_all(const std::string& key) const;
};

struct ExperimentBlock {
    std::string name; // variance | charfn | berry-esseen | montecarlo |
                      // cone-check | conditions | growth | random
    ConfigSection section;
};

struct RunConfig {
    std::size_t grid = 256;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::string out_dir = "out";
    std::vector<std::size_t> dump_densities;

    double cone_a = 10.0;
    double cone_nu = 0.55;
    double cone_tau_scale = 0.1; // tau = scale * kappa
    std::size_t gauge_stride = 0;

    SequenceSpec sequence;
    std::vector<std::string> map_names;
    std::vector<std::string> obs_names;

    std::vector<ExperimentBlock> experiments;

    std::string raw_text;
    std::string config_hash;

    const ExperimentBlock* find_experiment(const std::string& name) const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

} // namespace seqclt

#endif
