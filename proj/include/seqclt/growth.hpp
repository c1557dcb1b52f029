#ifndef SEQCLT_GROWTH_HPP
#define SEQCLT_GROWTH_HPP

#include "seqclt/clt.hpp"
#include "seqclt/grid_function.hpp"
#include "seqclt/maps.hpp"
#include "seqclt/transfer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace seqclt {

// gamma_{S,k} = int g_k L_{k-1} ... L_{max(k-S,0)} 1 — the truncated center.
double truncated_center(const TransferEngine& engine, const SequenceSpec& seq,
                        std::size_t s_window, std::size_t k);

struct PropVarianceMode {
    double a = 0.5;
    double eps = 0.0; // 0 = derive the largest admissible value
};

struct CorVerifyMode {
    double kappa = 1.0; // fitted, not asserted
    double b = 2.0;     // fitted, not asserted
};

using GrowthMode = std::variant<PropVarianceMode, CorVerifyMode>;

struct GrowthConstraintLedger {
    double a = 0.0;
    double eps = 0.0;
    double eps_max = 0.0; // a / (4 sup |Dg|)
    int d_f = 0;
    double l_required = 0.0; // (8/a) D_F max |ghat|_inf
    std::size_t s_window = 0; // cor mode truncation
    double threshold = 0.0;   // per-sequence Birkhoff target
    bool eps_ok = true;
    bool l_ok = true;
};

struct OmegaResult {
    std::vector<std::size_t> omega_f;
    std::vector<std::size_t> omega_g;
    double best_sum = 0.0;
    double x_best = 0.0;
};

struct GrowthReport {
    bool pass = false;
    bool exhaustive = true;
    double coverage = 1.0; // fraction of sequences visited in sampled mode
    std::size_t sequences_checked = 0;
    GrowthConstraintLedger ledger;
    OmegaResult worst; // minimal best_sum
    std::vector<OmegaResult> table;
};

// Enumerates index blocks omega of length L+1, maximizes the Birkhoff sum
// of the truncation-centered observables over a grid of starting points
// (plus one local ascent), and checks every block against the threshold
// together with the side constraints.
GrowthReport growth_criterion(const TransferEngine& engine,
                              const std::vector<Observable>& obs_family,
                              std::size_t block_len, const GrowthMode& mode,
                              std::size_t point_grid = 4096, bool exhaustive = true,
                              std::size_t sample_count = 0, std::uint64_t seed = 0);

struct MartingaleResult {
    double sigma2 = 0.0;
    double max_orthogonality_residual = 0.0; // sup |Lhat_k Y_k|
    double min_density = 0.0;
    std::vector<GridFunction> phi;
    std::vector<GridFunction> y;
};

// Decomposition ghat_k = phi_{k+1} o f_k - phi_k + Y_k with Lhat_k Y_k = 0,
// built from the normalized operators Lhat_k(u) = L_k(h_k u) / h_{k+1};
// sigma2 = sum_k int h_k Y_k^2.
MartingaleResult martingale_decomposition(const CenteredSequence& cs, std::size_t n);

enum class CoboundaryVerdict { Coboundary, NotCoboundary, Inconclusive };

struct CoboundaryReport {
    CoboundaryVerdict verdict = CoboundaryVerdict::Inconclusive;
    std::vector<GridFunction> psi;        // per-map truncated Neumann solution
    std::vector<double> residuals;        // sup |g_a - psi_a + psi_a o f_a|
    double max_residual = 0.0;
    double cross_consistency = 0.0;       // max_{a,b} sup |psi_a - psi_b|
    double tail_ratio = 0.0;              // ||L^M g|| / ||L g||
    std::size_t terms = 0;
};

// Per map a, psi_a = -sum_{m=1}^{M} L_a^m g_a solves (L-I)psi = L g when
// g_a is a coboundary of f_a; a single shared psi requires cross-map
// agreement. Observables must have zero mean.
CoboundaryReport coboundary_solve(const TransferEngine& engine,
                                  const std::vector<GridFunction>& g_per_map,
                                  std::size_t m_terms);

enum class RandomClassification { Linear, Bounded, Conflict, Inconclusive };

struct RandomDichotomyReport {
    RandomClassification classification = RandomClassification::Inconclusive;
    std::vector<double> sigma2_over_n; // per trial at horizon n
    std::vector<double> sigma2_over_2n;
    std::vector<double> beta;          // per trial
    double beta_mean = 0.0;
    double growth_mean = 0.0;
    double growth_stderr = 0.0;
    CoboundaryReport coboundary;
    bool conflict = false;
};

// Draws i.i.d. uniform map sequences, measures per-trial variance growth
// and the stationary rate beta, and cross-checks against the coboundary
// solver; contradictory evidence is flagged, never dropped.
RandomDichotomyReport random_dichotomy(std::shared_ptr<const TransferEngine> engine,
                                       const std::vector<GridFunction>& g_per_map,
                                       std::size_t trials, std::size_t n,
                                       std::uint64_t seed, std::size_t m_terms = 60);

} // namespace seqclt

#endif
