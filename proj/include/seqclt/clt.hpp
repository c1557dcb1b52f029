#ifndef SEQCLT_CLT_HPP
#define SEQCLT_CLT_HPP

#include "seqclt/cones.hpp"
#include "seqclt/grid_function.hpp"
#include "seqclt/maps.hpp"
#include "seqclt/transfer.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace seqclt {

// Observables centered against the pushed initial density:
// c_k = int g_k h_k with h_k = L_{k-1} ... L_0 rho.
struct CenteredSequence {
    std::shared_ptr<const TransferEngine> engine;
    SequenceSpec seq;
    std::size_t horizon = 0;
    GridFunction rho_grid;
    std::vector<double> centers;        // c_k
    std::vector<GridFunction> ghat;     // g_k - c_k on the grid
    std::vector<GridFunction> densities; // h_0 .. h_horizon
};

CenteredSequence center_sequence(std::shared_ptr<const TransferEngine> engine,
                                 const SequenceSpec& seq, std::size_t n);

enum class VarianceMode { Full, Banded };

struct PairCovariance {
    std::size_t k, j;
    double value;
};

struct VarianceResult {
    double sigma2 = 0.0;
    std::size_t window = 0; // pairs with k - j <= window entered the sum
    std::vector<PairCovariance> pairs;
};

// sigma_n^2 as the window-limited sum of pair covariances
//   Sigma_{k,j} = int ghat_k L_{k-1} ... L_j (ghat_j h_j),
// Full mode sums all pairs (with exact-zero tails skipped), Banded mode
// restricts to |k-j| <= window.
VarianceResult variance(const CenteredSequence& cs, std::size_t n, VarianceMode mode,
                        std::size_t window = 0);

struct UpsilonEntry {
    double lambda = 0.0;
    Complex value{0.0, 0.0};
    double abs_err = 0.0; // |value - e^{-lambda^2/2}|
    bool flagged = false; // above the twist cap, not computed
};

// Characteristic function of the normalized sum: one twisted push of rho
// through the whole window per lambda.
std::vector<UpsilonEntry> char_fn(const CenteredSequence& cs, std::size_t n,
                                  double sigma, const std::vector<double>& lambdas,
                                  double twist_cap, unsigned workers = 1);

struct FellerBound {
    double T = 0.0;
    double bound = 0.0;
    double integral_part = 0.0;
    double tail_part = 0.0; // 24 / (pi T)
    bool truncated = false; // T clipped to the twist cap
};

// Smoothing bound (1/pi) int_{-T}^{T} |Upsilon(z) - e^{-z^2/2}|/|z| dz + 24/(pi T),
// by composite Simpson with refinement near zero.
FellerBound berry_esseen(const CenteredSequence& cs, std::size_t n, double sigma,
                         double T, double twist_cap, unsigned workers = 1);

struct MonteCarloResult {
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double ks = 0.0;
    double dkw99 = 0.0; // sqrt(ln(2/0.01) / (2M))
    std::vector<double> sorted_values;
    std::vector<std::pair<double, double>> quantiles;
};

// Empirical CDF of the normalized sum. Randomness is counter-based per
// sample, so the result is byte-identical for any worker count.
MonteCarloResult monte_carlo(const CenteredSequence& cs, std::size_t n,
                             std::size_t m_samples, std::uint64_t seed, double sigma,
                             unsigned workers = 1);

struct RankOneFit {
    double lambda = 0.0;
    double theta_fit = 0.0;
    double constant = 0.0;
    bool trivially_certified = false; // residuals at rounding level at all windows
    bool failed = false;              // theta_fit >= 1
    std::size_t failed_window = 0;
    std::vector<std::pair<std::size_t, double>> residuals; // (window length, residual)
};

struct ConditionDiagnostics {
    double c_star = 0.0;                     // power boundedness
    double k_multiplier = 0.0;               // multiplier condition, max over powers
    std::array<double, 3> k_by_power{};      // per power 1..3
    double k_twist = 0.0;                    // twisted-chain norm bound
    std::vector<RankOneFit> rank_one;        // per lambda
    double ell_min = 1.0;                    // min sampled |ell_{k,j}(h_{j,l})|
    std::vector<std::pair<std::size_t, double>> theta1; // |Theta^1_k| vs k
    double theta1_lambda = 0.0;
    std::size_t window_ln = 0;               // window used for Theta^1
    bool failed = false;
};

ConditionDiagnostics condition_diagnostics(const CenteredSequence& cs, std::size_t n,
                                           double sigma,
                                           const std::vector<double>& lambdas,
                                           const std::vector<std::size_t>& windows,
                                           const ConeContext& ctx, std::size_t trials,
                                           std::uint64_t seed, double c_l = 4.0);

// Inverse-CDF sample of a positive trigonometric density.
double sample_from_density(const Observable& rho, double u);

// One Monte Carlo orbit step: f(x) plus one fresh low-order dither bit so
// exactly-binary maps do not exhaust their mantissa entropy.
double mc_step(const CircleMap& map, double x, int dither_bit);

} // namespace seqclt

#endif
