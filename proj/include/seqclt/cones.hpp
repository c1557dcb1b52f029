#ifndef SEQCLT_CONES_HPP
#define SEQCLT_CONES_HPP

#include "seqclt/grid_function.hpp"
#include "seqclt/transfer.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace seqclt {

// Cone of positive functions with |h'| <= a h, described through the dual
// functionals ell_{x,v}(h) = a h(x) - v h'(x), v in {-1,+1}, sampled at
// the grid points. All metrics computed from the sampled functionals are
// lower bounds of the continuum suprema.
class ConeContext {
public:
    ConeContext(double aperture, double contraction_target, std::size_t grid,
                std::optional<double> interior_offset = std::nullopt,
                std::size_t sample_stride = 0);

    double aperture() const { return aperture_; }
    double contraction_target() const { return nu_; }
    double kappa() const { return kappa_; }
    double interior_offset() const { return tau_; }
    std::size_t grid() const { return grid_; }
    std::size_t sample_stride() const { return stride_; }

    // sampled dual values ell_{x_i,v}(h) for v = +1 then v = -1, stride
    // applied; h must be real
    std::vector<double> dual_values(const GridFunction& h) const;
    // same functionals applied to a complex h
    std::vector<Complex> dual_values_complex(const GridFunction& h) const;

private:
    double aperture_;
    double nu_;
    double kappa_;
    double tau_;
    std::size_t grid_;
    std::size_t stride_;
};

struct MembershipMargin {
    double margin;  // min over grid of a h - |h'|
    double min_value;
    bool member;    // margin >= -1e-10 and min h > 0
};

MembershipMargin membership_margin(const GridFunction& h, const ConeContext& ctx);
// membership at a different aperture (image cones have aperture nu * a)
MembershipMargin membership_margin(const GridFunction& h, double aperture);

// sup_x |h(x)| + a^{-1} |h'(x)| over the grid
double cone_norm(const GridFunction& h, const ConeContext& ctx);
// complex extension: sup over a 256-angle sweep of the rotated pair norm
double cone_norm_complex(const GridFunction& h, const ConeContext& ctx);

// Projective (Hilbert) distance from the sampled functional ratios.
// Requires both arguments strictly inside the cone.
double hilbert_distance(const GridFunction& h, const GridFunction& g,
                        const ConeContext& ctx);

struct ComplexMembership {
    bool member;
    double worst_pair; // min over sampled pairs of Re(ell(h) conj(m(h)))
};

ComplexMembership complex_membership(const GridFunction& h, const ConeContext& ctx);

struct GaugeResult {
    double value = 0.0;
    bool infinite = false; // a sampled functional vanished on g
    std::size_t sample_count = 0;
    std::string witness;   // description of the extremal functionals
};

// Projective gauge of the complex cone, sampled over functionals
// (q1 + tau m) + i (q2 + tau m) with all four sign combinations.
GaugeResult complex_gauge(const GridFunction& h, const GridFunction& g,
                          const ConeContext& ctx);

// Random strictly-interior cone element: 1 + sum_{m<=8} u_m cos(2 pi m x + psi_m)
// with sum 2 pi m |u_m| <= 0.8 a (1 - sum |u_m|).
struct ConeElementCoeffs {
    std::vector<double> amplitudes; // index m-1
    std::vector<double> phases;
    GridFunction materialize(std::size_t grid) const;
};
ConeElementCoeffs random_cone_element(double aperture, std::uint64_t seed,
                                      std::uint64_t index, bool odd_harmonics = false);

struct ContractionReport {
    double delta_real = 0.0;        // sampled Hilbert diameter of the trial images
    double delta_real_probed = 0.0; // same, including near-boundary probes
    double delta_complex = 0.0;     // sampled gauge diameter (trials + probes)
    double ratio_max = 0.0;         // max delta(Lh,Lg)/delta(h,g) over trial pairs
    double tanh_bound = 0.0;        // tanh(delta_complex/4)
    bool contraction_ok = false;    // ratio_max <= tanh_bound + slack
    double diam_rel_bound = 0.0;    // 8 delta_real_probed + 2 ln(3 sqrt2 / kappa^2)
    bool diam_rel_ok = false;
    std::vector<double> t_values;
    std::vector<double> eps_t;      // perturbation certificate per t
    double eps_threshold = 0.0;     // kappa^2 e^{-2 delta_real} / (12 sqrt 2)
    bool eps_ok = false;            // eps_t < threshold at the smallest t
    std::size_t skipped_pairs = 0;  // degenerate pairs (gauge < 1e-8)
    std::size_t probe_count = 0;
    std::vector<std::array<double, 3>> pair_table; // delta_in, delta_out, ratio
};

// Near-boundary diameter witnesses: rotations of exp(-c * tri(x)), where
// tri is a smooth triangle-distance profile with |d/dx| kept under the
// aperture budget. Their images realize far more of the cone-image
// diameter than mild trial elements do.
std::vector<GridFunction> boundary_probes(double aperture, std::size_t grid);

// Samples the contraction certificates of the chain's composed operator:
// real/complex image diameters, the gauge contraction ratio against
// tanh(Delta/4), and the twisted-operator perturbation certificate
// eps(t) = max |ell(L_t h - L h)| / ell(L h) over dual samples and trials.
ContractionReport contraction_report(const TransferEngine& engine,
                                     const OperatorChainSpec& chain,
                                     const ConeContext& ctx, std::size_t trials,
                                     std::uint64_t seed,
                                     const GridFunction& twist_observable,
                                     const std::vector<double>& t_values,
                                     double ratio_slack = 0.05,
                                     double trial_scale = 1.0,
                                     bool odd_trials = false);

namespace detail {
// gauge from precomputed interior dual values (exposed for boundary-flag tests)
GaugeResult sampled_gauge(const std::vector<Complex>& on_h,
                          const std::vector<Complex>& on_g);

struct GaugePairStats {
    double delta_complex = 0.0;
    double ratio_max = 0.0;
    std::size_t skipped = 0;
    std::vector<std::array<double, 3>> table;
};

// pairwise gauge statistics of inputs vs their chain images; degenerate
// input pairs (gauge below 1e-8) are skipped and counted
GaugePairStats gauge_pair_stats(const TransferEngine& engine,
                                const OperatorChainSpec& chain, const ConeContext& ctx,
                                const std::vector<GridFunction>& inputs);
} // namespace detail

} // namespace seqclt

#endif
