#ifndef SEQCLT_TRANSFER_HPP
#define SEQCLT_TRANSFER_HPP

#include "seqclt/grid_function.hpp"
#include "seqclt/maps.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace seqclt {

// Spectral collocation kernel of the transfer operator of one map:
//   (L h)(x_i) = sum_branches h(y_b(x_i)) / f'(y_b(x_i)),
// with h evaluated by trigonometric interpolation. The preimage data
// depend only on the map and the grid, so the whole action reduces to an
// FFT followed by a dense mode-evaluation product.
//
// The engine owns one kernel per family map and reports resolution
// warnings when an input's coefficient tail is too large for the grid.
class TransferEngine {
public:
    TransferEngine(std::vector<CircleMap> family, std::size_t n_points);

    std::size_t grid() const { return n_; }
    std::size_t family_size() const { return family_.size(); }
    const CircleMap& map(std::size_t idx) const { return family_.at(idx); }
    const std::vector<CircleMap>& family() const { return family_; }

    // plain transfer operator
    GridFunction apply(std::size_t map_idx, const GridFunction& h) const;
    // multiplier weight: L(w h)
    GridFunction apply_weighted(std::size_t map_idx, const GridFunction& h,
                                const GridFunction& w) const;
    // phase weight: L(e^{i t ghat} h); t == 0 reduces exactly to apply()
    GridFunction apply_phase(std::size_t map_idx, const GridFunction& h, double t,
                             const GridFunction& ghat) const;

    // f(x_i) sampled on the grid, for compositions psi(f(x))
    GridFunction compose(std::size_t map_idx, const GridFunction& psi) const;

    std::vector<std::string> resolution_warnings() const;
    void clear_warnings() const;

private:
    struct Kernel {
        // row-major N x N, column k in FFT coefficient order
        std::vector<Complex> matrix;
    };

    GridFunction apply_samples(std::size_t map_idx, std::vector<Complex> samples,
                               bool real) const;
    void check_resolution(const GridFunction& u) const;

    std::vector<CircleMap> family_;
    std::size_t n_;
    std::vector<Kernel> kernels_;
    mutable std::mutex warn_mu_;
    mutable std::vector<std::string> warnings_;
};

// Twist attached to an operator chain: every factor k becomes
// L_k(e^{i lambda_over_sigma ghat_k} h).
struct TwistSpec {
    double lambda_over_sigma = 0.0;
    const std::vector<GridFunction>* ghat = nullptr; // indexed by absolute position
};

// Inclusive composition window [first, last] over a sequence.
struct OperatorChainSpec {
    const SequenceSpec* sequence = nullptr;
    std::size_t first = 0;
    std::size_t last = 0;
    std::optional<TwistSpec> twist;
};

// Left-to-right application of the chain to h (position `first` acts
// first). Throws if the window is invalid.
GridFunction push_sequence(const TransferEngine& engine, const OperatorChainSpec& chain,
                           const GridFunction& h);

// Append-only cache of the pushed densities h_k = L_{k-1} ... L_0 rho,
// with h_0 = rho. Safe for concurrent readers; extension is serialized.
class PushCache {
public:
    PushCache(std::shared_ptr<const TransferEngine> engine, SequenceSpec seq,
              GridFunction rho);

    // h_k; extends the cached prefix on demand
    GridFunction density(std::size_t k) const;
    const SequenceSpec& sequence() const { return seq_; }
    const TransferEngine& engine() const { return *engine_; }

private:
    std::shared_ptr<const TransferEngine> engine_;
    SequenceSpec seq_;
    mutable std::mutex mu_;
    mutable std::vector<GridFunction> densities_;
};

} // namespace seqclt

#endif
