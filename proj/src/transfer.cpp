#include "seqclt/transfer.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace seqclt {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double tail_threshold = 1e-8;
} // namespace

TransferEngine::TransferEngine(std::vector<CircleMap> family, std::size_t n_points)
    : family_(std::move(family)), n_(n_points) {
    if (family_.empty()) throw std::invalid_argument("TransferEngine: empty family");
    if (n_ == 0 || (n_ & (n_ - 1)) != 0)
        throw std::invalid_argument("TransferEngine: grid size must be a power of two");
    kernels_.resize(family_.size());
    for (std::size_t m = 0; m < family_.size(); ++m) {
        const CircleMap& map = family_[m];
        Kernel& ker = kernels_[m];
        ker.matrix.assign(n_ * n_, Complex(0.0, 0.0));
        const int D = map.degree();
        for (std::size_t i = 0; i < n_; ++i) {
            double x = static_cast<double>(i) / static_cast<double>(n_);
            Complex* row = ker.matrix.data() + i * n_;
            for (int b = 0; b < D; ++b) {
                double y = map.branch_inverse(x, b);
                double w = 1.0 / map.derivative(y);
                row[0] += w;
                for (std::size_t k = 1; k < n_ / 2; ++k) {
                    Complex e = std::polar(w, two_pi * static_cast<double>(k) * y);
                    row[k] += e;
                    row[n_ - k] += std::conj(e);
                }
                row[n_ / 2] +=
                    w * std::cos(std::numbers::pi * static_cast<double>(n_) * y);
            }
        }
    }
}

void TransferEngine::check_resolution(const GridFunction& u) const {
    double tail = u.tail_fraction();
    if (tail > tail_threshold) {
        std::lock_guard<std::mutex> lock(warn_mu_);
        warnings_.push_back("grid too coarse: coefficient tail fraction " +
                            std::to_string(tail) + " exceeds 1e-8; suggest N = " +
                            std::to_string(2 * n_));
    }
}

GridFunction TransferEngine::apply_samples(std::size_t map_idx,
                                           std::vector<Complex> samples,
                                           bool real) const {
    GridFunction u = GridFunction::from_complex(std::move(samples));
    check_resolution(u);
    const auto& c = u.coefficients();
    const Kernel& ker = kernels_.at(map_idx);
    std::vector<Complex> out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        const Complex* row = ker.matrix.data() + i * n_;
        Complex acc = 0.0;
        for (std::size_t k = 0; k < n_; ++k) acc += row[k] * c[k];
        out[i] = acc;
    }
    if (real) {
        std::vector<double> r(n_);
        for (std::size_t i = 0; i < n_; ++i) r[i] = out[i].real();
        return GridFunction::from_real(std::move(r));
    }
    return GridFunction::from_complex(std::move(out));
}

GridFunction TransferEngine::apply(std::size_t map_idx, const GridFunction& h) const {
    if (h.size() != n_) throw std::invalid_argument("apply: grid mismatch");
    return apply_samples(map_idx, h.values(), h.is_real());
}

GridFunction TransferEngine::apply_weighted(std::size_t map_idx, const GridFunction& h,
                                            const GridFunction& w) const {
    if (h.size() != n_ || w.size() != n_)
        throw std::invalid_argument("apply_weighted: grid mismatch");
    std::vector<Complex> u(n_);
    for (std::size_t i = 0; i < n_; ++i) u[i] = h.values()[i] * w.values()[i];
    return apply_samples(map_idx, std::move(u), h.is_real() && w.is_real());
}

GridFunction TransferEngine::apply_phase(std::size_t map_idx, const GridFunction& h,
                                         double t, const GridFunction& ghat) const {
    if (h.size() != n_ || ghat.size() != n_)
        throw std::invalid_argument("apply_phase: grid mismatch");
    if (t == 0.0) return apply(map_idx, h);
    std::vector<Complex> u(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        double phase = t * ghat.values()[i].real();
        u[i] = h.values()[i] * Complex(std::cos(phase), std::sin(phase));
    }
    return apply_samples(map_idx, std::move(u), false);
}

GridFunction TransferEngine::compose(std::size_t map_idx, const GridFunction& psi) const {
    if (psi.size() != n_) throw std::invalid_argument("compose: grid mismatch");
    const CircleMap& map = this->map(map_idx);
    std::vector<Complex> out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        double x = static_cast<double>(i) / static_cast<double>(n_);
        out[i] = psi.interpolate(map.forward(x));
    }
    if (psi.is_real()) {
        std::vector<double> r(n_);
        for (std::size_t i = 0; i < n_; ++i) r[i] = out[i].real();
        return GridFunction::from_real(std::move(r));
    }
    return GridFunction::from_complex(std::move(out));
}

std::vector<std::string> TransferEngine::resolution_warnings() const {
    std::lock_guard<std::mutex> lock(warn_mu_);
    return warnings_;
}

void TransferEngine::clear_warnings() const {
    std::lock_guard<std::mutex> lock(warn_mu_);
    warnings_.clear();
}

GridFunction push_sequence(const TransferEngine& engine, const OperatorChainSpec& chain,
                           const GridFunction& h) {
    if (!chain.sequence) throw std::invalid_argument("push_sequence: missing sequence");
    if (chain.last < chain.first)
        throw std::invalid_argument("push_sequence: window end precedes start");
    GridFunction cur = h;
    for (std::size_t k = chain.first; k <= chain.last; ++k) {
        std::size_t m = chain.sequence->map_index_at(k);
        if (chain.twist && chain.twist->lambda_over_sigma != 0.0) {
            const auto& ghat = *chain.twist->ghat;
            cur = engine.apply_phase(m, cur, chain.twist->lambda_over_sigma, ghat.at(k));
        } else {
            cur = engine.apply(m, cur);
        }
    }
    return cur;
}

PushCache::PushCache(std::shared_ptr<const TransferEngine> engine, SequenceSpec seq,
                     GridFunction rho)
    : engine_(std::move(engine)), seq_(std::move(seq)) {
    if (rho.size() != engine_->grid())
        throw std::invalid_argument("PushCache: density grid mismatch");
    densities_.push_back(std::move(rho));
}

GridFunction PushCache::density(std::size_t k) const {
    std::lock_guard<std::mutex> lock(mu_);
    while (densities_.size() <= k) {
        std::size_t j = densities_.size() - 1;
        densities_.push_back(engine_->apply(seq_.map_index_at(j), densities_.back()));
    }
    return densities_[k];
}

} // namespace seqclt
