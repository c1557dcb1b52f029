#include "seqclt/maps.hpp"

#include "seqclt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace seqclt {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double branch_tol = 1e-12;
} // namespace

CircleMap::CircleMap(int degree, std::vector<Term> terms)
    : degree_(degree), terms_(std::move(terms)) {
    if (degree_ < 2) throw std::invalid_argument("CircleMap: degree must be >= 2");
    double budget = 0.0;
    for (const auto& t : terms_) {
        if (t.harmonic < 1)
            throw std::invalid_argument("CircleMap: harmonics must be >= 1");
        budget += two_pi * t.harmonic * std::abs(t.amplitude);
    }
    if (budget >= degree_ - 1)
        throw std::invalid_argument(
            "CircleMap: sum 2 pi m |eps_m| must stay below D - 1 (map not uniformly expanding)");
    expansion_floor_ = degree_ - budget;
    offset_ = 0.0;
    for (const auto& t : terms_) offset_ += t.amplitude * std::sin(t.phase);
}

double CircleMap::lift(double y) const {
    double v = degree_ * y;
    for (const auto& t : terms_)
        v += t.amplitude * std::sin(two_pi * t.harmonic * y + t.phase);
    return v;
}

double CircleMap::forward(double x) const {
    double v = lift(x);
    double f = v - std::floor(v);
    return f < 1.0 ? f : 0.0;
}

double CircleMap::derivative(double y) const {
    double v = degree_;
    for (const auto& t : terms_)
        v += t.amplitude * two_pi * t.harmonic *
             std::cos(two_pi * t.harmonic * y + t.phase);
    return v;
}

double CircleMap::second_derivative(double y) const {
    double v = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.harmonic;
        v -= t.amplitude * w * w * std::sin(w * y + t.phase);
    }
    return v;
}

double CircleMap::third_derivative(double y) const {
    double v = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.harmonic;
        v -= t.amplitude * w * w * w * std::cos(w * y + t.phase);
    }
    return v;
}

double CircleMap::fourth_derivative(double y) const {
    double v = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.harmonic;
        v += t.amplitude * w * w * w * w * std::sin(w * y + t.phase);
    }
    return v;
}

double CircleMap::branch_inverse(double x, int branch) const {
    if (x < 0.0 || x >= 1.0)
        throw std::invalid_argument("branch_inverse: x must lie in [0,1)");
    if (branch < 0 || branch >= degree_)
        throw std::invalid_argument("branch_inverse: branch out of range");
    // Solve lift(y) = x + j on [0,1]; j enumerates the integers with
    // offset <= x + j < offset + D, one per branch.
    double j = std::ceil(offset_ - x);
    // guard the boundary case offset - x already integral
    if (j < offset_ - x) j += 1.0;
    double target = x + j + branch;

    if (is_linear()) return target / degree_;

    double lo = 0.0, hi = 1.0;
    double y = std::clamp((target - offset_) / degree_, lo, hi);
    for (int it = 0; it < 50; ++it) {
        double r = lift(y) - target;
        if (std::abs(r) <= branch_tol) return y;
        if (r > 0)
            hi = y;
        else
            lo = y;
        double step = r / derivative(y);
        double next = y - step;
        if (next <= lo || next >= hi) next = 0.5 * (lo + hi); // bisection fallback
        y = next;
    }
    if (std::abs(lift(y) - target) <= branch_tol) return y;
    throw std::runtime_error(
        "branch_inverse: no convergence in 50 steps (map ill-conditioned or not expanding)");
}

BranchEval CircleMap::eval_branches(double x) const {
    BranchEval out;
    out.value = forward(x);
    out.derivative = derivative(x);
    out.preimages.reserve(degree_);
    for (int b = 0; b < degree_; ++b) {
        double y = branch_inverse(x, b);
        out.preimages.push_back({y, derivative(y)});
    }
    return out;
}

Observable::Observable(std::vector<Term> terms) : terms_(std::move(terms)) {
    int max_m = 1;
    for (const auto& t : terms_) {
        if (t.harmonic < 0)
            throw std::invalid_argument("Observable: harmonics must be >= 0");
        max_m = std::max(max_m, t.harmonic);
    }
    // dense scan for the C1 data; the integrand is a trig polynomial so a
    // few thousand points per harmonic pin the extrema well below 1e-10
    std::size_t samples = static_cast<std::size_t>(512) * static_cast<std::size_t>(max_m);
    samples = std::max<std::size_t>(samples, 1024);
    for (std::size_t i = 0; i < samples; ++i) {
        double x = static_cast<double>(i) / static_cast<double>(samples);
        sup_abs_ = std::max(sup_abs_, std::abs((*this)(x)));
        sup_abs_deriv_ = std::max(sup_abs_deriv_, std::abs(derivative(x)));
    }
}

Observable Observable::constant(double value) {
    return Observable({{0, value, 0.0}});
}

double Observable::operator()(double x) const {
    double v = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.harmonic * x;
        v += t.cos_coeff * std::cos(w) + t.sin_coeff * std::sin(w);
    }
    return v;
}

double Observable::derivative(double x) const {
    double v = 0.0;
    for (const auto& t : terms_) {
        double w = two_pi * t.harmonic;
        v += -t.cos_coeff * w * std::sin(w * x) + t.sin_coeff * w * std::cos(w * x);
    }
    return v;
}

double Observable::mean() const {
    double v = 0.0;
    for (const auto& t : terms_)
        if (t.harmonic == 0) v += t.cos_coeff;
    return v;
}

namespace {

// One Newton step toward the zero of d/dy of the objective, guarded
// against vanishing curvature (linear maps).
double refine_extremum(double y0, double d1, double d2) {
    if (std::abs(d2) < 1e-9 * std::max(1.0, std::abs(d1))) return y0;
    double y = y0 - d1 / d2;
    double frac = y - std::floor(y);
    return frac;
}

} // namespace

ExpansionConstants expansion_constants(const std::vector<CircleMap>& family) {
    if (family.empty())
        throw std::invalid_argument("expansion_constants: empty family");
    double theta = std::numeric_limits<double>::infinity();
    double curvature = 0.0;
    const std::size_t grid = 8192;
    for (const auto& map : family) {
        double best_min = std::numeric_limits<double>::infinity();
        double y_min = 0.0;
        double best_max2 = 0.0;
        double y_max2 = 0.0;
        for (std::size_t i = 0; i < grid; ++i) {
            double y = static_cast<double>(i) / static_cast<double>(grid);
            double d1 = map.derivative(y);
            if (d1 < best_min) {
                best_min = d1;
                y_min = y;
            }
            double d2 = std::abs(map.second_derivative(y));
            if (d2 > best_max2) {
                best_max2 = d2;
                y_max2 = y;
            }
        }
        // extremum of f' sits where f'' vanishes
        double yr = refine_extremum(y_min, map.second_derivative(y_min),
                                    map.third_derivative(y_min));
        best_min = std::min(best_min, map.derivative(yr));
        // extremum of |f''| sits where f''' vanishes
        double ys = refine_extremum(y_max2, map.third_derivative(y_max2),
                                    map.fourth_derivative(y_max2));
        best_max2 = std::max(best_max2, std::abs(map.second_derivative(ys)));
        theta = std::min(theta, best_min);
        curvature = std::max(curvature, best_max2);
    }
    if (theta <= 1.0)
        throw std::invalid_argument(
            "expansion_constants: family is not uniformly expanding (theta <= 1)");
    return {theta, curvature};
}

int specification_gap(double eps, double expansion) {
    if (!(eps > 0.0) || !(eps <= 1.0))
        throw std::invalid_argument("specification_gap: eps must lie in (0,1]");
    if (!(expansion > 1.0))
        throw std::invalid_argument("specification_gap: expansion must exceed 1");
    int n = 0;
    double scale = eps;
    while (scale < 1.0) {
        scale *= expansion;
        ++n;
        if (n > 4096)
            throw std::runtime_error("specification_gap: runaway iteration");
    }
    return n;
}

IndexSequence IndexSequence::explicit_list(std::vector<std::size_t> indices) {
    if (indices.empty())
        throw std::invalid_argument("IndexSequence: explicit list must be non-empty");
    IndexSequence s;
    s.kind_ = Kind::Explicit;
    s.indices_ = std::move(indices);
    return s;
}

IndexSequence IndexSequence::periodic(std::vector<std::size_t> pattern) {
    if (pattern.empty())
        throw std::invalid_argument("IndexSequence: periodic pattern must be non-empty");
    IndexSequence s;
    s.kind_ = Kind::Periodic;
    s.indices_ = std::move(pattern);
    return s;
}

IndexSequence IndexSequence::iid(std::uint64_t seed) {
    IndexSequence s;
    s.kind_ = Kind::Iid;
    s.indices_.clear();
    s.seed_ = seed;
    return s;
}

std::size_t IndexSequence::at(std::size_t k, std::size_t family_size) const {
    if (family_size == 0)
        throw std::invalid_argument("IndexSequence: empty family");
    std::size_t idx = 0;
    switch (kind_) {
    case Kind::Explicit:
        if (k >= indices_.size())
            throw std::out_of_range("IndexSequence: position beyond explicit list");
        idx = indices_[k];
        break;
    case Kind::Periodic:
        idx = indices_[k % indices_.size()];
        break;
    case Kind::Iid:
        idx = static_cast<std::size_t>(
            RandomStream::mix(seed_ ^ RandomStream::mix(k + 1)) % family_size);
        break;
    }
    if (idx >= family_size)
        throw std::out_of_range("IndexSequence: index exceeds family size");
    return idx;
}

std::string IndexSequence::describe() const {
    switch (kind_) {
    case Kind::Explicit: return "explicit[" + std::to_string(indices_.size()) + "]";
    case Kind::Periodic: return "periodic[" + std::to_string(indices_.size()) + "]";
    case Kind::Iid: return "iid(seed=" + std::to_string(seed_) + ")";
    }
    return {};
}

} // namespace seqclt
