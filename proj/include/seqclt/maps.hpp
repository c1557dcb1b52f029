#ifndef SEQCLT_MAPS_HPP
#define SEQCLT_MAPS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace seqclt {

// One term of a trigonometric perturbation / polynomial.
struct FourierTerm {
    int harmonic = 0;
    double cos_coeff = 0.0; // maps: unused; observables: coefficient of cos
    double sin_coeff = 0.0; // maps: amplitude of sin(2 pi m x + phase)
    double phase = 0.0;     // maps only
};

struct BranchPoint {
    double preimage;   // y with f(y) = x, one per branch, increasing in y
    double derivative; // f'(y)
};

struct BranchEval {
    double value;      // f(x)
    double derivative; // f'(x)
    std::vector<BranchPoint> preimages;
};

// Full-branch uniformly expanding map of the circle,
//   f(x) = D x + sum_m eps_m sin(2 pi m x + phi_m)  (mod 1),
// with sum_m 2 pi m |eps_m| < D - 1 so that f' >= theta > 1 everywhere.
class CircleMap {
public:
    struct Term {
        int harmonic;
        double amplitude;
        double phase;
    };

    explicit CircleMap(int degree, std::vector<Term> terms = {});

    int degree() const { return degree_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_linear() const { return terms_.empty(); }

    double forward(double x) const;     // f(x) in [0,1)
    double lift(double y) const;        // D y + perturbation, no mod
    double derivative(double y) const;  // f'(y) > 1
    double second_derivative(double y) const;
    double third_derivative(double y) const;
    double fourth_derivative(double y) const;

    // Guaranteed lower bound on f' from the amplitude budget.
    double expansion_floor() const { return expansion_floor_; }

    // Preimage of x under branch b (0-based, preimages ordered in [0,1)).
    // Newton from the linear-map seed with a bisection-safeguarded bracket;
    // throws if 50 iterations do not reach 1e-12 residual.
    double branch_inverse(double x, int branch) const;

    BranchEval eval_branches(double x) const;

private:
    int degree_;
    std::vector<Term> terms_;
    double offset_;          // lift value at 0
    double expansion_floor_;
};

// Trigonometric polynomial observable
//   g(x) = sum_m c_m cos(2 pi m x) + s_m sin(2 pi m x),
// harmonic 0 contributes the constant c_0.
class Observable {
public:
    struct Term {
        int harmonic;
        double cos_coeff;
        double sin_coeff;
    };

    Observable() = default;
    explicit Observable(std::vector<Term> terms);

    static Observable constant(double value);

    const std::vector<Term>& terms() const { return terms_; }

    double operator()(double x) const;
    double derivative(double x) const;
    double mean() const; // exact integral over the circle

    double sup_norm() const { return sup_abs_; }
    double derivative_sup_norm() const { return sup_abs_deriv_; }
    double c1_norm() const { return sup_abs_ + sup_abs_deriv_; }

private:
    std::vector<Term> terms_;
    double sup_abs_ = 0.0;
    double sup_abs_deriv_ = 0.0;
};

struct ExpansionConstants {
    double min_expansion;  // uniform lower bound theta on f'
    double max_curvature;  // uniform upper bound A on |f''|
};

// Grid extremization refined by one Newton step on the extremizer.
ExpansionConstants expansion_constants(const std::vector<CircleMap>& family);

// Smallest n with eps * expansion^n >= 1 (diameter normalized to 1).
int specification_gap(double eps, double expansion);

// Index sequence into a finite family: explicit list, periodic pattern, or
// seeded i.i.d. uniform draws (counter-based, random access).
class IndexSequence {
public:
    static IndexSequence explicit_list(std::vector<std::size_t> indices);
    static IndexSequence periodic(std::vector<std::size_t> pattern);
    static IndexSequence iid(std::uint64_t seed);

    // Index at position k; family_size bounds the result and validates
    // stored indices.
    std::size_t at(std::size_t k, std::size_t family_size) const;

    std::string describe() const;

private:
    enum class Kind { Explicit, Periodic, Iid } kind_ = Kind::Periodic;
    std::vector<std::size_t> indices_{0};
    std::uint64_t seed_ = 0;
};

struct SequenceSpec {
    std::vector<CircleMap> map_family;
    std::vector<Observable> obs_family;
    IndexSequence omega_f;
    IndexSequence omega_g;
    Observable rho = Observable::constant(1.0);

    const CircleMap& map_at(std::size_t k) const {
        return map_family[omega_f.at(k, map_family.size())];
    }
    const Observable& obs_at(std::size_t k) const {
        return obs_family[omega_g.at(k, obs_family.size())];
    }
    std::size_t map_index_at(std::size_t k) const {
        return omega_f.at(k, map_family.size());
    }
};

} // namespace seqclt

#endif
