#ifndef SEQCLT_GRID_FUNCTION_HPP
#define SEQCLT_GRID_FUNCTION_HPP

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace seqclt {

using Complex = std::complex<double>;

// Function sampled on the uniform grid x_i = i/N of the circle, N a power
// of two. Immutable after construction; copies share the payload.
// Trigonometric coefficients are computed lazily (thread-safe) and cached.
//
// Coefficient layout is the usual FFT order: slot k holds mode k for
// k < N/2 and mode k-N for k > N/2; the Nyquist slot N/2 is interpreted
// as cos(pi N x) so real samples round-trip through a real interpolant.
class GridFunction {
public:
    GridFunction() = default;

    static GridFunction from_real(std::vector<double> samples);
    static GridFunction from_complex(std::vector<Complex> samples);
    static GridFunction constant(std::size_t n, double value);
    static GridFunction sample_real(std::size_t n, const std::function<double(double)>& f);
    static GridFunction sample_complex(std::size_t n, const std::function<Complex(double)>& f);

    bool empty() const { return !payload_; }
    std::size_t size() const;
    bool is_real() const;

    const std::vector<Complex>& values() const;
    const std::vector<Complex>& coefficients() const;

    double real_at(std::size_t i) const { return values()[i].real(); }
    Complex at(std::size_t i) const { return values()[i]; }
    double grid_point(std::size_t i) const {
        return static_cast<double>(i) / static_cast<double>(size());
    }

    // Trigonometric interpolant at an arbitrary point (exact on
    // band-limited data).
    Complex interpolate(double x) const;
    double interpolate_real(double x) const;

    GridFunction derivative() const;
    Complex integral() const; // mean of samples = mode-0 coefficient
    double integral_real() const { return integral().real(); }

    GridFunction real_part() const;
    GridFunction imag_part() const;

    // sample-wise algebra; real tags propagate
    GridFunction operator+(const GridFunction& o) const;
    GridFunction operator-(const GridFunction& o) const;
    GridFunction multiply(const GridFunction& o) const;
    GridFunction scale(Complex z) const;
    GridFunction scale(double s) const;
    GridFunction shift(double c) const; // add a constant

    double max_abs() const;
    // Largest coefficient magnitude in the top eighth of the spectrum,
    // relative to the overall peak; the resolution diagnostic.
    double tail_fraction() const;

private:
    struct Payload;
    std::shared_ptr<const Payload> payload_;
    explicit GridFunction(std::shared_ptr<const Payload> p) : payload_(std::move(p)) {}
    static GridFunction make(std::vector<Complex> samples, bool real);
};

namespace detail {
// In-place radix-2 FFT, forward sign e^{-2 pi i jk/N}; inverse divides by N.
void fft(std::vector<Complex>& data, bool inverse);
} // namespace detail

} // namespace seqclt

#endif
