#include "seqclt/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace seqclt {

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

const std::vector<Complex>& twiddles(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::vector<Complex>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    std::vector<Complex> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k)
        w[k] = std::polar(1.0, -two_pi * static_cast<double>(k) / static_cast<double>(n));
    return cache.emplace(n, std::move(w)).first->second;
}
} // namespace

namespace detail {

void fft(std::vector<Complex>& a, bool inverse) {
    const std::size_t n = a.size();
    if (!is_power_of_two(n)) throw std::invalid_argument("fft: size must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& w = twiddles(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                Complex tw = w[k * stride];
                if (inverse) tw = std::conj(tw);
                Complex u = a[i + k];
                Complex v = a[i + k + len / 2] * tw;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
            }
        }
    }
    if (inverse) {
        double inv = 1.0 / static_cast<double>(n);
        for (auto& z : a) z *= inv;
    }
}

} // namespace detail

struct GridFunction::Payload {
    std::vector<Complex> samples;
    bool real = false;
    mutable std::once_flag coeff_once;
    mutable std::vector<Complex> coeffs;
};

GridFunction GridFunction::make(std::vector<Complex> samples, bool real) {
    if (!is_power_of_two(samples.size()))
        throw std::invalid_argument("GridFunction: grid size must be a power of two");
    for (const auto& z : samples)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw std::invalid_argument("GridFunction: samples must be finite");
    auto p = std::make_shared<Payload>();
    p->samples = std::move(samples);
    p->real = real;
    if (real)
        for (auto& z : p->samples) z = Complex(z.real(), 0.0);
    return GridFunction(std::move(p));
}

GridFunction GridFunction::from_real(std::vector<double> samples) {
    std::vector<Complex> v(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) v[i] = Complex(samples[i], 0.0);
    return make(std::move(v), true);
}

GridFunction GridFunction::from_complex(std::vector<Complex> samples) {
    bool real = std::all_of(samples.begin(), samples.end(),
                            [](const Complex& z) { return z.imag() == 0.0; });
    return make(std::move(samples), real);
}

GridFunction GridFunction::constant(std::size_t n, double value) {
    return make(std::vector<Complex>(n, Complex(value, 0.0)), true);
}

GridFunction GridFunction::sample_real(std::size_t n, const std::function<double(double)>& f) {
    std::vector<Complex> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = Complex(f(static_cast<double>(i) / static_cast<double>(n)), 0.0);
    return make(std::move(v), true);
}

GridFunction GridFunction::sample_complex(std::size_t n, const std::function<Complex(double)>& f) {
    std::vector<Complex> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = f(static_cast<double>(i) / static_cast<double>(n));
    return from_complex(std::move(v));
}

std::size_t GridFunction::size() const { return payload_ ? payload_->samples.size() : 0; }

bool GridFunction::is_real() const { return payload_ && payload_->real; }

const std::vector<Complex>& GridFunction::values() const {
    if (!payload_) throw std::logic_error("GridFunction: empty handle");
    return payload_->samples;
}

const std::vector<Complex>& GridFunction::coefficients() const {
    if (!payload_) throw std::logic_error("GridFunction: empty handle");
    std::call_once(payload_->coeff_once, [this] {
        std::vector<Complex> c = payload_->samples;
        detail::fft(c, false);
        double inv = 1.0 / static_cast<double>(c.size());
        for (auto& z : c) z *= inv;
        payload_->coeffs = std::move(c);
    });
    return payload_->coeffs;
}

Complex GridFunction::interpolate(double x) const {
    const auto& c = coefficients();
    const std::size_t n = c.size();
    const Complex z = std::polar(1.0, two_pi * x);
    Complex zk(1.0, 0.0);
    Complex acc = c[0];
    for (std::size_t k = 1; k < n / 2; ++k) {
        zk *= z;
        acc += c[k] * zk + c[n - k] * std::conj(zk);
    }
    acc += c[n / 2] * std::cos(std::numbers::pi * static_cast<double>(n) * x);
    return acc;
}

double GridFunction::interpolate_real(double x) const { return interpolate(x).real(); }

GridFunction GridFunction::derivative() const {
    const auto& c = coefficients();
    const std::size_t n = c.size();
    std::vector<Complex> d(n);
    d[0] = 0.0;
    for (std::size_t k = 1; k < n / 2; ++k) {
        Complex iw(0.0, two_pi * static_cast<double>(k));
        d[k] = c[k] * iw;
        d[n - k] = c[n - k] * (-iw);
    }
    d[n / 2] = 0.0; // Nyquist mode differentiates to zero under the cos convention
    detail::fft(d, true);
    // coefficients carry the 1/n normalization already; undo the inverse
    // transform's duplicate factor
    for (auto& z : d) z *= static_cast<double>(n);
    if (is_real()) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = d[i].real();
        return from_real(std::move(r));
    }
    return from_complex(std::move(d));
}

Complex GridFunction::integral() const {
    const auto& v = values();
    Complex acc = 0.0;
    for (const auto& z : v) acc += z;
    return acc / static_cast<double>(v.size());
}

GridFunction GridFunction::real_part() const {
    const auto& v = values();
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
    return from_real(std::move(r));
}

GridFunction GridFunction::imag_part() const {
    const auto& v = values();
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[i] = v[i].imag();
    return from_real(std::move(r));
}

namespace {
void require_same_grid(const GridFunction& a, const GridFunction& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("GridFunction: mismatched grids");
}
} // namespace

GridFunction GridFunction::operator+(const GridFunction& o) const {
    require_same_grid(*this, o);
    std::vector<Complex> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = values()[i] + o.values()[i];
    return make(std::move(v), is_real() && o.is_real());
}

GridFunction GridFunction::operator-(const GridFunction& o) const {
    require_same_grid(*this, o);
    std::vector<Complex> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = values()[i] - o.values()[i];
    return make(std::move(v), is_real() && o.is_real());
}

GridFunction GridFunction::multiply(const GridFunction& o) const {
    require_same_grid(*this, o);
    std::vector<Complex> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = values()[i] * o.values()[i];
    return make(std::move(v), is_real() && o.is_real());
}

GridFunction GridFunction::scale(Complex z) const {
    std::vector<Complex> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = values()[i] * z;
    return make(std::move(v), is_real() && z.imag() == 0.0);
}

GridFunction GridFunction::scale(double s) const { return scale(Complex(s, 0.0)); }

GridFunction GridFunction::shift(double c) const {
    std::vector<Complex> v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = values()[i] + c;
    return make(std::move(v), is_real());
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (const auto& z : values()) m = std::max(m, std::abs(z));
    return m;
}

double GridFunction::tail_fraction() const {
    const auto& c = coefficients();
    const std::size_t n = c.size();
    double peak = 0.0;
    for (const auto& z : c) peak = std::max(peak, std::abs(z));
    if (peak == 0.0) return 0.0;
    double tail = 0.0;
    const std::size_t half = n / 2;
    const std::size_t cut = half - half / 8; // top eighth of |mode|
    for (std::size_t k = cut; k <= half; ++k) {
        tail = std::max(tail, std::abs(c[k]));
        if (k != 0 && k != half) tail = std::max(tail, std::abs(c[n - k]));
    }
    return tail / peak;
}

} // namespace seqclt
