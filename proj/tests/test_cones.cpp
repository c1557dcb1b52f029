#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "seqclt/cones.hpp"
#include "seqclt/rng.hpp"

#include <cmath>
#include <numbers>

using namespace seqclt;

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;

GridFunction sample(std::size_t n, const std::function<double(double)>& f) {
    return GridFunction::sample_real(n, f);
}
} // namespace

TEST_CASE("membership margins") {
    ConeContext ctx(1.0 + 1e-9, 0.6, 256); // aperture just above the floor
    ConeContext unit(2.0, 0.6, 256);

    GridFunction one = GridFunction::constant(256, 1.0);
    auto m1 = membership_margin(one, unit);
    CHECK(m1.member);
    CHECK(m1.margin == doctest::Approx(2.0));

    // dense-grid minimization oracle for 1 + 0.05 sin at a = 1
    GridFunction ripple = sample(256, [](double x) { return 1.0 + 0.05 * std::sin(two_pi * x); });
    auto m2 = membership_margin(ripple, 1.0);
    double oracle = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 200000; ++i) {
        double x = i / 200000.0;
        double v = 1.0 + 0.05 * std::sin(two_pi * x) -
                   std::abs(0.05 * two_pi * std::cos(two_pi * x));
        oracle = std::min(oracle, v);
    }
    CHECK(m2.member);
    // the grid minimum sits at or above the dense minimum, and close to it
    CHECK(m2.margin >= oracle - 1e-12);
    CHECK(m2.margin <= oracle + 1e-3);

    GridFunction sine = sample(256, [](double x) { return std::sin(two_pi * x); });
    CHECK(!membership_margin(sine, unit).member);
}

TEST_CASE("cone norms") {
    ConeContext ctx(10.0, 0.55, 256);
    GridFunction one = GridFunction::constant(256, 1.0);
    CHECK(cone_norm(one, ctx) == doctest::Approx(1.0));

    GridFunction sine = sample(256, [](double x) { return std::sin(two_pi * x); });
    double closed_form = std::sqrt(1.0 + std::pow(two_pi / 10.0, 2));
    CHECK(std::abs(cone_norm(sine, ctx) - closed_form) < 1e-3);
    // grid maximization never exceeds the true supremum
    CHECK(cone_norm(sine, ctx) <= closed_form + 1e-12);

    // phase invariance of the complex norm
    GridFunction h = GridFunction::sample_complex(256, [](double x) {
        return Complex(1.0 + 0.2 * std::cos(two_pi * x), 0.3 * std::sin(two_pi * x));
    });
    double nh = cone_norm_complex(h, ctx);
    double nih = cone_norm_complex(h.scale(Complex(0.0, 1.0)), ctx);
    CHECK(nh == doctest::Approx(nih).epsilon(1e-12));
    // complex norm dominated by sqrt(2) times the pair norm
    GridFunction re = h.real_part(), im = h.imag_part();
    double pair = std::hypot(cone_norm(re, ctx), cone_norm(im, ctx));
    CHECK(cone_norm_complex(h, ctx) <= std::numbers::sqrt2 * pair + 1e-12);
}

TEST_CASE("hilbert distance: projectivity and oracle") {
    ConeContext ctx(5.0, 0.55, 256);
    GridFunction one = GridFunction::constant(256, 1.0);
    GridFunction g = sample(256, [](double x) { return 1.0 + 0.1 * std::sin(two_pi * x); });

    CHECK(hilbert_distance(one.scale(3.7), one, ctx) == doctest::Approx(0.0).epsilon(1e-12));
    double d = hilbert_distance(g, one, ctx);
    CHECK(hilbert_distance(g.scale(2.9), one, ctx) == doctest::Approx(d).epsilon(1e-12));
    CHECK(hilbert_distance(g, one.scale(0.4), ctx) == doctest::Approx(d).epsilon(1e-12));

    // dense functional-ratio sampling oracle
    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (int i = 0; i < 200000; ++i) {
        double x = i / 200000.0;
        double hv = 1.0 + 0.1 * std::sin(two_pi * x);
        double hd = 0.1 * two_pi * std::cos(two_pi * x);
        for (int v = -1; v <= 1; v += 2) {
            double r = (5.0 * hv - v * hd) / 5.0;
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
        }
    }
    // grid sampling bounds the dense sup-ratio from below, and is close
    CHECK(d <= std::log(rmax / rmin) + 1e-12);
    CHECK(d >= std::log(rmax / rmin) - 1e-3);

    GridFunction sine = sample(256, [](double x) { return std::sin(two_pi * x); });
    CHECK_THROWS_AS(hilbert_distance(sine, one, ctx), std::domain_error);
}

TEST_CASE("image diameter bound under one transfer step") {
    // d_H(L h, 1) <= 2a + ln((1+nu)/(1-nu)) for the image cone
    double a = 10.0, nu = 0.55;
    ConeContext ctx(a, nu, 256);
    auto engine = TransferEngine({CircleMap(2)}, 256);
    GridFunction one = GridFunction::constant(256, 1.0);
    double bound = 2.0 * a + std::log((1.0 + nu) / (1.0 - nu));
    for (std::uint64_t t = 0; t < 20; ++t) {
        GridFunction h = random_cone_element(a, 31, t).materialize(256);
        auto m_in = membership_margin(h, ctx);
        REQUIRE(m_in.member);
        GridFunction lh = engine.apply(0, h);
        auto m_out = membership_margin(lh, nu * a);
        CHECK(m_out.margin >= -1e-10);
        CHECK(hilbert_distance(lh, one, ctx) <= bound + 1e-6);
    }
}

TEST_CASE("mass lower bound on cone elements") {
    double a = 2.0;
    ConeContext ctx(a, 0.8, 256);
    for (std::uint64_t t = 0; t < 20; ++t) {
        GridFunction h = random_cone_element(a, 77, t).materialize(256);
        CHECK(h.integral_real() >= ctx.kappa() * cone_norm(h, ctx) - 1e-12);
    }
}

TEST_CASE("complex membership") {
    ConeContext ctx(3.0, 0.6, 256);
    GridFunction one = GridFunction::constant(256, 1.0);
    CHECK(complex_membership(one, ctx).member);

    GridFunction c = one.scale(Complex(0.3, -1.2));
    CHECK(complex_membership(c, ctx).member);

    GridFunction x = random_cone_element(3.0, 5, 0).materialize(256);
    GridFunction y = random_cone_element(3.0, 5, 1).materialize(256);
    GridFunction z = x + y.scale(Complex(0.0, 1.0));
    CHECK(complex_membership(z, ctx).member);

    GridFunction sine = sample(256, [](double x_) { return std::sin(two_pi * x_); });
    CHECK(!complex_membership(sine, ctx).member);
}

TEST_CASE("complex gauge: scale invariance and interior bound") {
    ConeContext ctx(3.0, 0.6, 256);
    GridFunction h = sample(256, [](double x) { return 1.0 + 0.2 * std::cos(two_pi * x); });
    GaugeResult same = complex_gauge(h, h, ctx);
    CHECK(!same.infinite);
    CHECK(same.value == doctest::Approx(0.0).epsilon(1e-12));

    GaugeResult scaled = complex_gauge(h, h.scale(Complex(2.0, 3.0)), ctx);
    CHECK(scaled.value == doctest::Approx(0.0).epsilon(1e-12));

    // interior bound: delta(e, e + z u) <= ln((1+|z| sqrt2 |u|)/(1-|z| sqrt2 |u|))
    GridFunction one = GridFunction::constant(256, 1.0);
    GridFunction u = sample(256, [](double x) { return 0.1 * std::sin(two_pi * x); });
    double nu_norm = cone_norm(u, ctx);
    for (double zr : {0.3, 0.7}) {
        Complex z(zr * 0.6, zr * 0.4);
        double zn = std::abs(z) * std::numbers::sqrt2 * nu_norm;
        REQUIRE(zn < 1.0);
        GridFunction g = one + u.scale(z);
        GaugeResult gr = complex_gauge(one, g, ctx);
        CHECK(!gr.infinite);
        CHECK(gr.value <= std::log((1.0 + zn) / (1.0 - zn)) + 1e-9);
    }
}

TEST_CASE("gauge flags a vanishing functional") {
    // direct use of the sampled kernel: second argument hits zero
    std::vector<Complex> on_h = {{1.0, 0.0}, {0.5, 0.2}};
    std::vector<Complex> on_g = {{0.0, 0.0}, {1.0, 0.0}};
    GaugeResult r = detail::sampled_gauge(on_h, on_g);
    CHECK(r.infinite);
}

TEST_CASE("norm comparison through the gauge (mass-normalized pairs)") {
    // |h - g| <= (sqrt2/kappa) delta(h,g) for mass-normalized members;
    // sampling under-estimates the gauge, so allow the documented slack
    // and escalate through a resolution doubling before failing.
    double a = 1.5;
    auto check_at = [&](std::size_t n, std::uint64_t t, double& viol) {
        ConeContext ctx(a, 0.8, n);
        GridFunction x1 = random_cone_element(a, 123, 2 * t).materialize(n);
        GridFunction y1 = random_cone_element(a, 123, 2 * t + 1).materialize(n);
        GridFunction h = x1 + y1.scale(Complex(0.0, 0.35));
        GridFunction g0 = random_cone_element(a, 321, t).materialize(n);
        h = h.scale(1.0 / h.integral());
        GridFunction g = g0.scale(1.0 / g0.integral());
        GaugeResult d = complex_gauge(h, g, ctx);
        REQUIRE(!d.infinite);
        double lhs = cone_norm_complex(h - g, ctx);
        double rhs = std::numbers::sqrt2 / ctx.kappa() * d.value +
                     1e-6 * cone_norm_complex(h, ctx);
        viol = lhs - rhs;
        return lhs <= rhs;
    };
    for (std::uint64_t t = 0; t < 10; ++t) {
        double v1 = 0.0, v2 = 0.0;
        bool ok = check_at(256, t, v1);
        if (!ok) ok = check_at(512, t, v2); // resolution escalation
        CHECK(ok);
    }
}

TEST_CASE("contraction report on the doubling map") {
    double a = 10.0, nu = 0.55;
    std::size_t n = 256;
    ConeContext ctx(a, nu, n);
    auto engine = std::make_shared<TransferEngine>(
        std::vector<CircleMap>{CircleMap(2)}, n);
    SequenceSpec seq;
    seq.map_family = engine->family();
    seq.obs_family = {Observable({{1, 1.0, 0.0}})};
    seq.omega_f = IndexSequence::periodic({0});
    seq.omega_g = IndexSequence::periodic({0});
    OperatorChainSpec chain{&seq, 0, 0, std::nullopt};
    GridFunction ghat = sample(n, [](double x) { return std::cos(two_pi * x); });

    ContractionReport rep = contraction_report(*engine, chain, ctx, 20, 2024, ghat,
                                               {1e-3, 1e-2, 1e-1});
    CHECK(rep.delta_real > 0.0);
    CHECK(rep.delta_complex > 0.0);
    CHECK(rep.ratio_max <= rep.tanh_bound + 0.05);
    CHECK(rep.contraction_ok);
    CHECK(rep.diam_rel_ok);

    // twist at t = 0 produces no perturbation at all
    ContractionReport rep0 = contraction_report(*engine, chain, ctx, 4, 2024, ghat, {0.0});
    CHECK(rep0.eps_t[0] == 0.0);

    // eps_t is linear in t: constant ratio within 10 percent
    double r0 = rep.eps_t[0] / 1e-3;
    double r1 = rep.eps_t[1] / 1e-2;
    double r2 = rep.eps_t[2] / 1e-1;
    CHECK(std::abs(r1 - r0) <= 0.1 * r0);
    CHECK(std::abs(r2 - r0) <= 0.1 * r0);
}

TEST_CASE("degenerate identical pair is skipped") {
    double a = 5.0;
    std::size_t n = 128;
    ConeContext ctx(a, 0.6, n);
    auto engine = std::make_shared<TransferEngine>(
        std::vector<CircleMap>{CircleMap(2)}, n);
    SequenceSpec seq;
    seq.map_family = engine->family();
    seq.obs_family = {Observable({{1, 1.0, 0.0}})};
    seq.omega_f = IndexSequence::periodic({0});
    seq.omega_g = IndexSequence::periodic({0});
    OperatorChainSpec chain{&seq, 0, 0, std::nullopt};
    GridFunction h = random_cone_element(a, 7, 0).materialize(n);
    auto st = detail::gauge_pair_stats(*engine, chain, ctx, {h, h});
    CHECK(st.skipped == 1);
    CHECK(st.table.empty());
    CHECK(st.ratio_max == 0.0);
}

TEST_CASE("cone mapping holds for every family map") {
    // images land in the nu*a cone with margin for both the doubling map
    // and a curved perturbation (a above the curvature requirement)
    std::vector<CircleMap> family = {CircleMap(2), CircleMap(2, {{1, 0.05, 0.0}})};
    auto engine = TransferEngine(family, 256);
    double nu = 0.7, a = 10.0;
    for (std::size_t m = 0; m < family.size(); ++m) {
        for (std::uint64_t t = 0; t < 10; ++t) {
            GridFunction h = random_cone_element(a, 61, t).materialize(256);
            GridFunction lh = engine.apply(m, h);
            CHECK(membership_margin(lh, nu * a).margin >= -1e-10);
        }
    }
}
