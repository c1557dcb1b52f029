#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "seqclt/growth.hpp"
#include "seqclt/util.hpp"

#include <cmath>
#include <memory>
#include <numbers>

using namespace seqclt;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

std::shared_ptr<TransferEngine> make_engine(std::vector<CircleMap> maps,
                                            std::size_t grid = 256) {
    return std::make_shared<TransferEngine>(std::move(maps), grid);
}

SequenceSpec doubling_cos_seq(const std::shared_ptr<TransferEngine>& engine) {
    SequenceSpec seq;
    seq.map_family = engine->family();
    seq.obs_family = {Observable({{1, 1.0, 0.0}})};
    seq.omega_f = IndexSequence::periodic({0});
    seq.omega_g = IndexSequence::periodic({0});
    return seq;
}

GridFunction sample(std::size_t n, const std::function<double(double)>& f) {
    return GridFunction::sample_real(n, f);
}

} // namespace

TEST_CASE("truncated centers") {
    auto engine = make_engine({CircleMap(2)});
    SequenceSpec seq = doubling_cos_seq(engine);
    for (std::size_t s : {0ul, 1ul, 4ul, 16ul})
        for (std::size_t k : {0ul, 3ul, 9ul})
            CHECK(std::abs(truncated_center(*engine, seq, s, k)) < 1e-13);

    // constant observable: gamma = its value for every window
    SequenceSpec cseq = seq;
    cseq.obs_family = {Observable::constant(0.4)};
    CHECK(truncated_center(*engine, cseq, 5, 7) == doctest::Approx(0.4));

    // S = 0: empty product, gamma = int g
    SequenceSpec sseq = seq;
    sseq.obs_family = {Observable({{0, 0.25, 0.0}, {1, 1.0, 0.0}})};
    CHECK(truncated_center(*engine, sseq, 0, 3) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("truncated centers decay geometrically on a perturbed map") {
    auto engine = make_engine({CircleMap(2, {{1, 0.05, 0.3}})});
    SequenceSpec seq = doubling_cos_seq(engine);
    seq.obs_family = {Observable({{1, 0.7, 0.2}, {2, 0.3, 0.0}})};
    CenteredSequence cs = center_sequence(engine, seq, 40);
    std::size_t k = 32;
    double ck = cs.centers[k];
    std::vector<double> xs, ys;
    for (std::size_t s : {2ul, 4ul, 6ul, 8ul, 10ul, 12ul}) {
        double gap = std::abs(truncated_center(*engine, seq, s, k) - ck);
        if (gap > 1e-14) {
            xs.push_back(static_cast<double>(s));
            ys.push_back(std::log(gap));
        }
    }
    REQUIRE(xs.size() >= 3);
    LineFit fit = fit_line(xs, ys);
    CHECK(std::exp(fit.slope) < 1.0);
}

TEST_CASE("growth criterion: doubling + cos passes at the fixed point") {
    auto engine = make_engine({CircleMap(2)});
    std::vector<Observable> obs = {Observable({{1, 1.0, 0.0}})};
    PropVarianceMode pm;
    pm.a = 0.5;
    GrowthReport rep = growth_criterion(*engine, obs, 96, pm, 4096);
    CHECK(rep.pass);
    CHECK(rep.ledger.eps_ok);
    CHECK(rep.ledger.l_ok);
    CHECK(rep.sequences_checked == 1);
    CHECK(rep.worst.best_sum >= 96.0 - 1e-9); // x = 0 realizes the full sum
    CHECK(rep.worst.x_best == doctest::Approx(0.0));
    CHECK(rep.ledger.d_f == specification_gap(rep.ledger.eps, 2.0));
}

TEST_CASE("growth criterion: -cos needs a non-fixed-point witness") {
    auto engine = make_engine({CircleMap(2)});
    std::vector<Observable> obs = {Observable({{1, -1.0, 0.0}})};
    PropVarianceMode pm;
    pm.a = 0.3;
    GrowthReport rep = growth_criterion(*engine, obs, 8, pm, 4096);
    // at x = 0 the sum is -8; the maximizer must find a positive point
    CHECK(rep.worst.best_sum > 0.3 * 8 - 1e-9);
    CHECK(rep.worst.x_best != doctest::Approx(0.0));
}

TEST_CASE("growth criterion: two-map family at L = 8") {
    auto engine = make_engine({CircleMap(2), CircleMap(3)});
    std::vector<Observable> obs = {Observable({{1, 1.0, 0.0}})};
    PropVarianceMode pm;
    pm.a = 0.5;
    GrowthReport rep = growth_criterion(*engine, obs, 8, pm, 2048);
    CHECK(rep.sequences_checked == 512); // (2*1)^9
    CHECK(rep.pass == rep.ledger.l_ok); // Birkhoff part passes at x = 0
    CHECK(rep.worst.best_sum >= 0.5 * 8 - 1e-9);

    // cor_verify mode drives the threshold from 2 kappa ln L
    CorVerifyMode cm;
    cm.kappa = 1.0;
    cm.b = 2.0;
    GrowthReport rep2 = growth_criterion(*engine, obs, 8, cm, 2048);
    CHECK(rep2.ledger.threshold == doctest::Approx(2.0 * std::log(8.0)));
    CHECK(rep2.pass);
}

TEST_CASE("growth criterion: infeasible enumeration is refused") {
    auto engine = make_engine({CircleMap(2), CircleMap(3)});
    std::vector<Observable> obs = {Observable({{1, 1.0, 0.0}}),
                                   Observable({{1, 0.0, 1.0}})};
    PropVarianceMode pm;
    CHECK_THROWS_WITH_AS(growth_criterion(*engine, obs, 12, pm, 64),
                         doctest::Contains("infeasible"), std::invalid_argument);
    // sampled mode with declared coverage instead
    GrowthReport rep = growth_criterion(*engine, obs, 12, pm, 64, false, 50, 9);
    CHECK(rep.sequences_checked == 50);
    CHECK(rep.coverage < 1e-3);
}

TEST_CASE("martingale decomposition: doubling + cos") {
    auto engine = make_engine({CircleMap(2)});
    SequenceSpec seq = doubling_cos_seq(engine);
    CenteredSequence cs = center_sequence(engine, seq, 64);
    MartingaleResult mr = martingale_decomposition(cs, 64);
    // phi vanishes since L cos = 0, so Y_k = ghat_k and sigma2 = n/2
    for (std::size_t k = 0; k <= 64; k += 16) CHECK(mr.phi[k].max_abs() < 1e-12);
    CHECK(mr.max_orthogonality_residual < 1e-10);
    CHECK(mr.sigma2 == doctest::Approx(32.0).epsilon(1e-12));
}

TEST_CASE("martingale decomposition: zero observable") {
    auto engine = make_engine({CircleMap(2)});
    SequenceSpec seq = doubling_cos_seq(engine);
    seq.obs_family = {Observable({{1, 0.0, 0.0}})};
    CenteredSequence cs = center_sequence(engine, seq, 8);
    MartingaleResult mr = martingale_decomposition(cs, 8);
    CHECK(mr.sigma2 == doctest::Approx(0.0));
    for (const auto& y : mr.y) CHECK(y.max_abs() < 1e-13);
}

TEST_CASE("martingale decomposition: coboundary stays bounded") {
    auto engine = make_engine({CircleMap(2)});
    SequenceSpec seq = doubling_cos_seq(engine);
    // g = psi - psi o f with psi = sin(2 pi x): harmonic 1 minus harmonic 2
    seq.obs_family = {Observable({{1, 0.0, 1.0}, {2, 0.0, -1.0}})};
    CenteredSequence cs = center_sequence(engine, seq, 200);
    double prev = 0.0;
    for (std::size_t n : {50ul, 100ul, 200ul}) {
        MartingaleResult mr = martingale_decomposition(cs, n);
        CHECK(mr.max_orthogonality_residual < 1e-10);
        CHECK(std::abs(mr.sigma2) < 4.0); // no growth
        prev = mr.sigma2;
    }
    (void)prev;
}

TEST_CASE("martingale sigma2 agrees with the operator variance") {
    auto engine = make_engine({CircleMap(2, {{1, 0.05, 0.3}})});
    SequenceSpec seq = doubling_cos_seq(engine);
    seq.obs_family = {Observable({{1, 0.9, 0.2}, {3, 0.2, 0.0}})};
    CenteredSequence cs = center_sequence(engine, seq, 512);
    std::vector<double> xs, ys;
    for (std::size_t n : {16ul, 32ul, 64ul, 128ul, 256ul, 512ul}) {
        double s_full = variance(cs, n, VarianceMode::Full).sigma2;
        double s_mart = martingale_decomposition(cs, n).sigma2;
        xs.push_back(static_cast<double>(n));
        ys.push_back(s_mart - s_full);
    }
    LineFit fit = fit_line(xs, ys);
    // the gap is O(1): no linear trend within two standard errors
    CHECK(std::abs(fit.slope) <= 2.0 * fit.slope_stderr + 1e-9);
}

TEST_CASE("coboundary solver round trip") {
    auto engine = make_engine({CircleMap(2)});
    // g = sin(2 pi x) - sin(4 pi x) = psi - psi o f, psi = sin(2 pi x)
    GridFunction g = sample(256, [](double x) {
        return std::sin(two_pi * x) - std::sin(2.0 * two_pi * x);
    });
    CoboundaryReport rep = coboundary_solve(*engine, {g}, 60);
    CHECK(rep.verdict == CoboundaryVerdict::Coboundary);
    CHECK(rep.max_residual <= 1e-8);
    CHECK(rep.cross_consistency == doctest::Approx(0.0));
    // solution matches sin(2 pi x)
    GridFunction psi_expected = sample(256, [](double x) { return std::sin(two_pi * x); });
    CHECK((rep.psi[0] - psi_expected).max_abs() < 1e-10);
}

TEST_CASE("coboundary solver rejects cos") {
    auto engine = make_engine({CircleMap(2)});
    GridFunction g = sample(256, [](double x) { return std::cos(two_pi * x); });
    CoboundaryReport rep = coboundary_solve(*engine, {g}, 60);
    CHECK(rep.verdict == CoboundaryVerdict::NotCoboundary);
    CHECK(rep.max_residual >= 0.5);

    GridFunction zero = GridFunction::constant(256, 0.0);
    CoboundaryReport rz = coboundary_solve(*engine, {zero}, 10);
    CHECK(rz.max_residual == doctest::Approx(0.0));
    CHECK(rz.verdict == CoboundaryVerdict::Coboundary);
}

TEST_CASE("coboundary solver flags a non-converged series") {
    auto engine = make_engine({CircleMap(2)});
    // harmonic 64 survives six halvings at full amplitude: at M = 5 the
    // tail is as large as the first term
    GridFunction g = sample(256, [](double x) { return std::cos(64.0 * two_pi * x); });
    CoboundaryReport rep = coboundary_solve(*engine, {g}, 5);
    CHECK(rep.verdict == CoboundaryVerdict::Inconclusive);
}

TEST_CASE("coboundary solver wants zero mean") {
    auto engine = make_engine({CircleMap(2)});
    GridFunction g = GridFunction::constant(256, 0.3);
    CHECK_THROWS(coboundary_solve(*engine, {g}, 10));
}

TEST_CASE("random dichotomy: cos over {2x, 3x} is linear") {
    auto engine = make_engine({CircleMap(2), CircleMap(3)});
    // both transfer operators annihilate cos (roots-of-unity sums)
    GridFunction c2 = engine->apply(0, sample(256, [](double x) { return std::cos(two_pi * x); }));
    GridFunction c3 = engine->apply(1, sample(256, [](double x) { return std::cos(two_pi * x); }));
    CHECK(c2.max_abs() < 1e-12);
    CHECK(c3.max_abs() < 1e-12);

    GridFunction g = sample(256, [](double x) { return std::cos(two_pi * x); });
    RandomDichotomyReport rep = random_dichotomy(engine, {g, g}, 6, 100, 42);
    CHECK(rep.classification == RandomClassification::Linear);
    CHECK(!rep.conflict);
    for (double v : rep.sigma2_over_n) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rep.beta_mean == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("random dichotomy: shared coboundary is bounded") {
    auto engine = make_engine({CircleMap(2), CircleMap(3)});
    // g_a = psi - psi o f_a with shared psi = sin(2 pi x)
    GridFunction g2 = sample(256, [](double x) {
        return std::sin(two_pi * x) - std::sin(2.0 * two_pi * x);
    });
    GridFunction g3 = sample(256, [](double x) {
        return std::sin(two_pi * x) - std::sin(3.0 * two_pi * x);
    });
    RandomDichotomyReport rep = random_dichotomy(engine, {g2, g3}, 6, 100, 42);
    CHECK(rep.classification == RandomClassification::Bounded);
    CHECK(!rep.conflict);
    CHECK(rep.coboundary.verdict == CoboundaryVerdict::Coboundary);
    CHECK(rep.coboundary.cross_consistency <= 1e-6);
    // telescoping bound: sigma_n^2 <= 4 sup psi^2 + o(1)
    for (double v : rep.sigma2_over_n) CHECK(v * 100 <= 4.0 + 0.5);
}

TEST_CASE("random dichotomy: single-map family converges to beta") {
    auto engine = make_engine({CircleMap(2)});
    GridFunction g = sample(256, [](double x) { return std::cos(two_pi * x); });
    RandomDichotomyReport rep = random_dichotomy(engine, {g}, 3, 64, 7);
    for (std::size_t t = 0; t < rep.beta.size(); ++t)
        CHECK(rep.beta[t] == doctest::Approx(rep.beta_mean));
    for (double v : rep.sigma2_over_n)
        CHECK(v == doctest::Approx(rep.beta_mean).epsilon(1e-6));
}

TEST_CASE("coboundary residual decreases with the series length") {
    // infinite-spectrum psi so the Neumann tail shrinks gradually; the
    // doubling map keeps Lebesgue invariant, hence g has zero mean
    CircleMap f(2);
    auto engine = make_engine({f});
    auto psi = [](double x) { return 0.3 / (1.35 - std::cos(two_pi * x)); };
    GridFunction g = sample(256, [&](double x) { return psi(x) - psi(f.forward(x)); });
    g = g.shift(-g.integral_real()); // remove the ~1e-15 quadrature remnant
    double prev = 1e300;
    for (std::size_t m : {5ul, 15ul, 40ul}) {
        CoboundaryReport rep = coboundary_solve(*engine, {g}, m);
        CHECK(rep.max_residual <= prev + 1e-12);
        prev = rep.max_residual;
    }
    CoboundaryReport fin = coboundary_solve(*engine, {g}, 60);
    CHECK(fin.verdict == CoboundaryVerdict::Coboundary);
}
