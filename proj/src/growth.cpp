#include "seqclt/growth.hpp"

#include "seqclt/rng.hpp"
#include "seqclt/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace seqclt {

double truncated_center(const TransferEngine& engine, const SequenceSpec& seq,
                        std::size_t s_window, std::size_t k) {
    const std::size_t grid = engine.grid();
    GridFunction u = GridFunction::constant(grid, 1.0);
    std::size_t start = k > s_window ? k - s_window : 0;
    for (std::size_t j = start; j < k; ++j)
        u = engine.apply(seq.map_index_at(j), u);
    const Observable& g = seq.obs_at(k);
    GridFunction gk = GridFunction::sample_real(grid, [&g](double x) { return g(x); });
    return gk.multiply(u).integral_real();
}

namespace {

// center of obs `g_idx` after pushing 1 through the map window (memoized;
// the window is short, so keys stay tiny)
class WindowCenterCache {
public:
    WindowCenterCache(const TransferEngine& engine,
                      const std::vector<Observable>& obs_family)
        : engine_(engine), obs_(obs_family) {}

    double center(const std::vector<std::size_t>& map_window, std::size_t g_idx) {
        std::vector<std::size_t> key = map_window;
        key.push_back(g_idx + 1000000);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        GridFunction u = GridFunction::constant(engine_.grid(), 1.0);
        for (std::size_t m : map_window) u = engine_.apply(m, u);
        const Observable& g = obs_[g_idx];
        GridFunction gk =
            GridFunction::sample_real(engine_.grid(), [&g](double x) { return g(x); });
        double c = gk.multiply(u).integral_real();
        cache_.emplace(std::move(key), c);
        return c;
    }

private:
    const TransferEngine& engine_;
    const std::vector<Observable>& obs_;
    std::map<std::vector<std::size_t>, double> cache_;
};

struct BlockEval {
    double best_sum;
    double x_best;
};

// Birkhoff sum over the block from starting point x:
//   sum_{i=1}^{L} (g_{w2_i} - center_i)(f_{w1_{i-1}} o ... o f_{w1_0} x).
BlockEval maximize_block(const TransferEngine& engine,
                         const std::vector<Observable>& obs_family,
                         const std::vector<std::size_t>& omega_f,
                         const std::vector<std::size_t>& omega_g,
                         const std::vector<double>& centers, std::size_t point_grid) {
    const std::size_t L = omega_f.size() - 1;
    auto birkhoff = [&](double x0) {
        double x = x0;
        double sum = 0.0;
        for (std::size_t i = 1; i <= L; ++i) {
            x = engine.map(omega_f[i - 1]).forward(x);
            sum += obs_family[omega_g[i]](x) - centers[i];
        }
        return sum;
    };
    double best = -std::numeric_limits<double>::infinity();
    double xb = 0.0;
    for (std::size_t p = 0; p < point_grid; ++p) {
        double x0 = static_cast<double>(p) / static_cast<double>(point_grid);
        double s = birkhoff(x0);
        if (s > best) {
            best = s;
            xb = x0;
        }
    }
    // one local ascent pass with a shrinking step
    double step = 1.0 / static_cast<double>(point_grid);
    for (int it = 0; it < 24; ++it) {
        bool moved = false;
        for (double cand : {xb - step, xb + step}) {
            double c = cand - std::floor(cand);
            double s = birkhoff(c);
            if (s > best) {
                best = s;
                xb = c;
                moved = true;
            }
        }
        if (!moved) step *= 0.5;
        if (step < 1e-15) break;
    }
    return {best, xb};
}

} // namespace

GrowthReport growth_criterion(const TransferEngine& engine,
                              const std::vector<Observable>& obs_family,
                              std::size_t block_len, const GrowthMode& mode,
                              std::size_t point_grid, bool exhaustive,
                              std::size_t sample_count, std::uint64_t seed) {
    if (block_len < 1) throw std::invalid_argument("growth_criterion: block too short");
    if (obs_family.empty())
        throw std::invalid_argument("growth_criterion: empty observable family");
    const std::size_t nf = engine.family_size();
    const std::size_t ng = obs_family.size();
    const std::size_t L = block_len;

    double combos_f = std::pow(static_cast<double>(nf * ng), static_cast<double>(L + 1));
    if (exhaustive && combos_f > 1e6)
        throw std::invalid_argument(
            "growth_criterion: exhaustive enumeration infeasible, " +
            std::to_string(combos_f) + " sequences exceed 1e6; use sampled mode");

    ExpansionConstants exc = expansion_constants(engine.family());

    GrowthReport rep;
    rep.exhaustive = exhaustive;

    // threshold and truncation window per mode
    std::size_t s_window = L;
    double max_gamma_seen = 0.0;
    if (std::holds_alternative<PropVarianceMode>(mode)) {
        const auto& pm = std::get<PropVarianceMode>(mode);
        if (!(pm.a > 0.0 && pm.a < 1.0))
            throw std::invalid_argument("growth_criterion: a must lie in (0,1)");
        double sup_dg = 0.0;
        for (const auto& g : obs_family) sup_dg = std::max(sup_dg, g.derivative_sup_norm());
        rep.ledger.a = pm.a;
        rep.ledger.eps_max = sup_dg > 0 ? pm.a / (4.0 * sup_dg) : 1.0;
        rep.ledger.eps = pm.eps > 0.0 ? pm.eps : rep.ledger.eps_max;
        rep.ledger.eps_ok = rep.ledger.eps <= rep.ledger.eps_max + 1e-15;
        rep.ledger.d_f = specification_gap(std::min(1.0, rep.ledger.eps),
                                           exc.min_expansion);
        rep.ledger.threshold = pm.a * static_cast<double>(L);
    } else {
        const auto& cm = std::get<CorVerifyMode>(mode);
        s_window = static_cast<std::size_t>(
            std::ceil(cm.b * std::log(static_cast<double>(L))));
        s_window = std::max<std::size_t>(s_window, 1);
        rep.ledger.s_window = s_window;
        rep.ledger.threshold = 2.0 * cm.kappa * std::log(static_cast<double>(L));
    }

    WindowCenterCache centers_cache(engine, obs_family);

    std::uint64_t total = 1;
    const std::uint64_t base = static_cast<std::uint64_t>(nf * ng);
    for (std::size_t i = 0; i <= L; ++i) {
        if (total > (std::uint64_t(1) << 62) / base) {
            total = std::uint64_t(1) << 62; // saturate; only coverage reporting needs it
            break;
        }
        total *= base;
    }
    std::uint64_t visit_count = exhaustive ? total : std::min<std::uint64_t>(sample_count, total);
    if (!exhaustive && sample_count == 0)
        throw std::invalid_argument("growth_criterion: sampled mode needs sample_count");
    rep.coverage = static_cast<double>(visit_count) / static_cast<double>(total);

    rep.pass = true;
    rep.worst.best_sum = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> wf(L + 1), wg(L + 1);
    std::vector<double> centers(L + 1, 0.0);
    std::vector<std::size_t> window;

    for (std::uint64_t v = 0; v < visit_count; ++v) {
        std::uint64_t code = v;
        if (!exhaustive) {
            RandomStream rs(seed, v);
            code = rs.next_u64() % total;
        }
        for (std::size_t i = 0; i <= L; ++i) {
            wf[i] = static_cast<std::size_t>(code % nf);
            code /= nf;
            wg[i] = static_cast<std::size_t>(code % ng);
            code /= ng;
        }
        for (std::size_t i = 1; i <= L; ++i) {
            std::size_t start = i > s_window ? i - s_window : 0;
            window.assign(wf.begin() + static_cast<std::ptrdiff_t>(start),
                          wf.begin() + static_cast<std::ptrdiff_t>(i));
            centers[i] = centers_cache.center(window, wg[i]);
            max_gamma_seen = std::max(max_gamma_seen, std::abs(centers[i]));
        }
        BlockEval ev =
            maximize_block(engine, obs_family, wf, wg, centers, point_grid);
        rep.sequences_checked++;
        if (ev.best_sum < rep.worst.best_sum) {
            rep.worst = {wf, wg, ev.best_sum, ev.x_best};
        }
        if (rep.table.size() < 4096)
            rep.table.push_back({wf, wg, ev.best_sum, ev.x_best});
        if (ev.best_sum < rep.ledger.threshold) rep.pass = false;
    }

    if (std::holds_alternative<PropVarianceMode>(mode)) {
        double max_ghat = 0.0;
        for (const auto& g : obs_family)
            max_ghat = std::max(max_ghat, g.sup_norm() + max_gamma_seen);
        rep.ledger.l_required = 8.0 / rep.ledger.a *
                                static_cast<double>(rep.ledger.d_f) * max_ghat;
        rep.ledger.l_ok = static_cast<double>(L) >= rep.ledger.l_required;
        if (!rep.ledger.eps_ok || !rep.ledger.l_ok) rep.pass = false;
    }
    return rep;
}

MartingaleResult martingale_decomposition(const CenteredSequence& cs, std::size_t n) {
    if (n > cs.horizon)
        throw std::invalid_argument("martingale_decomposition: n exceeds horizon");
    const std::size_t grid = cs.engine->grid();
    MartingaleResult res;
    res.min_density = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= n; ++k)
        for (std::size_t i = 0; i < grid; ++i)
            res.min_density = std::min(res.min_density, cs.densities[k].real_at(i));
    if (!(res.min_density > 1e-12))
        throw std::domain_error(
            "martingale_decomposition: pushed density touches zero at grid resolution");

    auto lhat = [&](std::size_t k, const GridFunction& u) {
        GridFunction v = cs.engine->apply(cs.seq.map_index_at(k),
                                          cs.densities[k].multiply(u));
        std::vector<double> w(grid);
        for (std::size_t i = 0; i < grid; ++i)
            w[i] = v.real_at(i) / cs.densities[k + 1].real_at(i);
        return GridFunction::from_real(std::move(w));
    };

    res.phi.resize(n + 1);
    res.phi[0] = GridFunction::constant(grid, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        res.phi[k + 1] = lhat(k, res.phi[k] + cs.ghat[k]);

    res.y.resize(n);
    CompensatedSum total;
    for (std::size_t k = 0; k < n; ++k) {
        GridFunction comp = cs.engine->compose(cs.seq.map_index_at(k), res.phi[k + 1]);
        res.y[k] = cs.ghat[k] - comp + res.phi[k];
        GridFunction orth = lhat(k, res.y[k]);
        res.max_orthogonality_residual =
            std::max(res.max_orthogonality_residual, orth.max_abs());
        total.add(cs.densities[k].multiply(res.y[k].multiply(res.y[k])).integral_real());
    }
    res.sigma2 = total.value();
    return res;
}

CoboundaryReport coboundary_solve(const TransferEngine& engine,
                                  const std::vector<GridFunction>& g_per_map,
                                  std::size_t m_terms) {
    if (g_per_map.size() != engine.family_size())
        throw std::invalid_argument("coboundary_solve: one observable per map required");
    if (m_terms < 1) throw std::invalid_argument("coboundary_solve: m_terms must be >= 1");
    const std::size_t grid = engine.grid();
    CoboundaryReport rep;
    rep.terms = m_terms;
    bool converged = true;
    for (std::size_t a = 0; a < g_per_map.size(); ++a) {
        const GridFunction& g = g_per_map[a];
        if (std::abs(g.integral_real()) > 1e-12)
            throw std::invalid_argument("coboundary_solve: observable must have zero mean");
        GridFunction u = g;
        GridFunction psi = GridFunction::constant(grid, 0.0);
        double first = 0.0;
        double tail = 0.0;
        for (std::size_t m = 1; m <= m_terms; ++m) {
            u = engine.apply(a, u);
            if (m == 1) first = u.max_abs();
            tail = u.max_abs();
            psi = psi - u;
        }
        // rounding floor: a first term at noise level means the series is
        // already exhausted, not stalled
        double floor = 1e-12 * std::max(1.0, g.max_abs());
        rep.tail_ratio = std::max(rep.tail_ratio, first > floor ? tail / first : 0.0);
        if (first > floor && tail > 1e-3 * first) converged = false;
        double resid = 0.0;
        GridFunction psi_of_f = engine.compose(a, psi);
        for (std::size_t i = 0; i < grid; ++i)
            resid = std::max(resid, std::abs(g.real_at(i) - psi.real_at(i) +
                                             psi_of_f.real_at(i)));
        rep.psi.push_back(psi);
        rep.residuals.push_back(resid);
        rep.max_residual = std::max(rep.max_residual, resid);
    }
    for (std::size_t a = 0; a < rep.psi.size(); ++a)
        for (std::size_t b = a + 1; b < rep.psi.size(); ++b)
            rep.cross_consistency =
                std::max(rep.cross_consistency, (rep.psi[a] - rep.psi[b]).max_abs());
    if (!converged)
        rep.verdict = CoboundaryVerdict::Inconclusive;
    else if (rep.max_residual <= 1e-6 && rep.cross_consistency <= 1e-6)
        rep.verdict = CoboundaryVerdict::Coboundary;
    else
        rep.verdict = CoboundaryVerdict::NotCoboundary;
    return rep;
}

RandomDichotomyReport random_dichotomy(std::shared_ptr<const TransferEngine> engine,
                                       const std::vector<GridFunction>& g_per_map,
                                       std::size_t trials, std::size_t n,
                                       std::uint64_t seed, std::size_t m_terms) {
    if (trials < 2) throw std::invalid_argument("random_dichotomy: need >= 2 trials");
    const std::size_t nf = engine->family_size();
    if (g_per_map.size() != nf)
        throw std::invalid_argument("random_dichotomy: one observable per map required");

    RandomDichotomyReport rep;
    rep.coboundary = coboundary_solve(*engine, g_per_map, m_terms);

    // per-map observables as trig interpolants for the sequential machinery
    std::vector<Observable> obs_family;
    obs_family.reserve(nf);
    for (const auto& g : g_per_map) {
        // rebuild Observable terms from the grid coefficients (exact for
        // the trig-polynomial inputs used here)
        const auto& c = g.coefficients();
        std::vector<Observable::Term> terms;
        for (std::size_t k = 0; k + k < c.size(); ++k) {
            Complex ck = c[k];
            double cos_c = k == 0 ? ck.real() : 2.0 * ck.real();
            double sin_c = k == 0 ? 0.0 : -2.0 * ck.imag();
            if (std::abs(cos_c) > 1e-13 || std::abs(sin_c) > 1e-13)
                terms.push_back({static_cast<int>(k), cos_c, sin_c});
        }
        obs_family.push_back(Observable(terms));
    }

    for (std::size_t t = 0; t < trials; ++t) {
        RandomStream rs(seed, t);
        std::vector<std::size_t> omega(2 * n);
        for (auto& w : omega) w = static_cast<std::size_t>(rs.next_below(nf));
        SequenceSpec seq;
        seq.map_family = engine->family();
        seq.obs_family = obs_family;
        seq.omega_f = IndexSequence::explicit_list(omega);
        seq.omega_g = IndexSequence::explicit_list(omega);
        seq.rho = Observable::constant(1.0);
        CenteredSequence cs = center_sequence(engine, seq, 2 * n);
        double s_n = variance(cs, n, VarianceMode::Full).sigma2;
        double s_2n = variance(cs, 2 * n, VarianceMode::Full).sigma2;
        rep.sigma2_over_n.push_back(s_n / static_cast<double>(n));
        rep.sigma2_over_2n.push_back(s_2n / static_cast<double>(2 * n));

        // stationary rate: beta = int g^2 + 2 sum_j int g_j L ... L g
        GridFunction u = g_per_map[omega[0]];
        CompensatedSum beta;
        beta.add(u.multiply(u).integral_real());
        GridFunction pushed = u;
        for (std::size_t j = 1; j < 2 * n; ++j) {
            pushed = engine->apply(omega[j - 1], pushed);
            double term = 2.0 * g_per_map[omega[j]].multiply(pushed).integral_real();
            beta.add(term);
            if (std::abs(term) < 1e-12 && pushed.max_abs() < 1e-12 * (1.0 + u.max_abs()))
                break;
        }
        rep.beta.push_back(beta.value());
    }

    double mean = 0.0;
    for (double v : rep.sigma2_over_n) mean += v;
    mean /= static_cast<double>(trials);
    double var = 0.0;
    for (double v : rep.sigma2_over_n) var += (v - mean) * (v - mean);
    var /= static_cast<double>(trials > 1 ? trials - 1 : 1);
    rep.growth_mean = mean;
    rep.growth_stderr = std::sqrt(var / static_cast<double>(trials));
    for (double b : rep.beta) rep.beta_mean += b;
    rep.beta_mean /= static_cast<double>(trials);

    double mean2n = 0.0;
    for (double v : rep.sigma2_over_2n) mean2n += v;
    mean2n /= static_cast<double>(trials);
    double total_n = mean * static_cast<double>(n);
    double total_2n = mean2n * static_cast<double>(2 * n);
    bool no_trend = std::abs(total_2n - total_n) <= 0.1 * std::max(total_n, 1.0);
    // growth requires a clear signal and an actual trend across the
    // horizon doubling, not merely a positive mean rate
    bool growth_signal = mean >= 10.0 * rep.growth_stderr && mean > 0.0 && !no_trend;

    bool is_cob = rep.coboundary.verdict == CoboundaryVerdict::Coboundary;
    if (growth_signal && is_cob) {
        rep.conflict = true;
        rep.classification = RandomClassification::Conflict;
    } else if (growth_signal && rep.coboundary.verdict == CoboundaryVerdict::NotCoboundary) {
        rep.classification = RandomClassification::Linear;
    } else if (is_cob && no_trend) {
        rep.classification = RandomClassification::Bounded;
    } else {
        rep.classification = RandomClassification::Inconclusive;
    }
    return rep;
}

} // namespace seqclt
