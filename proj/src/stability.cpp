#include "riddle/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace riddle::stability {

namespace {

// split n across streams: stream k gets quota(n, streams, k)
long quota(long n, long streams, long k) {
    return n / streams + (k < n % streams ? 1 : 0);
}

} // namespace

// ---------------------------------------------------------------------------
// DensityTable / Sampler

DensityTable::DensityTable(const dynamics::IntervalMap& map,
                           const dynamics::FibreFunction* lambda,
                           const thermo::PotentialTerm& psi, int ncells) {
    thermo::TransferOperator op(map, lambda, {thermo::DiscMethod::Ulam, ncells});
    auto td = op.build(psi);
    // mu(C_i) ~ l_i r_i, normalised to sum 1 by the eigentriple
    cdf_.resize(td.eig.left.size());
    double acc = 0;
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
        acc += td.eig.left[i] * td.eig.right[i];
        cdf_[i] = acc;
    }
    for (auto& c : cdf_) c /= acc;
}

double DensityTable::sample(Rng& rng) const {
    double u = rng.uniform();
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t cell = std::min(static_cast<std::size_t>(it - cdf_.begin()),
                                cdf_.size() - 1);
    return (static_cast<double>(cell) + rng.uniform()) / static_cast<double>(cdf_.size());
}

Sampler::Sampler(SamplerSpec spec, std::shared_ptr<const DensityTable> table)
    : spec_(spec), rng_(spec.seed, spec.stream_id), table_(std::move(table)) {
    if (spec_.measure == MeasureKind::UlamDensity && !table_)
        throw dynamics::ValidationError("UlamDensity sampling needs a density table");
}

double Sampler::sample() {
    if (spec_.measure == MeasureKind::LebesgueSRB) return rng_.uniform();
    return table_->sample(rng_);
}

double Sampler::uniform(double lo, double hi) { return rng_.uniform(lo, hi); }

std::vector<double> sample_mu(Sampler& sampler, long n) {
    if (n < 1) throw dynamics::ValidationError("sample_mu needs n >= 1");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (auto& x : out) x = sampler.sample();
    return out;
}

// ---------------------------------------------------------------------------
// OLS

RegressionFit ols_fit(const std::vector<std::pair<double, double>>& points) {
    RegressionFit fit;
    fit.points = points;
    const std::size_t n = points.size();
    if (n < 2) return fit;
    double sx = 0, sy = 0;
    for (auto [x, y] : points) { sx += x; sy += y; }
    double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (auto [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (auto [x, y] : points) {
        double e = y - (fit.intercept + fit.slope * x);
        ss_res += e * e;
        ss_tot += (y - my) * (y - my);
    }
    fit.r_squared = ss_tot > 1e-300 ? 1.0 - ss_res / ss_tot : 1.0;
    fit.r_squared = std::clamp(fit.r_squared, 0.0, 1.0);
    fit.standard_error = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
    return fit;
}

// ---------------------------------------------------------------------------
// tail exponent

TailResult empirical_tail_exponent(const dynamics::SkewProduct& sp,
                                   const SamplerSpec& sampler, long n_samples,
                                   const std::vector<double>& M_grid, const McOptions& opts,
                                   std::shared_ptr<const DensityTable> table) {
    if (M_grid.size() < 3)
        throw dynamics::ValidationError("M_grid needs at least 3 increasing values");
    for (std::size_t j = 0; j + 1 < M_grid.size(); ++j)
        if (!(M_grid[j] < M_grid[j + 1]))
            throw dynamics::ValidationError("M_grid must be increasing");

    const long streams = opts.streams;
    const std::size_t nm = M_grid.size();
    std::vector<std::vector<long>> counts(static_cast<std::size_t>(streams),
                                          std::vector<long>(nm, 0));
    std::vector<long> divergent(static_cast<std::size_t>(streams), 0);
    std::vector<long> undetermined(static_cast<std::size_t>(streams), 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long k = 0; k < streams; ++k) {
        SamplerSpec sub = sampler;
        sub.stream_id = sampler.stream_id + static_cast<std::uint64_t>(k);
        Sampler draw(sub, table);
        auto& mine = counts[static_cast<std::size_t>(k)];
        const long quota_k = quota(n_samples, streams, k);
        for (long i = 0; i < quota_k; ++i) {
            double x = draw.sample();
            auto gv = sp.invariant_graph_value(x, opts.graph_tol, opts.max_terms);
            double u;
            if (gv.finite()) {
                u = gv.value;
            } else {
                u = std::numeric_limits<double>::infinity();
                if (gv.divergent())
                    ++divergent[static_cast<std::size_t>(k)];
                else
                    ++undetermined[static_cast<std::size_t>(k)];
            }
            for (std::size_t j = 0; j < nm; ++j) {
                if (u > M_grid[j]) ++mine[j];
                else break;
            }
        }
    }

    TailResult out;
    out.n_samples = n_samples;
    out.counts.assign(nm, 0);
    for (long k = 0; k < streams; ++k) {
        for (std::size_t j = 0; j < nm; ++j)
            out.counts[j] += counts[static_cast<std::size_t>(k)][j];
        out.divergent += divergent[static_cast<std::size_t>(k)];
        out.undetermined += undetermined[static_cast<std::size_t>(k)];
    }

    if (out.counts.back() < 100)
        throw InsufficientTail("top bucket M = " + std::to_string(M_grid.back()) +
                               " holds " + std::to_string(out.counts.back()) +
                               " < 100 hits; increase n_samples or lower the M grid");

    std::vector<std::pair<double, double>> pts;
    for (std::size_t j = 0; j < nm; ++j)
        pts.emplace_back(std::log(M_grid[j]),
                         -std::log(static_cast<double>(out.counts[j]) / n_samples));
    out.fit = ols_fit(pts);
    return out;
}

// ---------------------------------------------------------------------------
// local fractions

LocalFraction local_fraction(const dynamics::SkewProduct& sp, const SamplerSpec& sampler,
                             double x, double t, double r, long n_samples,
                             const McOptions& opts,
                             std::shared_ptr<const DensityTable> table) {
    if (!(r > 0)) throw dynamics::ValidationError("ball radius must be positive");

    const long streams = opts.streams;
    std::vector<long> minus(static_cast<std::size_t>(streams), 0);
    std::vector<long> plus(static_cast<std::size_t>(streams), 0);
    std::vector<long> undec(static_cast<std::size_t>(streams), 0);
    std::vector<char> stalled(static_cast<std::size_t>(streams), 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long k = 0; k < streams; ++k) {
        SamplerSpec sub = sampler;
        sub.stream_id = sampler.stream_id + static_cast<std::uint64_t>(k);
        Sampler draw(sub, table);
        const long quota_k = quota(n_samples, streams, k);
        long attempts = 0, accepted = 0;
        for (long i = 0; i < quota_k; ++i) {
            double xp = 0;
            bool got = false;
            while (!got) {
                ++attempts;
                if (attempts > 10000000 && accepted < attempts / 1000000) {
                    stalled[static_cast<std::size_t>(k)] = 1;
                    break;
                }
                xp = draw.sample();
                if (std::fabs(xp - x) < r) { ++accepted; got = true; }
            }
            if (!got) break;
            double tp = draw.uniform(t - r, t + r);
            auto label = sp.classify_point(xp, tp, opts.max_iter, opts.escape_threshold);
            if (label.minus()) ++minus[static_cast<std::size_t>(k)];
            else if (label.plus()) ++plus[static_cast<std::size_t>(k)];
            else ++undec[static_cast<std::size_t>(k)];
        }
    }

    for (long k = 0; k < streams; ++k)
        if (stalled[static_cast<std::size_t>(k)])
            throw RejectionStall("mu(B_r(x)) acceptance rate fell below 1e-6 at r = " +
                                 std::to_string(r));

    LocalFraction out;
    for (long k = 0; k < streams; ++k) {
        out.minus_count += minus[static_cast<std::size_t>(k)];
        out.plus_count += plus[static_cast<std::size_t>(k)];
        out.undecided_count += undec[static_cast<std::size_t>(k)];
    }
    out.n = out.minus_count + out.plus_count + out.undecided_count;
    out.minus_frac = static_cast<double>(out.minus_count) / out.n;
    out.plus_frac = static_cast<double>(out.plus_count) / out.n;
    out.undecided_frac = static_cast<double>(out.undecided_count) / out.n;
    return out;
}

// ---------------------------------------------------------------------------
// stability index estimation

std::vector<double> geometric_schedule(double r_hi, double r_lo, int n_scales) {
    if (!(r_hi > r_lo) || !(r_lo > 0) || n_scales < 2)
        throw dynamics::ValidationError("schedule needs r_hi > r_lo > 0 and >= 2 scales");
    std::vector<double> out;
    double ratio = std::pow(r_lo / r_hi, 1.0 / (n_scales - 1));
    double r = r_hi;
    for (int i = 0; i < n_scales; ++i) {
        out.push_back(r);
        r *= ratio;
    }
    out.back() = r_lo;
    return out;
}

StabilityEstimate estimate_stability_index(const dynamics::SkewProduct& sp,
                                           const SamplerSpec& sampler, double x, double t,
                                           const std::vector<double>& r_schedule,
                                           long n_per_r, const McOptions& opts,
                                           std::shared_ptr<const DensityTable> table) {
    if (r_schedule.size() < 4)
        throw dynamics::ValidationError("r_schedule needs at least 4 decreasing scales");
    for (std::size_t i = 0; i + 1 < r_schedule.size(); ++i)
        if (!(r_schedule[i] > r_schedule[i + 1]))
            throw dynamics::ValidationError("r_schedule must be decreasing");

    StabilityEstimate est;
    SamplerSpec sub = sampler;
    for (double r : r_schedule) {
        auto frac = local_fraction(sp, sub, x, t, r, n_per_r, opts, table);
        // fresh well-separated sub-streams for the next scale
        sub.stream_id += static_cast<std::uint64_t>(opts.streams);
        est.rows.push_back({r, frac.minus_frac, frac.plus_frac, frac.undecided_frac, frac.n});
        if (frac.undecided_frac > 0.1)
            throw Inconclusive("undecided fraction " + std::to_string(frac.undecided_frac) +
                               " > 0.1 at r = " + std::to_string(r));
    }

    auto fit_side = [&](bool minus_side) {
        SideIndex side;
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : est.rows) {
            double frac = minus_side ? row.minus_frac : row.plus_frac;
            if (frac > 0) pts.emplace_back(std::log(row.r), std::log(frac));
        }
        if (pts.empty()) {
            side.kind = SideIndex::Kind::Infinite; // identically zero at every scale
            return side;
        }
        if (pts.size() < 3)
            throw Inconclusive("fewer than 3 scales with a positive fraction on one side");
        side.kind = SideIndex::Kind::Fitted;
        side.fit = ols_fit(pts);
        return side;
    };
    est.minus = fit_side(true);
    est.plus = fit_side(false);
    return est;
}

double predicted_stability_index(const dynamics::SkewProduct& sp,
                                 const thermo::PotentialTerm& phi, thermo::DiscSpec disc,
                                 double s_star) {
    thermo::TransferOperator op(sp.base(), &sp.lambda_fn(), disc);
    double int_lambda = op.equilibrium_integral(phi, thermo::PotentialTerm::log_lambda());
    double int_deriv = op.equilibrium_integral(phi, thermo::PotentialTerm::log_deriv());
    if (!(int_lambda < 0))
        throw thermo::HypothesisViolation("predicted index needs int log lambda dmu < 0");
    return s_star * int_lambda / int_deriv;
}

double predicted_stability_index(const dynamics::SkewProduct& sp,
                                 const thermo::PotentialTerm& phi, thermo::DiscSpec disc) {
    auto loynes = thermo::loynes_exponent(sp, phi, disc);
    return predicted_stability_index(sp, phi, disc, loynes.s_star);
}

// ---------------------------------------------------------------------------
// fibre Lyapunov exponent

double fibre_lyapunov(const dynamics::SkewProduct& sp, double x, double t, long n) {
    if (n < 1) throw dynamics::ValidationError("fibre_lyapunov needs n >= 1");
    auto side = sp.graph_sign_classify(x, t, 1e-9);
    if (!side.plus())
        throw WrongSide("point is not verifiably above the invariant graph");

    const double switch_at = 1e15;
    const dynamics::IntervalMap& base = sp.base();
    double g = t;
    long k = 0;
    for (; k < n && g < switch_at; ++k) {
        int hint = base.interval_of(x);
        g = -sp.f(x, hint) + g / sp.lam(x, hint);
        x = base.step_typical(x);
        if (g <= 0)
            throw WrongSide("fibre orbit crossed below zero; point too close to the graph");
    }
    if (k == n) return std::log(g) / static_cast<double>(n);

    // log-space continuation: log g' = log g - log lambda + log1p(-f lambda / g)
    double L = std::log(g);
    for (; k < n; ++k) {
        int hint = base.interval_of(x);
        double lam = sp.lam(x, hint);
        double corr = L < 700 ? std::log1p(-sp.f(x, hint) * lam * std::exp(-L)) : 0.0;
        L += -std::log(lam) + corr;
        x = base.step_typical(x);
    }
    return L / static_cast<double>(n);
}

StabilityEstimate on_graph_index_probe(const dynamics::SkewProduct& sp,
                                       const SamplerSpec& sampler, double x,
                                       const std::vector<double>& r_schedule, long n_per_r,
                                       const McOptions& opts,
                                       std::shared_ptr<const DensityTable> table) {
    auto gv = sp.invariant_graph_value(x, 1e-9, opts.max_terms);
    if (!gv.finite())
        throw dynamics::ValidationError("on-graph probe needs a finite graph value");
    return estimate_stability_index(sp, sampler, x, gv.value, r_schedule, n_per_r, opts,
                                    table);
}

} // namespace riddle::stability
