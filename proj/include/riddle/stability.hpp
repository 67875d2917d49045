#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "riddle/dynamics.hpp"
#include "riddle/errors.hpp"
#include "riddle/rng.hpp"
#include "riddle/thermo.hpp"

namespace riddle::stability {

enum class MeasureKind { LebesgueSRB, UlamDensity };

struct SamplerSpec {
    MeasureKind measure = MeasureKind::LebesgueSRB;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0; // base id; estimators fan out sub-streams
};

// Cell-wise stationary probabilities of an Ulam discretization, used to
// sample a general equilibrium state by inverse CDF with uniform jitter
// inside cells.
class DensityTable {
public:
    DensityTable(const dynamics::IntervalMap& map, const dynamics::FibreFunction* lambda,
                 const thermo::PotentialTerm& psi, int ncells);

    double sample(Rng& rng) const;
    int cells() const { return static_cast<int>(cdf_.size()); }

private:
    std::vector<double> cdf_;
};

class Sampler {
public:
    explicit Sampler(SamplerSpec spec, std::shared_ptr<const DensityTable> table = nullptr);

    double sample();                      // one draw from mu
    double uniform(double lo, double hi); // auxiliary uniform draws
    const SamplerSpec& spec() const { return spec_; }

private:
    SamplerSpec spec_;
    Rng rng_;
    std::shared_ptr<const DensityTable> table_;
};

std::vector<double> sample_mu(Sampler& sampler, long n);

struct RegressionFit {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
    double standard_error = 0;
    std::vector<std::pair<double, double>> points; // (log abscissa, log ordinate)
};

// ordinary least squares on log-log points
RegressionFit ols_fit(const std::vector<std::pair<double, double>>& points);

struct McOptions {
    long streams = 64;     // fixed sub-stream count; results do not depend on
                           // the number of worker threads
    long max_iter = 2000;  // classification budget per point
    double escape_threshold = 0; // 0 = skew product default
    double graph_tol = 1e-6;
    long max_terms = 3000;
};

struct TailResult {
    RegressionFit fit;
    std::vector<long> counts; // per M-grid entry: #{u > M}
    long n_samples = 0;
    long divergent = 0;    // samples with divergent graph value (count as > every M)
    long undetermined = 0; // certificate exhausted; also counted as > every M
};

TailResult empirical_tail_exponent(const dynamics::SkewProduct& sp,
                                   const SamplerSpec& sampler, long n_samples,
                                   const std::vector<double>& M_grid,
                                   const McOptions& opts = {},
                                   std::shared_ptr<const DensityTable> table = nullptr);

struct LocalFraction {
    double minus_frac = 0, plus_frac = 0, undecided_frac = 0;
    long minus_count = 0, plus_count = 0, undecided_count = 0;
    long n = 0;
};

LocalFraction local_fraction(const dynamics::SkewProduct& sp, const SamplerSpec& sampler,
                             double x, double t, double r, long n_samples,
                             const McOptions& opts = {},
                             std::shared_ptr<const DensityTable> table = nullptr);

struct ScaleRow {
    double r = 0;
    double minus_frac = 0, plus_frac = 0, undecided_frac = 0;
    long n = 0;
};

struct SideIndex {
    enum class Kind { Fitted, Infinite } kind = Kind::Fitted;
    RegressionFit fit; // meaningful when kind == Fitted

    bool infinite() const { return kind == Kind::Infinite; }
};

struct StabilityEstimate {
    SideIndex minus, plus;
    std::vector<ScaleRow> rows; // raw per-scale fractions for audit
};

// geometric schedule of n_scales radii from r_hi down to r_lo
std::vector<double> geometric_schedule(double r_hi, double r_lo, int n_scales);

StabilityEstimate estimate_stability_index(const dynamics::SkewProduct& sp,
                                           const SamplerSpec& sampler, double x, double t,
                                           const std::vector<double>& r_schedule,
                                           long n_per_r, const McOptions& opts = {},
                                           std::shared_ptr<const DensityTable> table = nullptr);

// Theorem-predicted signed index s* int log lambda dmu / int log|T'| dmu < 0
double predicted_stability_index(const dynamics::SkewProduct& sp,
                                 const thermo::PotentialTerm& phi, thermo::DiscSpec disc);
double predicted_stability_index(const dynamics::SkewProduct& sp,
                                 const thermo::PotentialTerm& phi, thermo::DiscSpec disc,
                                 double s_star);

// (1/n) log g_x^n(t) for t above the graph, with log-space accumulation once
// the orbit is far above it
double fibre_lyapunov(const dynamics::SkewProduct& sp, double x, double t, long n);

StabilityEstimate on_graph_index_probe(const dynamics::SkewProduct& sp,
                                       const SamplerSpec& sampler, double x,
                                       const std::vector<double>& r_schedule, long n_per_r,
                                       const McOptions& opts = {},
                                       std::shared_ptr<const DensityTable> table = nullptr);

} // namespace riddle::stability
