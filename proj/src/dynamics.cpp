#include "riddle/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace riddle::dynamics {

namespace {

constexpr int kHypothesisGrid = 4096;
constexpr double kEndpointTol = 1e-9;
constexpr double kInverseTol = 1e-12;
constexpr double kOverflowGuard = 1e300;

} // namespace

// ---------------------------------------------------------------------------
// IntervalMap

IntervalMap IntervalMap::doubling() {
    return from_formulas({0.0, 0.5, 1.0}, {"2*x", "2*x - 1"}, {"2", "2"});
}

IntervalMap IntervalMap::linear(int branches) {
    if (branches < 2)
        throw ValidationError("linear map needs at least 2 branches");
    std::vector<double> part;
    std::vector<std::string> formulas, derivs;
    for (int j = 0; j <= branches; ++j)
        part.push_back(static_cast<double>(j) / branches);
    for (int j = 0; j < branches; ++j) {
        formulas.push_back(std::to_string(branches) + "*x - " + std::to_string(j));
        derivs.push_back(std::to_string(branches));
    }
    return from_formulas(std::move(part), formulas, derivs);
}

IntervalMap IntervalMap::from_formulas(std::vector<double> partition,
                                       const std::vector<std::string>& branch_formulas,
                                       const std::vector<std::string>& deriv_formulas) {
    IntervalMap m;
    m.partition_ = std::move(partition);
    if (m.partition_.size() < 2)
        throw ValidationError("partition needs at least two points");
    if (branch_formulas.size() + 1 != m.partition_.size())
        throw ValidationError("branch count must match partition intervals");
    if (!deriv_formulas.empty() && deriv_formulas.size() != branch_formulas.size())
        throw ValidationError("derivative count must match branch count");

    for (std::size_t j = 0; j < branch_formulas.size(); ++j) {
        Branch b;
        b.map = expr::Expression::parse(branch_formulas[j]);
        if (deriv_formulas.empty() || deriv_formulas[j].empty())
            b.deriv = b.map.derivative();
        else
            b.deriv = expr::Expression::parse(deriv_formulas[j]);
        b.map_c = expr::Compiled(b.map);
        b.deriv_c = expr::Compiled(b.deriv);
        b.lo = m.partition_[j];
        b.hi = m.partition_[j + 1];
        m.branches_.push_back(std::move(b));
    }
    m.validate();
    return m;
}

void IntervalMap::validate() {
    for (std::size_t j = 0; j + 1 < partition_.size(); ++j)
        if (!(partition_[j] < partition_[j + 1]))
            throw ValidationError("partition points must be strictly increasing");
    if (partition_.front() != 0.0 || partition_.back() != 1.0)
        throw ValidationError("partition must span [0,1]");

    check_ = MarkovCheck{};
    check_.min_abs_deriv = std::numeric_limits<double>::infinity();

    for (auto& b : branches_) {
        // monotonicity and expansion on a grid restricted to the branch
        int samples = std::max(64, kHypothesisGrid / branch_count());
        double sign0 = 0;
        for (int k = 0; k < samples; ++k) {
            double x = b.lo + (k + 0.5) * (b.hi - b.lo) / samples;
            double d = b.deriv_c(x);
            if (!std::isfinite(d) || d == 0.0)
                throw ValidationError("branch derivative vanishes or is not finite");
            if (sign0 == 0) sign0 = d > 0 ? 1 : -1;
            if ((d > 0 ? 1 : -1) != sign0) {
                check_.monotone = false;
                throw ValidationError("branch is not monotone on its interval");
            }
            check_.min_abs_deriv = std::min(check_.min_abs_deriv, std::fabs(d));
        }
        b.increasing = sign0 > 0;

        // Markov property at endpoints: images must land on partition points
        double ya = b.map_c(b.lo);
        double yb = b.map_c(b.hi);
        double im_lo = std::min(ya, yb);
        double im_hi = std::max(ya, yb);
        auto snap = [&](double v) {
            double best = partition_[0];
            double gap = std::fabs(v - best);
            for (double t : partition_)
                if (std::fabs(v - t) < gap) { gap = std::fabs(v - t); best = t; }
            check_.worst_endpoint_gap = std::max(check_.worst_endpoint_gap, gap);
            if (gap > kEndpointTol)
                throw ValidationError("branch image endpoint misses the partition by " +
                                      std::to_string(gap));
            return best;
        };
        b.img_lo = snap(im_lo);
        b.img_hi = snap(im_hi);
        if (!(b.img_lo < b.img_hi))
            throw ValidationError("branch image is degenerate");
    }

    expansion_floor_ = check_.min_abs_deriv;
    if (!(expansion_floor_ > 1.0))
        throw ValidationError("map is not uniformly expanding: inf |T'| = " +
                              std::to_string(expansion_floor_));
}

bool IntervalMap::constant_slope_full_branch() const {
    for (const auto& b : branches_) {
        if (b.deriv.depends_on_x()) return false;
        if (b.img_lo != 0.0 || b.img_hi != 1.0) return false;
    }
    return true;
}

std::string IntervalMap::describe() const {
    std::ostringstream os;
    os << "partition:";
    for (double t : partition_) os << ' ' << t;
    for (const auto& b : branches_)
        os << "; T=" << b.map.serialize() << " T'=" << b.deriv.serialize();
    return os.str();
}

int IntervalMap::interval_of(double x) const {
    auto it = std::upper_bound(partition_.begin(), partition_.end(), x);
    long idx = (it - partition_.begin()) - 1;
    if (idx < 0) idx = 0;
    if (idx >= branch_count()) idx = branch_count() - 1;
    return static_cast<int>(idx);
}

double IntervalMap::apply(double x) const {
    const Branch& b = branches_[static_cast<std::size_t>(interval_of(x))];
    double y = b.map_c(x);
    if (y < 0.0) y = 0.0;
    if (y > 1.0) y = 1.0;
    return y;
}

double IntervalMap::step_typical(double x) const {
    double y = apply(x);
    if (y <= 0.0 || y >= 1.0) return y;
    // Expansion destroys about log2|T'| bits of the initial condition per
    // step; the destroyed information sits at the fixed absolute scale
    // 2^-53, not at ulp(y).  Redrawing it keeps orbits typical: relative
    // dither is swallowed by the dead bits that cancellation at interior
    // partition points leaves behind (2x-1 near x = 1/2 zeroes ~46 low
    // bits, and ulp-level noise never climbs back into significance).
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    bits += 0x9e3779b97f4a7c15ULL;
    bits = (bits ^ (bits >> 30)) * 0xbf58476d1ce4e5b9ULL;
    bits = (bits ^ (bits >> 27)) * 0x94d049bb133111ebULL;
    bits ^= bits >> 31;
    double w = static_cast<double>(bits >> 11) * 0x1.0p-53; // [0, 1)
    y += (w - 0.5) * 0x1.0p-51;
    if (y <= 0.0) y = -y;
    if (y >= 1.0) y = 2.0 - y;
    if (y <= 0.0 || y >= 1.0) y = 0.25 + 0.5 * w;
    return y;
}

double IntervalMap::deriv_at(double x) const {
    return branches_[static_cast<std::size_t>(interval_of(x))].deriv_c(x);
}

double IntervalMap::deriv_on_branch(int j, double y) const {
    return branches_[static_cast<std::size_t>(j)].deriv_c(y);
}

std::vector<IntervalMap::Preimage> IntervalMap::inverse_branches(double x) const {
    std::vector<Preimage> out;
    for (int j = 0; j < branch_count(); ++j) {
        const Branch& b = branches_[static_cast<std::size_t>(j)];
        if (x < b.img_lo - kInverseTol || x > b.img_hi + kInverseTol)
            continue;

        auto g = [&](double y) { return b.map_c(y) - x; };
        double lo = b.lo, hi = b.hi;
        double glo = g(lo), ghi = g(hi);
        if (!b.increasing) { std::swap(lo, hi); std::swap(glo, ghi); }
        // now g(lo) <= 0 <= g(hi) up to the endpoint snapping error
        double y;
        if (std::fabs(glo) <= kInverseTol) {
            y = lo;
        } else if (std::fabs(ghi) <= kInverseTol) {
            y = hi;
        } else {
            double a = lo, fa = glo, c = hi;
            y = 0.5 * (a + c);
            bool done = false;
            for (int it = 0; it < 200; ++it) {
                double fy = g(y);
                if (std::fabs(fy) <= kInverseTol) { done = true; break; }
                if ((fy < 0) == (fa < 0)) { a = y; fa = fy; } else { c = y; }
                // Newton step, bisection fallback when it leaves the bracket
                double d = b.deriv_c(y);
                double ynext = y - fy / d;
                double blo = std::min(a, c), bhi = std::max(a, c);
                if (!std::isfinite(ynext) || ynext <= blo || ynext >= bhi)
                    ynext = 0.5 * (a + c);
                y = ynext;
            }
            if (!done && std::fabs(g(y)) > kInverseTol)
                throw ConvergenceError(
                    "inverse branch solve did not reach 1e-12 in 200 iterations");
        }
        out.push_back({j, y});
    }
    return out;
}

// ---------------------------------------------------------------------------
// FibreFunction

FibreFunction FibreFunction::global(const std::string& formula) {
    FibreFunction f;
    f.pieces_.push_back(expr::Expression::parse(formula));
    f.compiled_.emplace_back(f.pieces_.back());
    return f;
}

FibreFunction FibreFunction::per_interval(const std::vector<std::string>& formulas) {
    if (formulas.empty())
        throw ValidationError("piecewise fibre function needs at least one formula");
    if (formulas.size() == 1) return global(formulas[0]);
    FibreFunction f;
    for (const auto& s : formulas) {
        f.pieces_.push_back(expr::Expression::parse(s));
        f.compiled_.emplace_back(f.pieces_.back());
    }
    return f;
}

double FibreFunction::eval(const IntervalMap& m, double x, int interval_hint) const {
    if (pieces_.size() == 1) return compiled_[0](x);
    int j = interval_hint >= 0 ? interval_hint : m.interval_of(x);
    return compiled_[static_cast<std::size_t>(j)](x);
}

std::string FibreFunction::describe() const {
    std::string out;
    for (const auto& p : pieces_) {
        if (!out.empty()) out += " | ";
        out += p.serialize();
    }
    return out;
}

// ---------------------------------------------------------------------------
// SkewProduct

SkewProduct::SkewProduct(IntervalMap base, FibreFunction f, FibreFunction lambda,
                         double holder_alpha)
    : base_(std::move(base)), f_(std::move(f)), lambda_(std::move(lambda)),
      alpha_(holder_alpha) {
    if (f_.per_branch() && f_.piece_count() != static_cast<std::size_t>(base_.branch_count()))
        throw ValidationError("piecewise f must have one formula per partition interval");
    if (lambda_.per_branch() &&
        lambda_.piece_count() != static_cast<std::size_t>(base_.branch_count()))
        throw ValidationError("piecewise lambda must have one formula per partition interval");

    sup_f_ = sup_lambda_ = -std::numeric_limits<double>::infinity();
    inf_f_ = inf_lambda_ = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kHypothesisGrid; ++i) {
        double x = static_cast<double>(i) / kHypothesisGrid;
        int hint = base_.interval_of(x);
        double fv = f_.eval(base_, x, hint);
        double lv = lambda_.eval(base_, x, hint);
        sup_f_ = std::max(sup_f_, fv);
        inf_f_ = std::min(inf_f_, fv);
        sup_lambda_ = std::max(sup_lambda_, lv);
        inf_lambda_ = std::min(inf_lambda_, lv);
    }

    hyp_.h1.verdict = HypothesisEntry::Verdict::Holds;
    hyp_.h1.witness = base_.expansion_floor();
    hyp_.h1.note = base_.mixing_assumed() ? "mixing assumed" : "mixing not assumed";

    hyp_.h2.witness = inf_f_;
    hyp_.h2.verdict = inf_f_ > 0 ? HypothesisEntry::Verdict::Holds
                                 : HypothesisEntry::Verdict::Fails;
    hyp_.h3.witness = inf_lambda_;
    hyp_.h3.verdict = inf_lambda_ > 0 ? HypothesisEntry::Verdict::Holds
                                      : HypothesisEntry::Verdict::Fails;

    double figure = inf_lambda_ * std::pow(base_.expansion_floor(), alpha_);
    hyp_.h4.witness = figure;
    hyp_.h4.verdict = figure > 1.0 ? HypothesisEntry::Verdict::Holds
                                   : HypothesisEntry::Verdict::Fails;

    if (hyp_.h2.verdict != HypothesisEntry::Verdict::Holds)
        throw ValidationError("(H2) fails: sampled min f = " + std::to_string(inf_f_));
    if (hyp_.h3.verdict != HypothesisEntry::Verdict::Holds)
        throw ValidationError("(H3) fails: sampled min lambda = " +
                              std::to_string(inf_lambda_));

    // escape threshold default: 100 sup f / (1 - min(0.99, geometric mean of
    // lambda along a probe orbit))
    double x = 0.5437346597462876;
    double logsum = 0;
    const int probe = 4096;
    for (int k = 0; k < probe; ++k) {
        logsum += std::log(lam(x));
        x = base_.step_typical(x);
    }
    double gm = std::exp(logsum / probe);
    double g = std::min(0.99, gm);
    escape_default_ = 100.0 * sup_f_ / (1.0 - g);
}

std::string SkewProduct::describe() const {
    return base_.describe() + "; f=" + f_.describe() + "; lambda=" + lambda_.describe() +
           "; alpha=" + std::to_string(alpha_);
}

FibreTrajectory SkewProduct::iterate_fibre(double x, double t, long n) const {
    FibreTrajectory tr;
    tr.points.reserve(static_cast<std::size_t>(n) + 1);
    tr.points.emplace_back(x, t);
    for (long k = 0; k < n; ++k) {
        if (std::fabs(t) > kOverflowGuard) {
            tr.truncated = true;
            break;
        }
        int hint = base_.interval_of(x);
        if (hint > 0 && x == base_.partition()[static_cast<std::size_t>(hint)])
            ++tr.partition_hits;
        t = -f(x, hint) + t / lam(x, hint);
        x = base_.step_typical(x);
        tr.points.emplace_back(x, t);
    }
    return tr;
}

std::pair<double, double> SkewProduct::weighted_birkhoff(double x, long n) const {
    double S = 0.0, L = 1.0;
    for (long j = 0; j < n; ++j) {
        int hint = base_.interval_of(x);
        L *= lam(x, hint);
        S += L * f(x, hint);
        x = base_.step_typical(x);
    }
    return {S, L};
}

GraphValue SkewProduct::invariant_graph_value(double x, double tol, long max_terms) const {
    if (!(tol > 0)) throw ValidationError("tol must be positive");
    GraphValue gv;
    double S = 0.0, L = 1.0;
    double ring[32];
    int filled = 0, head = 0;
    double window_sum = 0.0;
    double qhat = 0.0;
    const double qcap = 1.0 - 1e-6;

    for (long n = 0; n < max_terms; ++n) {
        int hint = base_.interval_of(x);
        double lv = lam(x, hint);
        L *= lv;
        S += L * f(x, hint);

        double ll = std::log(lv);
        if (filled < 32) {
            ring[filled++] = ll;
            window_sum += ll;
        } else {
            window_sum += ll - ring[head];
            ring[head] = ll;
            head = (head + 1) % 32;
        }
        double wmean = window_sum / filled;
        if (wmean >= 0.0) ++gv.supercritical_windows;
        qhat = std::max(qhat, std::min(std::exp(wmean), qcap));

        double bound = L * sup_f_ / (1.0 - qhat);
        if (bound < tol) {
            gv.kind = GraphValue::Kind::Finite;
            gv.value = S;
            gv.bound = bound;
            gv.terms = n + 1;
            return gv;
        }
        if (S > 1e100) {
            gv.kind = GraphValue::Kind::Divergent;
            gv.terms = n + 1;
            return gv;
        }
        x = base_.step_typical(x);
    }
    gv.terms = max_terms;
    gv.kind = L >= 1.0 ? GraphValue::Kind::Divergent : GraphValue::Kind::Undetermined;
    return gv;
}

BasinLabel SkewProduct::classify_point(double x, double t, long max_iter,
                                       double escape_threshold) const {
    double thresh = escape_threshold > 0 ? escape_threshold : escape_default_;
    if (t > thresh) return {BasinLabel::Kind::Plus, 0};
    if (t < -thresh) return {BasinLabel::Kind::Minus, 0};
    for (long k = 0; k < max_iter; ++k) {
        int hint = base_.interval_of(x);
        t = -f(x, hint) + t / lam(x, hint);
        if (t > thresh) return {BasinLabel::Kind::Plus, k + 1};
        if (t < -thresh) return {BasinLabel::Kind::Minus, k + 1};
        x = base_.step_typical(x);
    }
    return {BasinLabel::Kind::Undecided, max_iter};
}

BasinLabel SkewProduct::graph_sign_classify(double x, double t, double tol,
                                            long max_terms) const {
    GraphValue gv = invariant_graph_value(x, tol, max_terms);
    switch (gv.kind) {
    case GraphValue::Kind::Divergent:
        return {BasinLabel::Kind::Minus, gv.terms};
    case GraphValue::Kind::Undetermined:
        return {BasinLabel::Kind::Undecided, gv.terms};
    case GraphValue::Kind::Finite:
        if (gv.value - t > tol) return {BasinLabel::Kind::Minus, gv.terms};
        if (t - gv.value > tol) return {BasinLabel::Kind::Plus, gv.terms};
        return {BasinLabel::Kind::Undecided, gv.terms};
    }
    return {BasinLabel::Kind::Undecided, gv.terms};
}

std::vector<BasinLabel> SkewProduct::basin_grid(double x_lo, double x_hi, double t_lo,
                                                double t_hi, int nx, int nt,
                                                const GridOptions& opts) const {
    if (nx < 1 || nt < 1) throw ValidationError("grid needs nx, nt >= 1");
    std::vector<BasinLabel> grid(static_cast<std::size_t>(nx) * nt);
    double dx = (x_hi - x_lo) / nx;
    double dt = (t_hi - t_lo) / nt;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int j = 0; j < nt; ++j) {
        double t = t_lo + (j + 0.5) * dt;
        for (int i = 0; i < nx; ++i) {
            double x = x_lo + (i + 0.5) * dx;
            grid[static_cast<std::size_t>(j) * nx + i] =
                classify_point(x, t, opts.max_iter, opts.escape_threshold);
        }
    }
    return grid;
}

} // namespace riddle::dynamics
