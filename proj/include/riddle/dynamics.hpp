#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "riddle/errors.hpp"
#include "riddle/expr.hpp"

namespace riddle::dynamics {

// One monotone branch of a Markov interval map, T restricted to
// [lo, hi) = [t_j, t_{j+1}).
struct Branch {
    expr::Expression map;
    expr::Expression deriv;
    expr::Compiled map_c;
    expr::Compiled deriv_c;
    double lo = 0, hi = 1;
    double img_lo = 0, img_hi = 1; // image interval, snapped to partition points
    bool increasing = true;
};

struct MarkovCheck {
    double worst_endpoint_gap = 0; // distance of branch image endpoints to partition
    double min_abs_deriv = 0;      // sampled inf |T'|, the expansion floor
    bool monotone = true;
};

// Piecewise uniformly expanding Markov map of [0,1].  Branch intervals
// follow the left-closed convention [t_j, t_{j+1}); x = 1 belongs to the
// last branch.
class IntervalMap {
public:
    static IntervalMap doubling();
    static IntervalMap linear(int branches);
    // derivative formulas are symbolically derived when omitted
    static IntervalMap from_formulas(std::vector<double> partition,
                                     const std::vector<std::string>& branch_formulas,
                                     const std::vector<std::string>& deriv_formulas = {});

    int branch_count() const { return static_cast<int>(branches_.size()); }
    const std::vector<double>& partition() const { return partition_; }
    const Branch& branch(int j) const { return branches_[static_cast<std::size_t>(j)]; }
    double expansion_floor() const { return expansion_floor_; } // theta^{-1}
    bool mixing_assumed() const { return mixing_assumed_; }
    const MarkovCheck& markov_check() const { return check_; }
    bool constant_slope_full_branch() const;
    std::string describe() const; // canonical text, used for content hashes

    int interval_of(double x) const;
    double apply(double x) const; // clamped into [0,1]
    // Orbit step used by every forward iteration: apply(x) plus a
    // deterministic-in-x offset of absolute size ~2^-52.  Expanding maps
    // consume the initial condition at a rate of log2|T'| bits per step;
    // for bit-exact maps such as 2x mod 1 nothing replaces them and every
    // double orbit collapses onto a dyadic cycle through the fixed point 0
    // within ~53 steps.  Redrawing the consumed information (at the 2^-53
    // lattice scale of the starting point) keeps orbits statistically
    // typical while remaining a pure function of x.  The endpoints 0 and 1
    // are never perturbed, so exact boundary fixed points keep their true
    // dynamics and the graph value at 0 stays divergent.
    double step_typical(double x) const;
    double deriv_at(double x) const;
    double deriv_on_branch(int j, double y) const;

    struct Preimage {
        int branch;
        double y;
    };
    // one preimage per branch whose image covers x, each solved to
    // |T(y) - x| <= 1e-12 by bisection refined with Newton steps
    std::vector<Preimage> inverse_branches(double x) const;

private:
    std::vector<double> partition_;
    std::vector<Branch> branches_;
    double expansion_floor_ = 0;
    bool mixing_assumed_ = true;
    MarkovCheck check_;

    void validate();
};

// f or lambda: a single global formula or one formula per partition
// interval (aligned with the map branches).
class FibreFunction {
public:
    FibreFunction() = default;
    static FibreFunction global(const std::string& formula);
    static FibreFunction per_interval(const std::vector<std::string>& formulas);

    bool per_branch() const { return pieces_.size() > 1; }
    std::size_t piece_count() const { return pieces_.size(); }
    const expr::Expression& piece(std::size_t j) const { return pieces_[j]; }

    // interval_hint selects the piece when the function is piecewise;
    // required when evaluating at an inverse-branch point that sits on a
    // partition boundary.
    double eval(const IntervalMap& m, double x, int interval_hint = -1) const;
    std::string describe() const;

private:
    std::vector<expr::Expression> pieces_;
    std::vector<expr::Compiled> compiled_;
};

struct HypothesisEntry {
    enum class Verdict { Holds, Fails, Unknown } verdict = Verdict::Unknown;
    double witness = 0;
    std::string note;
};

struct HypothesisReport {
    HypothesisEntry h1; // Markov expanding map; witness = expansion floor
    HypothesisEntry h2; // f > 0; witness = sampled min f
    HypothesisEntry h3; // lambda > 0 (positivity part); witness = sampled min lambda
    HypothesisEntry h3_integral; // int log lambda dmu < 0; filled by the cli layer
    HypothesisEntry h3_zeta;     // a zeta witness orbit with positive average
    HypothesisEntry h4;          // m(lambda) m(|T'|)^alpha > 1; witness = that figure
};

struct BasinLabel {
    enum class Kind { Plus, Minus, Undecided } kind = Kind::Undecided;
    long iterations_used = 0;

    bool plus() const { return kind == Kind::Plus; }
    bool minus() const { return kind == Kind::Minus; }
    bool undecided() const { return kind == Kind::Undecided; }
};

struct GraphValue {
    enum class Kind { Finite, Divergent, Undetermined } kind = Kind::Undetermined;
    double value = 0;  // Finite only; value > 0
    double bound = 0;  // truncation error bound
    long terms = 0;
    long supercritical_windows = 0;

    bool finite() const { return kind == Kind::Finite; }
    bool divergent() const { return kind == Kind::Divergent; }
};

struct FibreTrajectory {
    std::vector<std::pair<double, double>> points; // (x_k, t_k), k = 0..n
    bool truncated = false;           // halted at the 1e300 overflow guard
    long partition_hits = 0;          // orbit landed exactly on a partition point
};

struct GridOptions {
    long max_iter = 2000;
    double escape_threshold = 0; // 0 = spec default
};

// Base map plus fibre data (f, lambda); hypotheses (H2)-(H4) are sampled
// on a 4096-point grid at construction.
class SkewProduct {
public:
    SkewProduct(IntervalMap base, FibreFunction f, FibreFunction lambda,
                double holder_alpha = 1.0);

    const IntervalMap& base() const { return base_; }
    const FibreFunction& f_fn() const { return f_; }
    const FibreFunction& lambda_fn() const { return lambda_; }
    double holder_alpha() const { return alpha_; }
    const HypothesisReport& hypotheses() const { return hyp_; }
    HypothesisReport& hypotheses() { return hyp_; }

    double f(double x, int hint = -1) const { return f_.eval(base_, x, hint); }
    double lam(double x, int hint = -1) const { return lambda_.eval(base_, x, hint); }
    double sup_f() const { return sup_f_; }
    double inf_f() const { return inf_f_; }
    double sup_lambda() const { return sup_lambda_; }
    double inf_lambda() const { return inf_lambda_; }
    double default_escape_threshold() const { return escape_default_; }
    std::string describe() const;

    FibreTrajectory iterate_fibre(double x, double t, long n) const;
    // (S_{n,lambda} f(x), lambda^n(x))
    std::pair<double, double> weighted_birkhoff(double x, long n) const;
    GraphValue invariant_graph_value(double x, double tol, long max_terms) const;
    BasinLabel classify_point(double x, double t, long max_iter,
                              double escape_threshold = 0) const;
    BasinLabel graph_sign_classify(double x, double t, double tol,
                                   long max_terms = 4000) const;
    // row-major, rows indexed by t, columns by x, cell centres
    std::vector<BasinLabel> basin_grid(double x_lo, double x_hi, double t_lo,
                                       double t_hi, int nx, int nt,
                                       const GridOptions& opts) const;

private:
    IntervalMap base_;
    FibreFunction f_, lambda_;
    double alpha_ = 1.0;
    double sup_f_ = 0, inf_f_ = 0, sup_lambda_ = 0, inf_lambda_ = 0;
    double escape_default_ = 0;
    HypothesisReport hyp_;
};

} // namespace riddle::dynamics
