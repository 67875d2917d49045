#include "riddle/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "riddle/multifractal.hpp"
#include "riddle/report.hpp"
#include "riddle/stability.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace riddle::cli {

namespace {

namespace fs = std::filesystem;
using config::CsvWriter;
using config::format_full;
using config::RunConfig;
using config::SvgWriter;
using dynamics::BasinLabel;
using dynamics::SkewProduct;
using stability::DensityTable;
using stability::MeasureKind;
using stability::SamplerSpec;
using thermo::PotentialTerm;

std::string outpath(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

std::vector<std::string> csv_comments(const RunConfig& cfg, const std::string& command) {
    return {"riddle " + command, "config_hash=" + cfg.content_hash,
            "seed=" + std::to_string(cfg.seed)};
}

void apply_threads(const RunConfig& cfg) {
#ifdef _OPENMP
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
#else
    (void)cfg;
#endif
}

struct NormalisedPotential {
    PotentialTerm term;
    double offset = 0;
};

NormalisedPotential normalised_potential(const RunConfig& cfg,
                                         const dynamics::SkewProduct& sp) {
    thermo::TransferOperator op(sp.base(), &sp.lambda_fn(), cfg.disc);
    PotentialTerm raw = cfg.raw_potential();
    double p = op.pressure_value(raw);
    NormalisedPotential out;
    out.term = raw + PotentialTerm::constant_term(-p);
    out.offset = p;
    return out;
}

struct SamplerSetup {
    MeasureKind kind = MeasureKind::LebesgueSRB;
    std::shared_ptr<const DensityTable> table;
};

SamplerSetup make_sampler(const RunConfig& cfg, const SkewProduct& sp,
                          const PotentialTerm& psi_normalised) {
    SamplerSetup setup;
    bool lebesgue_exact = cfg.potential_srb && sp.base().constant_slope_full_branch();
    std::string mode = cfg.sampler;
    if (mode == "auto") mode = lebesgue_exact ? "lebesgue" : "ulam";
    if (mode == "lebesgue") {
        setup.kind = MeasureKind::LebesgueSRB;
    } else {
        setup.kind = MeasureKind::UlamDensity;
        int cells = std::max(2048, cfg.disc.n);
        setup.table = std::make_shared<DensityTable>(sp.base(), &sp.lambda_fn(),
                                                     psi_normalised, cells);
    }
    return setup;
}

const char* verdict_name(dynamics::HypothesisEntry::Verdict v) {
    switch (v) {
    case dynamics::HypothesisEntry::Verdict::Holds: return "holds";
    case dynamics::HypothesisEntry::Verdict::Fails: return "FAILS";
    default: return "unknown";
    }
}

std::string label_name(const BasinLabel& l) {
    if (l.plus()) return "plus";
    if (l.minus()) return "minus";
    return "undecided";
}

// "typical" | number, then ":" and "+d" | "-d" | "on" | "=v"
struct PointSpec {
    bool typical = false;
    double x = 0;
    enum class TKind { OffsetAbove, OffsetBelow, OnGraph, Absolute } tkind;
    double tval = 0;
};

PointSpec parse_point(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw config::ConfigError("stability point needs the form x:tspec, got " + text);
    PointSpec ps;
    std::string xs = text.substr(0, colon);
    if (xs == "typical") {
        ps.typical = true;
    } else {
        ps.x = std::stod(xs);
        if (ps.x < 0 || ps.x > 1)
            throw config::ConfigError("stability point x outside [0,1]: " + text);
    }
    std::string ts = text.substr(colon + 1);
    if (ts == "on") {
        ps.tkind = PointSpec::TKind::OnGraph;
    } else if (!ts.empty() && ts[0] == '+') {
        ps.tkind = PointSpec::TKind::OffsetAbove;
        ps.tval = std::stod(ts.substr(1));
    } else if (!ts.empty() && ts[0] == '-') {
        ps.tkind = PointSpec::TKind::OffsetBelow;
        ps.tval = std::stod(ts.substr(1));
    } else if (!ts.empty() && ts[0] == '=') {
        ps.tkind = PointSpec::TKind::Absolute;
        ps.tval = std::stod(ts.substr(1));
    } else {
        throw config::ConfigError("bad t spec in stability point: " + text);
    }
    return ps;
}

} // namespace

// ---------------------------------------------------------------------------

int cmd_check(const RunConfig& cfg, std::ostream& log) {
    apply_threads(cfg);
    log << "riddle check  (config " << cfg.content_hash << ")\n";

    SkewProduct* built = nullptr;
    std::optional<SkewProduct> sp;
    try {
        sp.emplace(cfg.build_skew());
        built = &*sp;
    } catch (const dynamics::ValidationError& e) {
        log << "(H1/H2/H3) FAILS  " << e.what() << "\n";
        return 2;
    }

    const auto& hyp = built->hypotheses();
    log << "(H1) " << verdict_name(hyp.h1.verdict)
        << "   uniformly expanding Markov map: inf |T'| = " << hyp.h1.witness
        << ", markov endpoint gap = " << built->base().markov_check().worst_endpoint_gap
        << ", " << hyp.h1.note << "\n";
    log << "(H2) " << verdict_name(hyp.h2.verdict) << "   min f = " << hyp.h2.witness
        << " > 0\n";
    log << "(H3) " << verdict_name(hyp.h3.verdict) << "   min lambda = " << hyp.h3.witness
        << " > 0\n";

    NormalisedPotential phi = normalised_potential(cfg, *built);
    thermo::TransferOperator op(built->base(), &built->lambda_fn(), cfg.disc);
    double integral = op.equilibrium_integral(phi.term, PotentialTerm::log_lambda());
    log << "(H3) " << (integral < 0 ? "holds" : "FAILS")
        << "   int log lambda dmu = " << integral << (integral < 0 ? " < 0" : " >= 0")
        << "  (potential offset " << phi.offset << ")\n";

    if (!cfg.zeta_orbit.empty()) {
        double sum = 0;
        double closure = 0;
        for (std::size_t i = 0; i < cfg.zeta_orbit.size(); ++i) {
            double x = cfg.zeta_orbit[i];
            double next = cfg.zeta_orbit[(i + 1) % cfg.zeta_orbit.size()];
            closure = std::max(closure, std::fabs(built->base().apply(x) - next));
            sum += std::log(built->lam(x));
        }
        double avg = sum / static_cast<double>(cfg.zeta_orbit.size());
        log << "(H3) " << (avg > 0 ? "holds" : "FAILS")
            << "   zeta witness orbit average of log lambda = " << avg
            << (closure > 1e-9 ? "  [warning: orbit not closed, residual " +
                                     std::to_string(closure) + "]"
                               : "")
            << "\n";
    } else {
        log << "(H3) unknown zeta witness orbit not supplied "
               "([check] zeta_orbit)\n";
    }

    log << "(H4) " << verdict_name(hyp.h4.verdict)
        << "   m(lambda) m(|T'|)^alpha = " << std::setprecision(12) << hyp.h4.witness
        << (hyp.h4.verdict == dynamics::HypothesisEntry::Verdict::Holds
                ? " > 1"
                : " <= 1  [warning only: Theorem-1.1-type results need (H1)-(H3)]")
        << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_graph(const RunConfig& cfg, std::ostream& log) {
    apply_threads(cfg);
    SkewProduct sp = cfg.build_skew();

    std::vector<double> xs;
    for (int i = 0; i <= cfg.graph_nx; ++i)
        xs.push_back(static_cast<double>(i) / cfg.graph_nx);
    for (double x : cfg.graph_points) xs.push_back(x);

    CsvWriter csv(outpath(cfg, "graph.csv"), csv_comments(cfg, "graph"),
                  {"x", "status", "u", "bound", "terms"});
    long finite = 0, divergent = 0, undetermined = 0;
    for (double x : xs) {
        auto gv = sp.invariant_graph_value(x, cfg.graph_tol, cfg.graph_max_terms);
        std::string status, u, bound;
        if (gv.finite()) {
            ++finite;
            status = "FINITE";
            u = format_full(gv.value);
            bound = format_full(gv.bound);
        } else if (gv.divergent()) {
            ++divergent;
            status = "DIVERGENT";
        } else {
            ++undetermined;
            status = "UNDETERMINED";
        }
        csv.row({format_full(x), status, u, bound, std::to_string(gv.terms)});
    }
    csv.close();
    log << "graph: " << finite << " finite, " << divergent << " divergent, "
        << undetermined << " undetermined -> " << outpath(cfg, "graph.csv") << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_basin(const RunConfig& cfg, std::ostream& log) {
    apply_threads(cfg);
    SkewProduct sp = cfg.build_skew();

    dynamics::GridOptions opts;
    opts.max_iter = cfg.basin_max_iter;
    opts.escape_threshold = cfg.basin_escape;
    auto grid = sp.basin_grid(cfg.basin_x_lo, cfg.basin_x_hi, cfg.basin_t_lo,
                              cfg.basin_t_hi, cfg.basin_nx, cfg.basin_nt, opts);

    double dx = (cfg.basin_x_hi - cfg.basin_x_lo) / cfg.basin_nx;
    double dt = (cfg.basin_t_hi - cfg.basin_t_lo) / cfg.basin_nt;

    CsvWriter csv(outpath(cfg, "basin.csv"), csv_comments(cfg, "basin"),
                  {"x", "t", "label"});
    for (int j = 0; j < cfg.basin_nt; ++j)
        for (int i = 0; i < cfg.basin_nx; ++i) {
            double x = cfg.basin_x_lo + (i + 0.5) * dx;
            double t = cfg.basin_t_lo + (j + 0.5) * dt;
            csv.row({format_full(x), format_full(t),
                     label_name(grid[static_cast<std::size_t>(j) * cfg.basin_nx + i])});
        }
    csv.close();

    // SVG raster, one run-length-merged row of rects per grid row
    const double W = 640, H = 640;
    SvgWriter svg(W, H);
    svg.rect(0, 0, W, H, "#f5f0e8"); // B+ background
    double cw = W / cfg.basin_nx, ch = H / cfg.basin_nt;
    for (int j = 0; j < cfg.basin_nt; ++j) {
        double y = H - (j + 1) * ch; // SVG y grows downward
        int i = 0;
        while (i < cfg.basin_nx) {
            const BasinLabel& l = grid[static_cast<std::size_t>(j) * cfg.basin_nx + i];
            int run = 1;
            while (i + run < cfg.basin_nx &&
                   grid[static_cast<std::size_t>(j) * cfg.basin_nx + i + run].kind == l.kind)
                ++run;
            if (l.minus())
                svg.rect(i * cw, y, run * cw, ch, "#35506e");
            else if (l.undecided())
                svg.rect(i * cw, y, run * cw, ch, "#c84b32");
            i += run;
        }
    }
    svg.save(outpath(cfg, "basin.svg"));

    // minus fraction per horizontal band of height 1 (or 12 equal bands)
    int bands = 12;
    log << "basin grid " << cfg.basin_nx << "x" << cfg.basin_nt << " on ["
        << cfg.basin_x_lo << "," << cfg.basin_x_hi << "]x[" << cfg.basin_t_lo << ","
        << cfg.basin_t_hi << "]\n";
    long undecided_total = 0;
    for (int b = 0; b < bands; ++b) {
        int j0 = b * cfg.basin_nt / bands, j1 = (b + 1) * cfg.basin_nt / bands;
        long minus = 0, tot = 0;
        for (int j = j0; j < j1; ++j)
            for (int i = 0; i < cfg.basin_nx; ++i) {
                ++tot;
                const auto& l = grid[static_cast<std::size_t>(j) * cfg.basin_nx + i];
                if (l.minus()) ++minus;
                if (l.undecided()) ++undecided_total;
            }
        double t0 = cfg.basin_t_lo + (cfg.basin_t_hi - cfg.basin_t_lo) * b / bands;
        double t1 = cfg.basin_t_lo + (cfg.basin_t_hi - cfg.basin_t_lo) * (b + 1) / bands;
        log << "  band t in [" << t0 << "," << t1
            << "): minus fraction = " << static_cast<double>(minus) / tot << "\n";
    }
    log << "  undecided cells: " << undecided_total << " -> basin.csv, basin.svg\n";
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_loynes(const RunConfig& cfg, std::ostream& log) {
    apply_threads(cfg);
    SkewProduct sp = cfg.build_skew();
    NormalisedPotential phi = normalised_potential(cfg, sp);

    auto loynes = thermo::loynes_exponent(sp, phi.term, cfg.disc);
    log << "thermodynamic s* = " << std::setprecision(12) << loynes.s_star
        << "  (p'(s*) = " << loynes.p_prime << ", bracket [" << loynes.bracket_lo << ", "
        << loynes.bracket_hi << "], p'(0) = " << loynes.p_prime_zero << ")\n";
    if (loynes.degenerate)
        log << "  warning: p'(s*) <= 0, degenerate root (constant-like lambda?)\n";

    SamplerSetup sampler = make_sampler(cfg, sp, phi.term);
    SamplerSpec spec{sampler.kind, cfg.seed, 0};
    stability::McOptions opts;
    opts.streams = cfg.streams;
    opts.max_terms = cfg.tail_max_terms;
    auto tail = stability::empirical_tail_exponent(sp, spec, cfg.tail_samples, cfg.m_grid,
                                                   opts, sampler.table);

    double gap = std::fabs(tail.fit.slope - loynes.s_star) / loynes.s_star;
    log << "empirical tail slope = " << tail.fit.slope << " +- "
        << tail.fit.standard_error << "  (r^2 = " << tail.fit.r_squared << ", "
        << tail.n_samples << " samples, " << tail.divergent << " divergent)\n";
    log << "relative gap = " << gap << "\n";

    auto comments = csv_comments(cfg, "loynes");
    comments.push_back("s_star_thermo=" + format_full(loynes.s_star));
    comments.push_back("s_star_empirical=" + format_full(tail.fit.slope));
    comments.push_back("relative_gap=" + format_full(gap));
    CsvWriter csv(outpath(cfg, "loynes.csv"), comments,
                  {"M", "count", "fraction", "log_M", "neg_log_fraction"});
    for (std::size_t j = 0; j < cfg.m_grid.size(); ++j) {
        double frac = static_cast<double>(tail.counts[j]) / tail.n_samples;
        csv.row({format_full(cfg.m_grid[j]), std::to_string(tail.counts[j]),
                 format_full(frac), format_full(std::log(cfg.m_grid[j])),
                 format_full(-std::log(frac))});
    }
    csv.close();
    log << "-> " << outpath(cfg, "loynes.csv") << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_stability(const RunConfig& cfg, std::ostream& log) {
    apply_threads(cfg);
    SkewProduct sp = cfg.build_skew();
    NormalisedPotential phi = normalised_potential(cfg, sp);
    auto loynes = thermo::loynes_exponent(sp, phi.term, cfg.disc);
    double predicted =
        stability::predicted_stability_index(sp, phi.term, cfg.disc, loynes.s_star);
    log << "s* = " << std::setprecision(12) << loynes.s_star
        << ", predicted sigma (above graph) = " << predicted << "\n";

    SamplerSetup sampler = make_sampler(cfg, sp, phi.term);
    auto schedule = stability::geometric_schedule(cfg.r_hi, cfg.r_lo, cfg.n_scales);
    stability::McOptions opts;
    opts.streams = cfg.streams;
    opts.max_iter = cfg.stability_max_iter;

    stability::Sampler pick({sampler.kind, cfg.seed, 900000}, sampler.table);
    bool any_inconclusive = false;
    std::uint64_t stream_base = 0;

    for (std::size_t k = 0; k < cfg.points.size(); ++k) {
        PointSpec ps = parse_point(cfg.points[k]);
        double x = ps.typical ? pick.sample() : ps.x;
        auto gv = sp.invariant_graph_value(x, 1e-9, cfg.graph_max_terms);
        double t = 0;
        std::string verdict;
        switch (ps.tkind) {
        case PointSpec::TKind::OffsetAbove:
        case PointSpec::TKind::OffsetBelow:
        case PointSpec::TKind::OnGraph: {
            if (!gv.finite())
                throw config::ConfigError(
                    "graph value not finite at x = " + std::to_string(x) +
                    "; offset/on t specs need a finite graph");
            double off = ps.tkind == PointSpec::TKind::OffsetAbove  ? ps.tval
                         : ps.tkind == PointSpec::TKind::OffsetBelow ? -ps.tval
                                                                     : 0.0;
            t = gv.value + off;
            verdict = off > 0 ? "above" : off < 0 ? "below" : "on";
            break;
        }
        case PointSpec::TKind::Absolute: {
            t = ps.tval;
            auto side = sp.graph_sign_classify(x, t, 1e-9, cfg.graph_max_terms);
            verdict = side.plus() ? "above" : side.minus() ? "below" : "on/undecided";
            break;
        }
        }

        log << "point " << k << ": x = " << x << ", t = " << t << " (" << verdict
            << " the graph)\n";

        SamplerSpec spec{sampler.kind, cfg.seed, stream_base};
        stream_base += static_cast<std::uint64_t>(cfg.streams) *
                       static_cast<std::uint64_t>(cfg.n_scales + 1);

        std::string csvname = "stability_" + std::to_string(k) + ".csv";
        try {
            auto est = stability::estimate_stability_index(sp, spec, x, t, schedule,
                                                           cfg.n_per_r, opts, sampler.table);
            auto comments = csv_comments(cfg, "stability");
            comments.push_back("x=" + format_full(x));
            comments.push_back("t=" + format_full(t));
            comments.push_back("verdict=" + verdict);
            comments.push_back("predicted_sigma=" + format_full(predicted));
            CsvWriter csv(outpath(cfg, csvname), comments,
                          {"r", "minus_frac", "plus_frac", "undecided_frac", "n"});
            for (const auto& row : est.rows)
                csv.row({format_full(row.r), format_full(row.minus_frac),
                         format_full(row.plus_frac), format_full(row.undecided_frac),
                         std::to_string(row.n)});
            csv.close();

            auto side_text = [](const stability::SideIndex& s) {
                if (s.infinite()) return std::string("infinite (identically zero)");
                std::ostringstream os;
                os << s.fit.slope << " +- " << s.fit.standard_error
                   << " (r^2 = " << s.fit.r_squared << ")";
                return os.str();
            };
            log << "  sigma-hat minus: " << side_text(est.minus) << "\n";
            log << "  sigma-hat plus:  " << side_text(est.plus) << "\n";
            // signed index sigma = sigma+ - sigma-, assembled here
            if (est.plus.infinite())
                log << "  signed index: +infinity (Theorem 1.2(ii) regime)\n";
            else if (est.minus.infinite())
                log << "  signed index: -infinity\n";
            else
                log << "  signed index: " << est.plus.fit.slope - est.minus.fit.slope
                    << "  (predicted " << predicted << ")\n";
        } catch (const stability::Inconclusive& e) {
            any_inconclusive = true;
            log << "  inconclusive: " << e.what() << "\n";
        }
    }
    return any_inconclusive ? 4 : 0;
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const RunConfig& cfg, std::ostream& log) {
    apply_threads(cfg);
    SkewProduct sp = cfg.build_skew();
    NormalisedPotential phi = normalised_potential(cfg, sp);
    auto loynes = thermo::loynes_exponent(sp, phi.term, cfg.disc);

    thermo::TransferOperator op(sp.base(), &sp.lambda_fn(), cfg.disc);
    double qs = multifractal::q_star(op, loynes.s_star, cfg.potential_srb);
    auto grid = multifractal::uniform_grid(cfg.q_min, qs - cfg.q_max_offset, cfg.n_q);
    auto res = multifractal::spectrum(op, loynes.s_star, grid, cfg.potential_srb);

    log << "s* = " << std::setprecision(12) << loynes.s_star << ", q* = " << qs
        << ", S(0) = " << res.diagnostics.s_zero << "\n";
    log << "S strictly convex on grid: " << (res.diagnostics.s_convex ? "yes" : "NO")
        << " (min second difference " << res.diagnostics.min_second_diff << ")\n";
    log << "alpha strictly decreasing: " << (res.diagnostics.alpha_decreasing ? "yes" : "NO")
        << ", f <= S(0): " << (res.diagnostics.f_below_ambient ? "yes" : "NO") << "\n";

    auto comments = csv_comments(cfg, "spectrum");
    comments.push_back("s_star=" + format_full(loynes.s_star));
    comments.push_back("q_star=" + format_full(qs));
    CsvWriter csv(outpath(cfg, "spectrum.csv"), comments,
                  {"q", "S", "alpha", "f_dim", "int_log_lambda", "pressure_residual",
                   "valid", "error"});
    for (const auto& pt : res.points)
        csv.row({format_full(pt.q), format_full(pt.S), format_full(pt.alpha),
                 format_full(pt.f_dim), format_full(pt.int_log_lambda),
                 format_full(pt.pressure_residual), pt.valid ? "true" : "false",
                 pt.error});
    csv.close();

    // two panels: (alpha, f) spectrum and (q, S) with the q* frontier
    const double W = 900, H = 420, panel = 400, margin = 40;
    SvgWriter svg(W, H);
    svg.rect(0, 0, W, H, "#ffffff");
    auto draw_panel = [&](double ox, const std::vector<std::pair<double, double>>& pts,
                          const std::string& xlabel, const std::string& ylabel,
                          double mark_x, bool mark) {
        if (pts.empty()) return;
        double xlo = pts[0].first, xhi = xlo, ylo = pts[0].second, yhi = ylo;
        for (auto [a, b] : pts) {
            xlo = std::min(xlo, a); xhi = std::max(xhi, a);
            ylo = std::min(ylo, b); yhi = std::max(yhi, b);
        }
        if (xhi - xlo < 1e-12) xhi = xlo + 1;
        if (yhi - ylo < 1e-12) yhi = ylo + 1;
        auto X = [&](double v) { return ox + margin + (v - xlo) / (xhi - xlo) * (panel - 2 * margin); };
        auto Y = [&](double v) { return H - margin - (v - ylo) / (yhi - ylo) * (H - 2 * margin); };
        svg.line(X(xlo), Y(ylo), X(xhi), Y(ylo), "#888888");
        svg.line(X(xlo), Y(ylo), X(xlo), Y(yhi), "#888888");
        std::vector<std::pair<double, double>> mapped;
        for (auto [a, b] : pts) mapped.emplace_back(X(a), Y(b));
        svg.polyline(mapped, "#35506e", 1.5);
        if (mark && mark_x > xlo && mark_x < xhi)
            svg.line(X(mark_x), Y(ylo), X(mark_x), Y(yhi), "#c84b32", 1.0);
        svg.text(ox + panel / 2 - 10, H - 8, xlabel);
        svg.text(ox + 6, margin - 8, ylabel);
    };
    std::vector<std::pair<double, double>> falpha, qS;
    for (const auto& pt : res.points)
        if (pt.error.empty()) {
            if (pt.valid) falpha.emplace_back(pt.alpha, pt.f_dim);
            qS.emplace_back(pt.q, pt.S);
        }
    draw_panel(0, falpha, "alpha", "f", 0, false);
    draw_panel(panel + 60, qS, "q", "S", qs, true);
    svg.save(outpath(cfg, "spectrum.svg"));
    log << "-> " << outpath(cfg, "spectrum.csv") << ", spectrum.svg\n";
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_pressure(const RunConfig& cfg, std::ostream& log) {
    apply_threads(cfg);
    SkewProduct sp = cfg.build_skew();
    NormalisedPotential phi = normalised_potential(cfg, sp);

    fs::create_directories(cfg.output_dir);
    std::string cache = outpath(cfg, "pressure_cache.csv");
    auto curve = thermo::pressure_curve(sp, phi.term, cfg.s_grid, cfg.disc, cache);

    log << "pressure curve (" << thermo::method_name(cfg.disc.method) << " N = "
        << cfg.disc.n << ", cache " << (curve.cache_hit ? "hit" : "miss") << ")\n";
    log << std::setw(10) << "s" << std::setw(18) << "p(s)" << std::setw(18)
        << "eigenvalue" << std::setw(14) << "residual" << "\n";
    for (const auto& row : curve.rows)
        log << std::setw(10) << row.s << "  " << std::setw(18) << std::setprecision(12)
            << row.p << "  " << std::setw(18) << row.eigenvalue << "  " << std::setw(12)
            << row.residual << "\n";
    log << "convex on grid: " << (curve.convex ? "yes" : "NO")
        << " (min second difference " << curve.min_second_diff << ") -> " << cache
        << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log) {
    try {
        if (name == "check") return cmd_check(cfg, log);
        if (name == "basin") return cmd_basin(cfg, log);
        if (name == "loynes") return cmd_loynes(cfg, log);
        if (name == "stability") return cmd_stability(cfg, log);
        if (name == "spectrum") return cmd_spectrum(cfg, log);
        if (name == "graph") return cmd_graph(cfg, log);
        if (name == "pressure") return cmd_pressure(cfg, log);
        log << "unknown command: " << name << "\n";
        return 2;
    } catch (const config::ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return 2;
    } catch (const dynamics::ValidationError& e) {
        log << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const thermo::HypothesisViolation& e) {
        log << "hypothesis violation: " << e.what() << "\n";
        return 2;
    } catch (const config::IoError& e) {
        log << "i/o error: " << e.what() << "\n";
        return 3;
    } catch (const stability::InsufficientTail& e) {
        log << "inconclusive statistics: " << e.what() << "\n";
        return 4;
    } catch (const stability::RejectionStall& e) {
        log << "inconclusive statistics: " << e.what() << "\n";
        return 4;
    } catch (const stability::Inconclusive& e) {
        log << "inconclusive statistics: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        log << "error (" << e.kind() << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace riddle::cli
