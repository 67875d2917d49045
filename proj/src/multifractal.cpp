#include "riddle/multifractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riddle::multifractal {

namespace {

using thermo::PotentialTerm;

PotentialTerm potential_q(double q, double s_star, double S) {
    return (-S) * PotentialTerm::log_deriv() + (q * s_star) * PotentialTerm::log_lambda();
}

} // namespace

double S_of_q(const thermo::TransferOperator& op, double q, double s_star) {
    auto F = [&](double S) { return op.pressure_value(potential_q(q, s_star, S)); };

    // F is strictly decreasing in S (dP/dS = -int log|T'| dmu < 0)
    double lo = 0.0, hi = 4.0;
    double flo = F(lo), fhi = F(hi);
    while (flo < 0) {
        lo -= 4.0;
        if (lo < -8.0)
            throw BracketFailure("no sign change for S(q) in [-8, 8] at q = " +
                                 std::to_string(q));
        flo = F(lo);
    }
    while (fhi > 0) {
        hi += 4.0;
        if (hi > 8.0)
            throw BracketFailure("no sign change for S(q) in [-8, 8] at q = " +
                                 std::to_string(q));
        fhi = F(hi);
    }
    return thermo::brent_root(F, lo, hi, flo, fhi, 1e-9);
}

double alpha_of_q(const thermo::TransferOperator& op, double q, double s_star) {
    double S = S_of_q(op, q, s_star);
    PotentialTerm psi = potential_q(q, s_star, S);
    double int_lambda = op.equilibrium_integral(psi, PotentialTerm::log_lambda());
    double int_deriv = op.equilibrium_integral(psi, PotentialTerm::log_deriv());
    double via_ratio = -s_star * int_lambda / int_deriv;

    const double h = 1e-4;
    double via_fd = -(S_of_q(op, q + h, s_star) - S_of_q(op, q - h, s_star)) / (2 * h);
    if (std::fabs(via_ratio - via_fd) > 1e-3)
        throw RouteDisagreement("alpha routes disagree at q = " + std::to_string(q) +
                                ": ratio " + std::to_string(via_ratio) + " vs dS/dq " +
                                std::to_string(via_fd));
    return via_ratio;
}

namespace {

// int log lambda dmu_q, the function whose root is q*
double lambda_integral_at(const thermo::TransferOperator& op, double q, double s_star) {
    double S = S_of_q(op, q, s_star);
    return op.equilibrium_integral(potential_q(q, s_star, S),
                                   PotentialTerm::log_lambda());
}

} // namespace

double q_star(const thermo::TransferOperator& op, double s_star, bool srb_case) {
    auto G = [&](double q) { return lambda_integral_at(op, q, s_star); };

    // initial bracket [-4, 4]; an endpoint whose S(q) solve fails (S outside
    // the [-8, 8] window, which happens for strongly negative q when s* is
    // large) is pulled toward 0 until it becomes evaluable
    double lo = -4.0, hi = 4.0;
    double glo = 0, ghi = 0;
    bool have_lo = false, have_hi = false;
    for (int tries = 0; tries < 16 && !have_lo; ++tries) {
        try {
            glo = G(lo);
            have_lo = true;
        } catch (const BracketFailure&) {
            lo *= 0.5;
        }
    }
    for (int tries = 0; tries < 16 && !have_hi; ++tries) {
        try {
            ghi = G(hi);
            have_hi = true;
        } catch (const BracketFailure&) {
            hi *= 0.5;
        }
    }
    if (!have_lo || !have_hi)
        throw BracketFailure("could not evaluate int log lambda dmu_q near [-4, 4]");
    if (glo >= 0 || ghi <= 0)
        throw BracketFailure("no sign change of int log lambda dmu_q in [" +
                             std::to_string(lo) + ", " + std::to_string(hi) + "]");

    double root = thermo::brent_root(G, lo, hi, glo, ghi, 1e-6);
    if (srb_case && !(root > 0.0 && root < 1.0))
        throw BracketFailure("SRB case requires q* in (0,1); got " + std::to_string(root));
    return root;
}

std::vector<double> uniform_grid(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i)
        out.push_back(lo + (hi - lo) * i / (n - 1));
    return out;
}

SpectrumResult spectrum(const thermo::TransferOperator& op, double s_star,
                        const std::vector<double>& q_grid, bool srb_case) {
    for (std::size_t i = 0; i + 1 < q_grid.size(); ++i)
        if (!(q_grid[i] < q_grid[i + 1]))
            throw dynamics::ValidationError("q_grid must be sorted increasing");

    SpectrumResult res;
    res.diagnostics.q_star = q_star(op, s_star, srb_case);
    res.diagnostics.s_zero = S_of_q(op, 0.0, s_star);

    for (double q : q_grid) {
        SpectrumPoint pt;
        pt.q = q;
        pt.valid = q < res.diagnostics.q_star;
        try {
            pt.S = S_of_q(op, q, s_star);
            pt.pressure_residual =
                std::fabs(op.pressure_value(potential_q(q, s_star, pt.S)));
            pt.alpha = alpha_of_q(op, q, s_star);
            pt.f_dim = pt.S + q * pt.alpha;
            pt.int_log_lambda = op.equilibrium_integral(
                potential_q(q, s_star, pt.S), PotentialTerm::log_lambda());
        } catch (const Error& e) {
            pt.error = e.what();
            pt.valid = false;
        }
        res.points.push_back(pt);
    }

    // diagnostics over successfully computed points
    std::vector<const SpectrumPoint*> ok;
    for (const auto& pt : res.points)
        if (pt.error.empty()) ok.push_back(&pt);

    res.diagnostics.min_second_diff = std::numeric_limits<double>::infinity();
    res.diagnostics.s_convex = ok.size() >= 3;
    for (std::size_t i = 1; i + 1 < ok.size(); ++i) {
        double d2 = ok[i + 1]->S - 2 * ok[i]->S + ok[i - 1]->S;
        res.diagnostics.min_second_diff = std::min(res.diagnostics.min_second_diff, d2);
        if (d2 <= 0) res.diagnostics.s_convex = false;
    }

    res.diagnostics.alpha_decreasing = ok.size() >= 2;
    for (std::size_t i = 1; i < ok.size(); ++i)
        if (!(ok[i]->alpha < ok[i - 1]->alpha)) res.diagnostics.alpha_decreasing = false;

    res.diagnostics.f_below_ambient = true;
    for (const auto* pt : ok)
        if (pt->valid && pt->f_dim > res.diagnostics.s_zero + 1e-6)
            res.diagnostics.f_below_ambient = false;

    return res;
}

} // namespace riddle::multifractal
