#include "riddle/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace riddle::thermo {

namespace {

// 8-point Gauss-Legendre on [-1, 1]
constexpr double kGaussX[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
    0.7966664774136267, 0.9602898564975363};
constexpr double kGaussW[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};

constexpr double kRayleighTol = 1e-12;
constexpr double kResidualTol = 1e-10;
constexpr int kMaxPowerIters = 10000;

void csr_matvec(const std::vector<int>& row_ptr, const std::vector<int>& col,
                const std::vector<double>& val, const std::vector<double>& x,
                std::vector<double>& y) {
    const int n = static_cast<int>(row_ptr.size()) - 1;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (n >= 2048)
#endif
    for (int i = 0; i < n; ++i) {
        double acc = 0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            acc += val[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(col[k])];
        y[static_cast<std::size_t>(i)] = acc;
    }
}

void transpose_csr(int n, const std::vector<int>& row_ptr, const std::vector<int>& col,
                   const std::vector<double>& val, std::vector<int>& trp,
                   std::vector<int>& tcol, std::vector<double>& tval) {
    trp.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int c : col) ++trp[static_cast<std::size_t>(c) + 1];
    for (int i = 0; i < n; ++i) trp[static_cast<std::size_t>(i) + 1] += trp[i];
    tcol.resize(col.size());
    tval.resize(val.size());
    std::vector<int> next(trp.begin(), trp.end() - 1);
    for (int i = 0; i < n; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            int pos = next[static_cast<std::size_t>(col[k])]++;
            tcol[static_cast<std::size_t>(pos)] = i;
            tval[static_cast<std::size_t>(pos)] = val[static_cast<std::size_t>(k)];
        }
}

struct PowerResult {
    double rho = 0;
    std::vector<double> vec;
    double residual = 0;
    int iterations = 0;
};

PowerResult power_iterate(const std::vector<int>& row_ptr, const std::vector<int>& col,
                          const std::vector<double>& val) {
    const int n = static_cast<int>(row_ptr.size()) - 1;
    std::vector<double> v(static_cast<std::size_t>(n), 1.0), av(static_cast<std::size_t>(n));
    double rho_prev = 0;
    for (int it = 1; it <= kMaxPowerIters; ++it) {
        csr_matvec(row_ptr, col, val, v, av);
        double num = 0, den = 0;
        for (int i = 0; i < n; ++i) {
            num += v[static_cast<std::size_t>(i)] * av[static_cast<std::size_t>(i)];
            den += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
        }
        double rho = num / den;
        double vmax = 0;
        for (double a : av) vmax = std::max(vmax, std::fabs(a));
        if (!(vmax > 0) || !std::isfinite(rho))
            throw NonConvergence("power iteration collapsed");
        for (auto& a : av) a /= vmax;
        std::swap(v, av);

        if (std::fabs(rho - rho_prev) <= kRayleighTol * std::max(1.0, std::fabs(rho))) {
            // confirm with the residual before accepting
            csr_matvec(row_ptr, col, val, v, av);
            double res = 0;
            for (int i = 0; i < n; ++i)
                res = std::max(res, std::fabs(av[static_cast<std::size_t>(i)] -
                                              rho * v[static_cast<std::size_t>(i)]));
            res /= std::fabs(rho);
            if (res <= kResidualTol) {
                PowerResult out;
                out.rho = rho;
                out.vec = std::move(v);
                out.residual = res;
                out.iterations = it;
                return out;
            }
        }
        rho_prev = rho;
    }
    throw NonConvergence("power iteration did not converge within 10^4 iterations "
                         "(insufficiently mixing discretization?)");
}

} // namespace

// ---------------------------------------------------------------------------
// PotentialTerm

PotentialTerm PotentialTerm::custom(const expr::Expression& e) {
    PotentialTerm t;
    t.customs.emplace_back(1.0, std::make_shared<const expr::Expression>(e));
    return t;
}

PotentialTerm& PotentialTerm::operator+=(const PotentialTerm& o) {
    c_log_deriv += o.c_log_deriv;
    c_log_lambda += o.c_log_lambda;
    constant += o.constant;
    for (const auto& [c, e] : o.customs) customs.emplace_back(c, e);
    return *this;
}

PotentialTerm& PotentialTerm::operator-=(const PotentialTerm& o) {
    c_log_deriv -= o.c_log_deriv;
    c_log_lambda -= o.c_log_lambda;
    constant -= o.constant;
    for (const auto& [c, e] : o.customs) customs.emplace_back(-c, e);
    return *this;
}

PotentialTerm& PotentialTerm::operator*=(double s) {
    c_log_deriv *= s;
    c_log_lambda *= s;
    constant *= s;
    for (auto& [c, e] : customs) c *= s;
    return *this;
}

std::string PotentialTerm::describe() const {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g*log|T'| + %.17g*loglam + %.17g", c_log_deriv,
                  c_log_lambda, constant);
    std::string out = buf;
    for (const auto& [c, e] : customs) {
        std::snprintf(buf, sizeof buf, " + %.17g*(", c);
        out += buf;
        out += e->serialize();
        out += ')';
    }
    return out;
}

std::string method_name(DiscMethod m) {
    return m == DiscMethod::Collocation ? "collocation" : "ulam";
}

// ---------------------------------------------------------------------------
// TransferOperator

TransferOperator::TransferOperator(const dynamics::IntervalMap& map,
                                   const dynamics::FibreFunction* lambda, DiscSpec disc)
    : map_(&map), lambda_(lambda), disc_(disc) {
    if (disc_.n < 16)
        throw dynamics::ValidationError("discretization needs N >= 16");
    if (disc_.method == DiscMethod::Collocation)
        build_collocation();
    else
        build_ulam();
}

void TransferOperator::build_collocation() {
    const int n = disc_.n;
    nodes_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        nodes_[static_cast<std::size_t>(i)] = static_cast<double>(i) / (n - 1);

    row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    auto add_entry = [&](int c, double coeff, double y, int branch) {
        col_.push_back(c);
        coeff_.push_back(coeff);
        y_.push_back(y);
        log_deriv_.push_back(std::log(std::fabs(map_->deriv_on_branch(branch, y))));
        log_lambda_.push_back(lambda_ ? std::log(lambda_->eval(*map_, y, branch)) : 0.0);
    };
    for (int i = 0; i < n; ++i) {
        for (const auto& pre : map_->inverse_branches(nodes_[static_cast<std::size_t>(i)])) {
            // piecewise-linear hat interpolation of w at the preimage
            double pos = pre.y * (n - 1);
            int k = std::min(static_cast<int>(pos), n - 2);
            double theta = pos - k;
            add_entry(k, 1.0 - theta, pre.y, pre.branch);
            add_entry(k + 1, theta, pre.y, pre.branch);
        }
        row_ptr_[static_cast<std::size_t>(i) + 1] = static_cast<int>(col_.size());
    }
}

void TransferOperator::build_ulam() {
    const int n = disc_.n;
    const double h = 1.0 / n;
    nodes_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        nodes_[static_cast<std::size_t>(i)] = (i + 0.5) * h;

    row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 0; i < n; ++i) {
        double a = i * h;
        for (int g = 0; g < 8; ++g) {
            double xg = a + 0.5 * h * (1.0 + kGaussX[g]);
            // cell average of the weighted operator: masses w/2 per node
            for (const auto& pre : map_->inverse_branches(xg)) {
                int c = std::min(n - 1, static_cast<int>(pre.y * n));
                col_.push_back(c);
                coeff_.push_back(0.5 * kGaussW[g]);
                y_.push_back(pre.y);
                log_deriv_.push_back(
                    std::log(std::fabs(map_->deriv_on_branch(pre.branch, pre.y))));
                log_lambda_.push_back(
                    lambda_ ? std::log(lambda_->eval(*map_, pre.y, pre.branch)) : 0.0);
            }
        }
        row_ptr_[static_cast<std::size_t>(i) + 1] = static_cast<int>(col_.size());
    }
}

EigenTriple TransferOperator::solve(const std::vector<int>& row_ptr,
                                    const std::vector<int>& col,
                                    const std::vector<double>& val) const {
    const int n = static_cast<int>(row_ptr.size()) - 1;
    PowerResult right = power_iterate(row_ptr, col, val);

    std::vector<int> trp, tcol;
    std::vector<double> tval;
    transpose_csr(n, row_ptr, col, val, trp, tcol, tval);
    PowerResult left = power_iterate(trp, tcol, tval);

    EigenTriple eig;
    eig.rho = right.rho;
    eig.right = std::move(right.vec);
    eig.left = std::move(left.vec);
    eig.residual = right.residual;
    eig.iterations = right.iterations + left.iterations;

    double lmin = std::numeric_limits<double>::infinity(), lsum = 0;
    double rmin = std::numeric_limits<double>::infinity();
    for (double v : eig.left) { lmin = std::min(lmin, v); lsum += v; }
    for (double v : eig.right) rmin = std::min(rmin, v);
    if (!(lmin > 0) || !(rmin > 0))
        throw NonConvergence("leading eigenvectors are not entrywise positive");

    for (auto& v : eig.left) v /= lsum; // sum(left) = 1
    double dot = 0;
    for (int i = 0; i < n; ++i)
        dot += eig.left[static_cast<std::size_t>(i)] * eig.right[static_cast<std::size_t>(i)];
    for (auto& v : eig.right) v /= dot; // left . right = 1
    return eig;
}

TransferDiscretization TransferOperator::build(const PotentialTerm& weight) const {
    TransferDiscretization td;
    td.disc = disc_;
    td.row_ptr = row_ptr_;
    td.col = col_;
    td.val.resize(coeff_.size());

    std::vector<expr::Compiled> customs;
    customs.reserve(weight.customs.size());
    for (const auto& [c, e] : weight.customs) customs.emplace_back(*e);

    const std::size_t nnz = coeff_.size();
    for (std::size_t k = 0; k < nnz; ++k) {
        double psi = weight.c_log_deriv * log_deriv_[k] +
                     weight.c_log_lambda * log_lambda_[k] + weight.constant;
        for (std::size_t j = 0; j < customs.size(); ++j)
            psi += weight.customs[j].first * customs[j](y_[k]);
        td.val[k] = coeff_[k] * std::exp(psi);
    }
    td.eig = solve(td.row_ptr, td.col, td.val);
    return td;
}

double TransferOperator::pressure_value(const PotentialTerm& weight) const {
    std::vector<double> val(coeff_.size());
    std::vector<expr::Compiled> customs;
    customs.reserve(weight.customs.size());
    for (const auto& [c, e] : weight.customs) customs.emplace_back(*e);

    for (std::size_t k = 0; k < coeff_.size(); ++k) {
        double psi = weight.c_log_deriv * log_deriv_[k] +
                     weight.c_log_lambda * log_lambda_[k] + weight.constant;
        for (std::size_t j = 0; j < customs.size(); ++j)
            psi += weight.customs[j].first * customs[j](y_[k]);
        val[k] = coeff_[k] * std::exp(psi);
    }
    return std::log(power_iterate(row_ptr_, col_, val).rho);
}

double TransferOperator::equilibrium_integral(const PotentialTerm& psi,
                                              const PotentialTerm& g) const {
    TransferDiscretization td = build(psi);

    std::vector<expr::Compiled> customs;
    customs.reserve(g.customs.size());
    for (const auto& [c, e] : g.customs) customs.emplace_back(*e);

    double num = 0, den = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        double x = nodes_[i];
        int hint = map_->interval_of(x);
        double gx = g.constant;
        if (g.c_log_deriv != 0)
            gx += g.c_log_deriv * std::log(std::fabs(map_->deriv_on_branch(hint, x)));
        if (g.c_log_lambda != 0) {
            if (!lambda_)
                throw dynamics::ValidationError("integrand needs lambda but none is bound");
            gx += g.c_log_lambda * std::log(lambda_->eval(*map_, x, hint));
        }
        for (std::size_t j = 0; j < customs.size(); ++j)
            gx += g.customs[j].first * customs[j](x);
        num += td.eig.left[i] * gx * td.eig.right[i];
        den += td.eig.left[i] * td.eig.right[i];
    }
    double via_eigvec = num / den;

    const double eps = 1e-5;
    double via_derivative =
        (pressure_value(psi + eps * g) - pressure_value(psi - (eps * g))) / (2 * eps);

    if (std::fabs(via_eigvec - via_derivative) > 1e-3)
        throw MethodDisagreement(
            "equilibrium integral routes disagree: eigenvector " +
            std::to_string(via_eigvec) + " vs pressure derivative " +
            std::to_string(via_derivative) + " (under-resolved discretization?)");
    return via_eigvec;
}

// ---------------------------------------------------------------------------
// spec-facing free functions

TransferDiscretization build_operator(const dynamics::IntervalMap& map,
                                      const dynamics::FibreFunction* lambda,
                                      const PotentialTerm& weight, DiscSpec disc) {
    return TransferOperator(map, lambda, disc).build(weight);
}

PressureResult pressure(const dynamics::IntervalMap& map,
                        const dynamics::FibreFunction* lambda,
                        const PotentialTerm& potential, DiscSpec disc) {
    TransferOperator op(map, lambda, disc);
    PressureResult pr;
    pr.disc = op.build(potential);
    pr.p = std::log(pr.disc.eig.rho);
    return pr;
}

PotentialSpec normalise_potential(const dynamics::IntervalMap& map,
                                  const dynamics::FibreFunction* lambda,
                                  PotentialSpec phi, DiscSpec disc) {
    double p = TransferOperator(map, lambda, disc).pressure_value(phi.term);
    phi.term.constant -= p;
    phi.pressure_offset += p;
    phi.normalised = true;
    return phi;
}

double equilibrium_integral(const dynamics::IntervalMap& map,
                            const dynamics::FibreFunction* lambda,
                            const PotentialTerm& psi, const PotentialTerm& g,
                            DiscSpec disc) {
    return TransferOperator(map, lambda, disc).equilibrium_integral(psi, g);
}

LoynesResult loynes_exponent(const dynamics::SkewProduct& sp, const PotentialTerm& phi,
                             DiscSpec disc) {
    TransferOperator op(sp.base(), &sp.lambda_fn(), disc);

    LoynesResult out;
    out.p_prime_zero = op.equilibrium_integral(phi, PotentialTerm::log_lambda());
    if (out.p_prime_zero >= 0)
        throw HypothesisViolation("(H3) fails: int log lambda dmu = " +
                                  std::to_string(out.p_prime_zero) + " >= 0");

    auto p = [&](double s) {
        return op.pressure_value(phi + s * PotentialTerm::log_lambda());
    };

    double lo, hi, phi_lo, phi_hi;
    double p0 = op.pressure_value(phi);
    if (p0 > 1e-10) {
        // unnormalised phi with positive pressure: p crosses zero downward
        // (the degenerate branch; p'(s*) < 0 gets flagged below)
        lo = 0.0;
        phi_lo = p0;
        hi = 1.0;
        phi_hi = p(hi);
        while (phi_hi >= 0) {
            lo = hi;
            phi_lo = phi_hi;
            hi *= 2;
            if (hi > 256)
                throw NoRoot("pressure stays nonnegative up to s = 256");
            phi_hi = p(hi);
        }
    } else {
        hi = 1.0;
        phi_hi = p(hi);
        while (phi_hi <= 0) {
            hi *= 2;
            if (hi > 256)
                throw NoRoot("pressure stays nonpositive up to s = 256; no Loynes "
                             "exponent ((H3) zeta-condition unsatisfied in practice)");
            phi_hi = p(hi);
        }
        lo = hi / 2;
        phi_lo = p(lo);
        while (phi_lo >= 0) {
            lo /= 2;
            if (lo < 1e-9)
                throw NoRoot("no sign change above s = 0");
            phi_lo = p(lo);
        }
    }

    out.bracket_lo = lo;
    out.bracket_hi = hi;
    out.s_star = brent_root(p, lo, hi, phi_lo, phi_hi, 1e-10);

    const double h = 1e-5;
    out.p_prime = (p(out.s_star + h) - p(out.s_star - h)) / (2 * h);
    out.degenerate = !(out.p_prime > 0);
    return out;
}

std::string content_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PressureCurve pressure_curve(const dynamics::SkewProduct& sp, const PotentialTerm& phi,
                             const std::vector<double>& s_grid, DiscSpec disc,
                             const std::string& cache_path) {
    for (std::size_t i = 0; i + 1 < s_grid.size(); ++i)
        if (!(s_grid[i] < s_grid[i + 1]))
            throw dynamics::ValidationError("s_grid must be sorted increasing");

    PressureCurve curve;
    curve.content_hash = content_hash(sp.describe() + "|" + phi.describe() + "|" +
                                      method_name(disc.method) + "|" +
                                      std::to_string(disc.n));

    std::map<double, PressureCurveRow> cached;
    if (!cache_path.empty()) {
        std::ifstream in(cache_path);
        std::string line;
        if (in && std::getline(in, line) &&
            line.find("hash=" + curve.content_hash) != std::string::npos) {
            std::getline(in, line); // column header
            while (std::getline(in, line)) {
                PressureCurveRow row;
                char meth[32];
                int n = 0;
                if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%31[^,],%d", &row.s, &row.p,
                                &row.eigenvalue, &row.residual, meth, &n) == 6)
                    cached[row.s] = row;
            }
        }
    }

    TransferOperator op(sp.base(), &sp.lambda_fn(), disc);
    for (double s : s_grid) {
        auto it = cached.find(s);
        if (it != cached.end()) {
            curve.rows.push_back(it->second);
            curve.cache_hit = true;
            continue;
        }
        TransferDiscretization td = op.build(phi + s * PotentialTerm::log_lambda());
        PressureCurveRow row;
        row.s = s;
        row.eigenvalue = td.eig.rho;
        row.p = std::log(td.eig.rho);
        row.residual = td.eig.residual;
        curve.rows.push_back(row);
        cached[s] = row;
    }

    // second divided differences handle non-uniform grids
    curve.min_second_diff = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < curve.rows.size(); ++i) {
        double h0 = curve.rows[i].s - curve.rows[i - 1].s;
        double h1 = curve.rows[i + 1].s - curve.rows[i].s;
        double d2 = 2.0 * ((curve.rows[i + 1].p - curve.rows[i].p) / h1 -
                           (curve.rows[i].p - curve.rows[i - 1].p) / h0) /
                    (h0 + h1);
        curve.min_second_diff = std::min(curve.min_second_diff, d2);
    }
    if (curve.rows.size() >= 3 && curve.min_second_diff < -1e-8) curve.convex = false;

    if (!cache_path.empty()) {
        std::ofstream out(cache_path);
        if (out) {
            out << "# riddle-pressure-cache hash=" << curve.content_hash
                << " method=" << method_name(disc.method) << " N=" << disc.n << "\n";
            out << "s,p,eigenvalue,residual,method,N\n";
            char buf[256];
            for (const auto& [s, row] : cached) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%s,%d\n", row.s,
                              row.p, row.eigenvalue, row.residual,
                              method_name(disc.method).c_str(), disc.n);
                out << buf;
            }
        }
    }
    return curve;
}

double brent_root(const std::function<double(double)>& f, double a, double b, double fa,
                  double fb, double ftol, int max_iter) {
    if (std::fabs(fa) <= ftol) return a;
    if (std::fabs(fb) <= ftol) return b;
    if ((fa > 0) == (fb > 0))
        throw NonConvergence("brent: root not bracketed");

    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int it = 0; it < max_iter; ++it) {
        if ((fb > 0) == (fc > 0)) {
            c = a; fc = fa;
            d = b - a; e = d;
        }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        double tol1 = 2 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 1e-16;
        double xm = 0.5 * (c - b);
        if (std::fabs(fb) <= ftol) return b;
        if (std::fabs(xm) <= tol1) {
            if (std::fabs(fb) <= 10 * ftol) return b;
            throw NonConvergence("brent: interval exhausted before |f| <= ftol");
        }
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double s = fb / fa, p, q;
            if (a == c) { // secant
                p = 2 * xm * s;
                q = 1 - s;
            } else { // inverse quadratic
                double qq = fa / fc, r = fb / fc;
                p = s * (2 * xm * qq * (qq - r) - (b - a) * (r - 1));
                q = (qq - 1) * (r - 1) * (s - 1);
            }
            if (p > 0) q = -q;
            p = std::fabs(p);
            if (2 * p < std::min(3 * xm * q - std::fabs(tol1 * q), std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::fabs(d) > tol1 ? d : (xm > 0 ? tol1 : -tol1);
        fb = f(b);
    }
    throw NonConvergence("brent: maximum iterations reached");
}

} // namespace riddle::thermo
