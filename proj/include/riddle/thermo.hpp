#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "riddle/dynamics.hpp"
#include "riddle/errors.hpp"
#include "riddle/expr.hpp"

namespace riddle::thermo {

// Linear combination  a log|T'| + b log lambda + sum c_k g_k + constant.
// Every potential and every operator weight used here has this form, so
// sums and scalar multiples stay closed.
struct PotentialTerm {
    double c_log_deriv = 0;
    double c_log_lambda = 0;
    double constant = 0;
    std::vector<std::pair<double, std::shared_ptr<const expr::Expression>>> customs;

    static PotentialTerm srb() { return {-1.0, 0.0, 0.0, {}}; }
    static PotentialTerm log_lambda() { return {0.0, 1.0, 0.0, {}}; }
    static PotentialTerm log_deriv() { return {1.0, 0.0, 0.0, {}}; }
    static PotentialTerm constant_term(double c) { return {0.0, 0.0, c, {}}; }
    static PotentialTerm custom(const expr::Expression& e);

    PotentialTerm& operator+=(const PotentialTerm& o);
    PotentialTerm& operator-=(const PotentialTerm& o);
    PotentialTerm& operator*=(double s);
    friend PotentialTerm operator+(PotentialTerm a, const PotentialTerm& b) { return a += b; }
    friend PotentialTerm operator-(PotentialTerm a, const PotentialTerm& b) { return a -= b; }
    friend PotentialTerm operator*(double s, PotentialTerm a) { return a *= s; }

    std::string describe() const;
};

// Spec-facing potential record: SRB or custom, with the subtracted P(phi).
struct PotentialSpec {
    enum class Kind { SRB, Custom } kind = Kind::SRB;
    PotentialTerm term;
    bool normalised = false;
    double pressure_offset = 0;

    static PotentialSpec srb() { return {Kind::SRB, PotentialTerm::srb(), false, 0}; }
    static PotentialSpec custom(const expr::Expression& e) {
        return {Kind::Custom, PotentialTerm::custom(e), false, 0};
    }
};

enum class DiscMethod { Collocation, Ulam };

struct DiscSpec {
    DiscMethod method = DiscMethod::Collocation;
    int n = 256;
};

std::string method_name(DiscMethod m);

struct EigenTriple {
    double rho = 0;                  // leading eigenvalue
    std::vector<double> right, left; // positive; sum(left) = 1, left.right = 1
    double residual = 0;             // ||A r - rho r||_inf / rho
    int iterations = 0;
};

struct TransferDiscretization {
    DiscSpec disc;
    // CSR with a fixed sparsity pattern shared by all weights on the same
    // geometry
    std::vector<int> row_ptr, col;
    std::vector<double> val;
    EigenTriple eig;
};

struct PressureResult {
    double p = 0;
    TransferDiscretization disc;
    std::optional<double> method_agreement;
};

// Discretized weighted transfer operator bound to one (map, lambda, disc).
// The preimage geometry, interpolation pattern and the values of log|T'|
// and log lambda at preimages are computed once; each weight then only
// fills matrix values.
class TransferOperator {
public:
    TransferOperator(const dynamics::IntervalMap& map,
                     const dynamics::FibreFunction* lambda, DiscSpec disc);

    const DiscSpec& disc() const { return disc_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const dynamics::IntervalMap& map() const { return *map_; }

    TransferDiscretization build(const PotentialTerm& weight) const;
    double pressure_value(const PotentialTerm& weight) const; // log rho

    // int g dmu_psi via the leading eigentriple, cross-checked against the
    // pressure derivative (P(psi + eps g) - P(psi - eps g)) / 2 eps
    double equilibrium_integral(const PotentialTerm& psi, const PotentialTerm& g) const;

private:
    const dynamics::IntervalMap* map_;
    const dynamics::FibreFunction* lambda_;
    DiscSpec disc_;
    std::vector<double> nodes_; // collocation nodes or cell centres

    // fixed sparsity pattern; entry k holds the data needed to weight it
    std::vector<int> row_ptr_, col_;
    std::vector<double> coeff_;     // interpolation / quadrature mass
    std::vector<double> log_deriv_; // log|T'(y_k)|
    std::vector<double> log_lambda_;
    std::vector<double> y_;         // preimage point of entry k

    void build_collocation();
    void build_ulam();
    EigenTriple solve(const std::vector<int>& row_ptr, const std::vector<int>& col,
                      const std::vector<double>& val) const;
};

// --- spec-facing operations ------------------------------------------------

TransferDiscretization build_operator(const dynamics::IntervalMap& map,
                                      const dynamics::FibreFunction* lambda,
                                      const PotentialTerm& weight, DiscSpec disc);

PressureResult pressure(const dynamics::IntervalMap& map,
                        const dynamics::FibreFunction* lambda,
                        const PotentialTerm& potential, DiscSpec disc);

PotentialSpec normalise_potential(const dynamics::IntervalMap& map,
                                  const dynamics::FibreFunction* lambda,
                                  PotentialSpec phi, DiscSpec disc);

double equilibrium_integral(const dynamics::IntervalMap& map,
                            const dynamics::FibreFunction* lambda,
                            const PotentialTerm& psi, const PotentialTerm& g,
                            DiscSpec disc);

struct LoynesResult {
    double s_star = 0;
    double p_prime = 0; // p'(s*) by central differences, h = 1e-5
    double bracket_lo = 0, bracket_hi = 0;
    bool degenerate = false; // p'(s*) <= 0 (flagged, not fatal)
    double p_prime_zero = 0; // p'(0) = int log lambda dmu_phi, the (H3) check
};

LoynesResult loynes_exponent(const dynamics::SkewProduct& sp, const PotentialTerm& phi,
                             DiscSpec disc);

struct PressureCurveRow {
    double s = 0, p = 0, eigenvalue = 0, residual = 0;
};

struct PressureCurve {
    std::vector<PressureCurveRow> rows;
    bool convex = true;          // second differences >= -1e-8 on the grid
    double min_second_diff = 0;
    std::string content_hash;
    bool cache_hit = false;
};

PressureCurve pressure_curve(const dynamics::SkewProduct& sp, const PotentialTerm& phi,
                             const std::vector<double>& s_grid, DiscSpec disc,
                             const std::string& cache_path = "");

// FNV-1a over a canonical description; keys the pressure cache
std::string content_hash(const std::string& text);

// Scalar root bracketing + Brent, shared by thermo and multifractal.
// Terminates when |f| <= ftol; throws the supplied error when the
// iteration cap is reached.
double brent_root(const std::function<double(double)>& f, double a, double b,
                  double fa, double fb, double ftol, int max_iter = 200);

} // namespace riddle::thermo
