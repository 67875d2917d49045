#pragma once

#include <string>
#include <vector>

#include "riddle/errors.hpp"
#include "riddle/thermo.hpp"

namespace riddle::multifractal {

struct SpectrumPoint {
    double q = 0;
    double S = 0;              // root of P(-S log|T'| + q s* log lambda) = 0
    double alpha = 0;          // -S'(q), the level-set parameter sigma(q)
    double f_dim = 0;          // S + q alpha
    double int_log_lambda = 0; // int log lambda dmu_q
    double pressure_residual = 0;
    bool valid = false;        // q < q*
    std::string error;         // per-point failure, empty when ok
};

struct SpectrumDiagnostics {
    bool s_convex = false;        // strictly positive second differences of S
    double min_second_diff = 0;
    bool alpha_decreasing = false;
    bool f_below_ambient = false; // f_dim <= S(0) + 1e-6 on valid points
    double q_star = 0;
    double s_zero = 0;            // S(0), the ambient dimension estimate
};

struct SpectrumResult {
    std::vector<SpectrumPoint> points;
    SpectrumDiagnostics diagnostics;
};

// scalar pressure equation in S at fixed q; Brent on a bracket expanded
// from [0, 4] and failing outside [-8, 8]; |P| <= 1e-9 at the root
double S_of_q(const thermo::TransferOperator& op, double q, double s_star);

// both routes: the equilibrium-integral ratio (returned) and the central
// difference of S (checked against it within 1e-3)
double alpha_of_q(const thermo::TransferOperator& op, double q, double s_star);

// root of q -> int log lambda dmu_q; srb_case asserts q* in (0,1)
double q_star(const thermo::TransferOperator& op, double s_star, bool srb_case);

SpectrumResult spectrum(const thermo::TransferOperator& op, double s_star,
                        const std::vector<double>& q_grid, bool srb_case);

std::vector<double> uniform_grid(double lo, double hi, int n);

} // namespace riddle::multifractal
