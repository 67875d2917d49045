#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "riddle/rng.hpp"
#include "riddle/thermo.hpp"

using namespace riddle;
using namespace riddle::thermo;
using dynamics::FibreFunction;
using dynamics::IntervalMap;
using dynamics::SkewProduct;

namespace {

const double kLog2 = std::log(2.0);

// int_0^1 log(a + b cos 2 pi x) dx = log((a + sqrt(a^2 - b^2)) / 2)
double cosine_log_integral(double a, double b) {
    return std::log((a + std::sqrt(a * a - b * b)) / 2.0);
}

SkewProduct paper_example() {
    return SkewProduct(IntervalMap::doubling(),
                       FibreFunction::global("(2 + sin(2*pi*x))/5"),
                       FibreFunction::global("4/5 + cos(2*pi*x)/4"));
}

SkewProduct piecewise_example(const char* l0 = "1/2", const char* l1 = "3/2") {
    return SkewProduct(IntervalMap::doubling(), FibreFunction::global("1"),
                       FibreFunction::per_interval({l0, l1}));
}

std::vector<std::string> nonlinear3_formulas() {
    std::vector<std::string> f;
    for (int j = 0; j < 3; ++j) {
        std::string J = std::to_string(j);
        f.push_back("3*x - " + J + " + 0.3*sin(2*pi*(3*x - " + J + "))/(2*pi)");
    }
    return f;
}

} // namespace

TEST_CASE("normalised SRB weight on the doubling map is stochastic") {
    IntervalMap m = IntervalMap::doubling();
    FibreFunction lam = FibreFunction::global("4/5 + cos(2*pi*x)/4");
    PotentialTerm srb = PotentialTerm::constant_term(-kLog2); // = -log|T'| here
    for (DiscMethod method : {DiscMethod::Collocation, DiscMethod::Ulam}) {
        auto td = build_operator(m, &lam, srb, {method, 64});
        for (std::size_t i = 0; i + 1 < td.row_ptr.size(); ++i) {
            double sum = 0;
            for (int k = td.row_ptr[i]; k < td.row_ptr[i + 1]; ++k)
                sum += td.val[static_cast<std::size_t>(k)];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(td.eig.rho == doctest::Approx(1.0).epsilon(1e-12));
        for (double v : td.eig.right) CHECK(v > 0);
        for (double v : td.eig.left) CHECK(v > 0);
        CHECK(td.eig.residual <= 1e-10);
    }
}

TEST_CASE("constant lambda scales the stochastic matrix") {
    IntervalMap m = IntervalMap::doubling();
    FibreFunction lam = FibreFunction::global("0.7");
    PotentialTerm w = PotentialTerm::constant_term(-kLog2) + 2.0 * PotentialTerm::log_lambda();
    auto td = build_operator(m, &lam, w, {DiscMethod::Collocation, 64});
    CHECK(td.eig.rho == doctest::Approx(0.49).epsilon(1e-10));
}

TEST_CASE("piecewise-constant lambda has a closed-form Perron eigenvalue") {
    IntervalMap m = IntervalMap::doubling();
    FibreFunction lam = FibreFunction::per_interval({"0.6", "1.4"});
    for (double s : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        PotentialTerm w = PotentialTerm::constant_term(-kLog2) + s * PotentialTerm::log_lambda();
        double expect = (std::pow(0.6, s) + std::pow(1.4, s)) / 2.0;
        auto tc = build_operator(m, &lam, w, {DiscMethod::Collocation, 256});
        CHECK(tc.eig.rho == doctest::Approx(expect).epsilon(1e-10));
        auto tu = build_operator(m, &lam, w, {DiscMethod::Ulam, 256});
        CHECK(tu.eig.rho == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("pressure closed forms on the doubling map") {
    IntervalMap m = IntervalMap::doubling();
    FibreFunction lam = FibreFunction::global("0.7");

    auto p0 = pressure(m, &lam, PotentialTerm::constant_term(-kLog2),
                       {DiscMethod::Collocation, 64});
    CHECK(p0.p == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::fabs(p0.p) <= 1e-12);

    auto ptop = pressure(m, &lam, PotentialTerm{}, {DiscMethod::Collocation, 64});
    CHECK(ptop.p == doctest::Approx(kLog2).epsilon(1e-10));

    PotentialTerm w = PotentialTerm::constant_term(-kLog2) + 2.0 * PotentialTerm::log_lambda();
    auto p2 = pressure(m, &lam, w, {DiscMethod::Collocation, 64});
    CHECK(p2.p == doctest::Approx(2 * std::log(0.7)).epsilon(1e-10));
}

TEST_CASE("normalise_potential records the subtracted offset") {
    IntervalMap m = IntervalMap::doubling();
    DiscSpec disc{DiscMethod::Collocation, 64};

    auto srb = normalise_potential(m, nullptr, PotentialSpec::srb(), disc);
    CHECK(std::fabs(srb.pressure_offset) <= 1e-12);
    CHECK(srb.normalised);

    PotentialSpec zero;
    zero.kind = PotentialSpec::Kind::Custom;
    zero.term = PotentialTerm{};
    auto z = normalise_potential(m, nullptr, zero, disc);
    CHECK(z.pressure_offset == doctest::Approx(kLog2).epsilon(1e-10));
    CHECK(std::fabs(TransferOperator(m, nullptr, disc).pressure_value(z.term)) <= 1e-8);
}

TEST_CASE("SRB offset of a nonlinear map agrees across discretizations") {
    IntervalMap m = IntervalMap::from_formulas({0, 1.0 / 3, 2.0 / 3, 1},
                                               nonlinear3_formulas());
    auto col = normalise_potential(m, nullptr, PotentialSpec::srb(),
                                   {DiscMethod::Collocation, 2048});
    auto ula = normalise_potential(m, nullptr, PotentialSpec::srb(),
                                   {DiscMethod::Ulam, 16384});
    // P(-log|T'|) = 0 in truth; the two estimates must agree tightly
    CHECK(std::fabs(col.pressure_offset - ula.pressure_offset) <= 1e-6);
}

TEST_CASE("equilibrium integrals on the doubling map") {
    SkewProduct sp = paper_example();
    TransferOperator op(sp.base(), &sp.lambda_fn(), {DiscMethod::Collocation, 256});
    PotentialTerm srb = PotentialTerm::constant_term(-kLog2);

    CHECK(op.equilibrium_integral(srb, PotentialTerm::constant_term(1.0)) ==
          doctest::Approx(1.0).epsilon(1e-14));

    double expect = cosine_log_integral(0.8, 0.25); // about -0.248466
    CHECK(op.equilibrium_integral(srb, PotentialTerm::log_lambda()) ==
          doctest::Approx(expect).epsilon(1e-5));
    CHECK(expect < -0.24);

    double lT = op.equilibrium_integral(srb, PotentialTerm::log_deriv());
    CHECK(std::fabs(lT - kLog2) <= 1e-12);
}

TEST_CASE("loynes exponent: piecewise closed form gives s* = 1") {
    SkewProduct sp = piecewise_example();
    auto res = loynes_exponent(sp, PotentialTerm::constant_term(-kLog2),
                               {DiscMethod::Collocation, 64});
    CHECK(res.s_star == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(res.p_prime > 0);
    CHECK(!res.degenerate);
    CHECK(res.p_prime_zero == doctest::Approx(0.5 * std::log(0.75)).epsilon(1e-10));
}

TEST_CASE("loynes exponent: hypothesis and no-root failure modes") {
    // int log lambda dmu > 0 violates the (H3) precondition
    SkewProduct up(IntervalMap::doubling(), FibreFunction::global("1"),
                   FibreFunction::global("3/2"));
    CHECK_THROWS_AS(loynes_exponent(up, PotentialTerm::constant_term(-kLog2),
                                    {DiscMethod::Collocation, 64}),
                    HypothesisViolation);

    // constant lambda < 1 with a normalised potential: p(s) = s log c < 0
    // for every s > 0, so the pressure equation has no positive root
    SkewProduct down(IntervalMap::doubling(), FibreFunction::global("1"),
                     FibreFunction::global("0.6"));
    CHECK_THROWS_AS(loynes_exponent(down, PotentialTerm::constant_term(-kLog2),
                                    {DiscMethod::Collocation, 64}),
                    NoRoot);

    // with the unnormalised phi = 0 the equation reads log 2 + s log c = 0,
    // whose root log 2 / (-log c) is degenerate: p'(s*) = log c < 0
    auto res = loynes_exponent(down, PotentialTerm{}, {DiscMethod::Collocation, 64});
    CHECK(res.s_star == doctest::Approx(kLog2 / -std::log(0.6)).epsilon(1e-8));
    CHECK(res.degenerate);
    CHECK(res.p_prime == doctest::Approx(std::log(0.6)).epsilon(1e-4));
}

TEST_CASE("paper example: s* sits in the closed-form squeeze bracket") {
    // Dirac mass at the fixed point 0 gives p(s) >= -log 2 + s log(21/20);
    // the sup of L_s 1 gives p(s) <= log((1.05^s + 0.55^s)/2).  Both roots
    // pin s* into [14.2025, 14.2068].
    SkewProduct sp = paper_example();
    auto res = loynes_exponent(sp, PotentialTerm::constant_term(-kLog2),
                               {DiscMethod::Collocation, 256});
    CHECK(res.s_star > 14.19);
    CHECK(res.s_star < 14.22);
    CHECK(res.p_prime > 0);

    auto ulam = loynes_exponent(sp, PotentialTerm::constant_term(-kLog2),
                                {DiscMethod::Ulam, 1024});
    CHECK(std::fabs(ulam.s_star - res.s_star) / res.s_star <= 5e-3);
}

TEST_CASE("pressure curve: convexity and cache round trip") {
    SkewProduct sp = paper_example();
    PotentialTerm srb = PotentialTerm::constant_term(-kLog2);
    std::vector<double> grid;
    for (int i = 0; i <= 8; ++i) grid.push_back(0.5 * i);

    auto path = std::filesystem::temp_directory_path() / "riddle_pressure_cache_test.csv";
    std::filesystem::remove(path);

    auto curve = pressure_curve(sp, srb, grid, {DiscMethod::Collocation, 128},
                                path.string());
    CHECK(std::fabs(curve.rows.front().p) <= 1e-8); // p(0) = 0, normalised
    CHECK(curve.convex);
    CHECK(curve.min_second_diff > 0); // strictly convex on the paper example
    CHECK(!curve.cache_hit);

    auto again = pressure_curve(sp, srb, grid, {DiscMethod::Collocation, 128},
                                path.string());
    CHECK(again.cache_hit);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(again.rows[i].p == curve.rows[i].p);

    // corrupt the cache; it must silently recompute
    { std::ofstream(path) << "garbage\n"; }
    auto recomputed = pressure_curve(sp, srb, grid, {DiscMethod::Collocation, 128},
                                     path.string());
    CHECK(!recomputed.cache_hit);
    CHECK(recomputed.rows[3].p == doctest::Approx(curve.rows[3].p).epsilon(1e-13));
    std::filesystem::remove(path);

    // constant lambda: p is linear, second differences vanish
    SkewProduct cf(IntervalMap::doubling(), FibreFunction::global("1"),
                   FibreFunction::global("0.7"));
    auto lin = pressure_curve(cf, srb, grid, {DiscMethod::Collocation, 64});
    CHECK(std::fabs(lin.min_second_diff) <= 1e-10);
    // monotone nondecreasing when log lambda >= 0 pointwise
    SkewProduct gf(IntervalMap::doubling(), FibreFunction::global("1"),
                   FibreFunction::global("1.2"));
    auto mono = pressure_curve(gf, srb, grid, {DiscMethod::Collocation, 64});
    for (std::size_t i = 1; i < mono.rows.size(); ++i)
        CHECK(mono.rows[i].p >= mono.rows[i - 1].p - 1e-12);
}

TEST_CASE("derivative consistency: central differences match the equilibrium integral") {
    SkewProduct sp = paper_example();
    TransferOperator op(sp.base(), &sp.lambda_fn(), {DiscMethod::Collocation, 256});
    PotentialTerm srb = PotentialTerm::constant_term(-kLog2);
    riddle::Rng rng(99, 0);
    for (int trial = 0; trial < 5; ++trial) {
        double s = rng.uniform(0.0, 4.0);
        PotentialTerm at = srb + s * PotentialTerm::log_lambda();
        double integral = op.equilibrium_integral(at, PotentialTerm::log_lambda());
        const double h = 1e-5;
        double fd = (op.pressure_value(at + h * PotentialTerm::log_lambda()) -
                     op.pressure_value(at - h * PotentialTerm::log_lambda())) /
                    (2 * h);
        CHECK(integral == doctest::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("gibbs property on rank-8 dyadic cylinders") {
    SkewProduct sp = paper_example();
    TransferOperator op(sp.base(), &sp.lambda_fn(), {DiscMethod::Ulam, 4096});
    auto td = op.build(PotentialTerm::constant_term(-kLog2));

    // mu(C_i) ~ l_i r_i with sum l r = 1; a rank-8 cylinder is a dyadic
    // interval of length 2^-8 = 16 cells
    riddle::Rng rng(1234, 0);
    const int rank = 8;
    const int cells_per_cyl = 4096 >> rank;
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (int trial = 0; trial < 16; ++trial) {
        int cyl = static_cast<int>(rng.next_u64() % (1u << rank));
        double mu = 0;
        for (int c = cyl * cells_per_cyl; c < (cyl + 1) * cells_per_cyl; ++c)
            mu += td.eig.left[static_cast<std::size_t>(c)] *
                  td.eig.right[static_cast<std::size_t>(c)];
        // exp(S_8 phi) = 2^-8 for phi = -log 2
        double ratio = mu * 256.0;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    CHECK(lo > 1.0 / 1.5);
    CHECK(hi < 1.5);
}
