#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riddle/dynamics.hpp"
#include "riddle/rng.hpp"

using namespace riddle::dynamics;

namespace {

SkewProduct paper_example() {
    return SkewProduct(IntervalMap::doubling(),
                       FibreFunction::global("(2 + sin(2*pi*x))/5"),
                       FibreFunction::global("4/5 + cos(2*pi*x)/4"));
}

SkewProduct constant_example(const char* lambda = "1/2", const char* f = "1") {
    return SkewProduct(IntervalMap::doubling(), FibreFunction::global(f),
                       FibreFunction::global(lambda));
}

double paper_f(double x) { return (2.0 + std::sin(2 * M_PI * x)) / 5.0; }
double paper_lam(double x) { return 0.8 + std::cos(2 * M_PI * x) / 4.0; }

// two-term geometric series over the exact period-2 orbit {1/3, 2/3}
double paper_u_third() {
    double l = paper_lam(1.0 / 3.0); // = lambda(2/3) = 0.675
    double num = l * paper_f(1.0 / 3.0) + l * l * paper_f(2.0 / 3.0);
    return num / (1.0 - l * l);
}

} // namespace

TEST_CASE("doubling map basics and boundary convention") {
    IntervalMap m = IntervalMap::doubling();
    CHECK(m.apply(0.3) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(m.apply(0.7) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(m.apply(0.5) == 0.0); // left-closed convention: 0.5 is in [0.5, 1)
    CHECK(m.expansion_floor() == doctest::Approx(2.0));
    CHECK(m.constant_slope_full_branch());
}

TEST_CASE("markov validation rejects bad maps") {
    CHECK_THROWS_AS(IntervalMap::from_formulas({0.0, 0.5, 1.0}, {"2*x", "2*x - 0.9"}),
                    ValidationError);
    CHECK_THROWS_AS(IntervalMap::from_formulas({0.0, 1.0}, {"x/2"}), ValidationError);
    CHECK_THROWS_AS(IntervalMap::from_formulas({0.0, 1.0}, {"x + sin(2*pi*x)"}),
                    ValidationError);
}

TEST_CASE("nonlinear full-branch markov map validates") {
    // 3 full branches with mild nonlinearity, T' in [2.1, 3.9]
    std::vector<std::string> f;
    for (int j = 0; j < 3; ++j) {
        std::string J = std::to_string(j);
        f.push_back("3*x - " + J + " + 0.3*sin(2*pi*(3*x - " + J + "))/(2*pi)");
    }
    IntervalMap m = IntervalMap::from_formulas({0, 1.0 / 3, 2.0 / 3, 1}, f);
    CHECK(m.expansion_floor() > 2.0);
    CHECK(!m.constant_slope_full_branch());
    // derivative was auto-derived symbolically
    CHECK(m.deriv_at(0.1) == doctest::Approx(3 + 0.9 * std::cos(2 * M_PI * 0.3)).epsilon(1e-10));
}

TEST_CASE("inverse branches of the doubling map") {
    IntervalMap m = IntervalMap::doubling();
    auto pre = m.inverse_branches(0.5);
    REQUIRE(pre.size() == 2);
    CHECK(pre[0].y == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(pre[1].y == doctest::Approx(0.75).epsilon(1e-13));

    IntervalMap m3 = IntervalMap::linear(3);
    auto pre3 = m3.inverse_branches(0.0);
    REQUIRE(pre3.size() == 3);
    CHECK(pre3[0].y == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(pre3[1].y == doctest::Approx(1.0 / 3).epsilon(1e-13));
    CHECK(pre3[2].y == doctest::Approx(2.0 / 3).epsilon(1e-13));
}

TEST_CASE("inverse branches round trip on a nonlinear map") {
    std::vector<std::string> f;
    for (int j = 0; j < 3; ++j) {
        std::string J = std::to_string(j);
        f.push_back("3*x - " + J + " + 0.3*sin(2*pi*(3*x - " + J + "))/(2*pi)");
    }
    IntervalMap m = IntervalMap::from_formulas({0, 1.0 / 3, 2.0 / 3, 1}, f);
    riddle::Rng rng(42, 0);
    for (int trial = 0; trial < 200; ++trial) {
        double x = rng.uniform();
        auto pre = m.inverse_branches(x);
        REQUIRE(pre.size() == 3);
        for (const auto& p : pre)
            CHECK(std::fabs(m.branch(p.branch).map_c(p.y) - x) <= 1e-10);
    }
}

TEST_CASE("hypothesis report for the paper example") {
    SkewProduct sp = paper_example();
    CHECK(sp.hypotheses().h2.verdict == HypothesisEntry::Verdict::Holds);
    CHECK(sp.hypotheses().h3.verdict == HypothesisEntry::Verdict::Holds);
    CHECK(sp.hypotheses().h4.verdict == HypothesisEntry::Verdict::Holds);
    // m(lambda) m(|T'|) = 0.55 * 2 = 1.1
    CHECK(sp.hypotheses().h4.witness == doctest::Approx(1.1).epsilon(1e-9));
    CHECK(sp.inf_lambda() == doctest::Approx(0.55).epsilon(1e-12));
    CHECK(sp.sup_lambda() == doctest::Approx(1.05).epsilon(1e-12));
}

TEST_CASE("positivity violations are rejected") {
    CHECK_THROWS_AS(constant_example("-1/2"), ValidationError);
    CHECK_THROWS_AS(constant_example("1/2", "sin(2*pi*x)"), ValidationError);
}

TEST_CASE("fibre iteration: one step arithmetic and n = 0") {
    SkewProduct sp = constant_example(); // lambda = 1/2, f = 1, graph value 1
    auto tr = sp.iterate_fibre(0.3, 2.0, 1);
    REQUIRE(tr.points.size() == 2);
    CHECK(tr.points[1].second == doctest::Approx(3.0).epsilon(1e-15)); // -1 + 4

    auto tr0 = sp.iterate_fibre(0.3, 2.0, 0);
    REQUIRE(tr0.points.size() == 1);
    CHECK(tr0.points[0] == std::make_pair(0.3, 2.0));
}

TEST_CASE("fibre growth rate at a mu-typical point") {
    SkewProduct sp = paper_example();
    const double integral = std::log((0.8 + std::sqrt(0.64 - 0.0625)) / 2.0); // -0.248466
    // mu-typical point: lemma rate is -integral
    riddle::Rng rng(101, 3);
    double x = rng.uniform();
    auto gv = sp.invariant_graph_value(x, 1e-10, 4000);
    REQUIRE(gv.finite());
    auto tr = sp.iterate_fibre(x, gv.value + 0.1, 60);
    double rate = std::log(tr.points.back().second) / 60.0;
    CHECK(rate == doctest::Approx(-integral).epsilon(0.10));

    // x = 1/3 is periodic, not mu-typical: its lambda products follow the
    // orbit average 0.675 (for as long as the double orbit shadows the
    // period-2 cycle), not the integral
    auto [S30, L30] = sp.weighted_birkhoff(1.0 / 3.0, 30);
    CHECK(L30 == doctest::Approx(std::pow(0.675, 30)).epsilon(1e-6));
    CHECK(S30 > 0);
}

TEST_CASE("cocycle property of fibre iteration") {
    SkewProduct sp = paper_example();
    riddle::Rng rng(7, 0);
    for (int trial = 0; trial < 20; ++trial) {
        double x = rng.uniform();
        double t = rng.uniform(0.0, 3.0);
        long a = 1 + long(rng.next_u64() % 30);
        long b = 1 + long(rng.next_u64() % 30);
        auto whole = sp.iterate_fibre(x, t, a + b);
        auto first = sp.iterate_fibre(x, t, a);
        auto second = sp.iterate_fibre(first.points.back().first,
                                       first.points.back().second, b);
        double t1 = whole.points.back().second;
        double t2 = second.points.back().second;
        CHECK(std::fabs(t1 - t2) <= 1e-8 * std::max({1.0, std::fabs(t1), std::fabs(t2)}));
    }
}

TEST_CASE("closed form of g_x^n as an oracle for the forward recursion") {
    SkewProduct sp = paper_example();
    riddle::Rng rng(11, 0);
    for (int trial = 0; trial < 50; ++trial) {
        double x = rng.uniform();
        double t = rng.uniform(-2.0, 4.0);
        long n = 1 + long(rng.next_u64() % 30);
        auto [S, L] = sp.weighted_birkhoff(x, n);
        double closed = (t - S) / L; // lambda^n(x)^{-1} (t - S_{n,lambda} f)
        double forward = sp.iterate_fibre(x, t, n).points.back().second;
        CHECK(forward == doctest::Approx(closed).epsilon(1e-8));
    }
}

TEST_CASE("weighted birkhoff sums") {
    SkewProduct sp = paper_example();
    auto [S0, L0] = sp.weighted_birkhoff(0.77, 0);
    CHECK(S0 == 0.0);
    CHECK(L0 == 1.0);

    SkewProduct cf = constant_example("0.5", "0.7");
    auto [S2, L2] = cf.weighted_birkhoff(0.3, 2);
    CHECK(S2 == doctest::Approx(0.5 * 0.7 + 0.25 * 0.7).epsilon(1e-15));
    CHECK(L2 == doctest::Approx(0.25).epsilon(1e-15));

    // period-2 orbit of 1/3 under doubling: direct arithmetic
    auto [S, L] = sp.weighted_birkhoff(1.0 / 3.0, 2);
    double l = paper_lam(1.0 / 3.0);
    CHECK(l == doctest::Approx(0.675).epsilon(1e-12));
    CHECK(S == doctest::Approx(l * paper_f(1.0 / 3.0) + l * l * paper_f(2.0 / 3.0))
                   .epsilon(1e-12));
    CHECK(L == doctest::Approx(0.455625).epsilon(1e-12));

    // incremental recurrence S_{n+1} = S_n + lambda^{n+1} f(T^n x), as computed
    double x = 0.123456;
    double Sn = 0, Ln = 1;
    for (long n = 0; n < 40; ++n) {
        auto [Sref, Lref] = sp.weighted_birkhoff(x, n);
        CHECK(Sref == Sn);
        CHECK(Lref == Ln);
        double xn = x;
        for (long k = 0; k < n; ++k) xn = sp.base().step_typical(xn);
        Ln *= sp.lam(xn);
        Sn += Ln * sp.f(xn);
    }
}

TEST_CASE("invariant graph value: constant case and the paper orbit") {
    SkewProduct cf = constant_example(); // u = 1 everywhere
    for (double x : {0.1, 0.5, 0.9}) {
        auto gv = cf.invariant_graph_value(x, 1e-9, 4000);
        REQUIRE(gv.finite());
        CHECK(gv.value == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(gv.bound <= 1e-9);
        CHECK(gv.value > 0);
    }

    SkewProduct sp = paper_example();
    auto gv0 = sp.invariant_graph_value(0.0, 1e-9, 4000);
    CHECK(gv0.divergent()); // lambda(0) = 1.05 > 1 at the fixed point

    auto gv3 = sp.invariant_graph_value(1.0 / 3.0, 1e-10, 8000);
    REQUIRE(gv3.finite());
    CHECK(gv3.value == doctest::Approx(paper_u_third()).epsilon(1e-8));
    CHECK(gv3.value == doctest::Approx(0.90057).epsilon(1e-4));
}

TEST_CASE("graph invariance one step forward") {
    SkewProduct sp = paper_example();
    riddle::Rng rng(5, 0);
    const double tol = 1e-10;
    int tested = 0;
    for (int trial = 0; trial < 200 && tested < 100; ++trial) {
        double x = rng.uniform();
        auto gv = sp.invariant_graph_value(x, tol, 4000);
        if (!gv.finite()) continue;
        auto gvT = sp.invariant_graph_value(sp.base().step_typical(x), tol, 4000);
        if (!gvT.finite()) continue;
        double g1 = -sp.f(x) + gv.value / sp.lam(x);
        CHECK(std::fabs(g1 - gvT.value) <= 10 * tol / sp.lam(x));
        ++tested;
    }
    CHECK(tested == 100);
}

TEST_CASE("classification against the graph") {
    SkewProduct cf = constant_example();
    CHECK(cf.classify_point(0.4, 2.0, 1000).plus());
    CHECK(cf.classify_point(0.4, 0.0, 1000).minus());
    CHECK(cf.classify_point(0.9, -5.0, 1000).minus());

    SkewProduct sp = paper_example();
    CHECK(sp.classify_point(1.0 / 3.0, 0.5, 4000).minus());
    CHECK(sp.classify_point(1.0 / 3.0, 1.5, 4000).plus());
    CHECK(sp.graph_sign_classify(1.0 / 3.0, 0.5, 1e-9).minus());
    CHECK(sp.graph_sign_classify(1.0 / 3.0, 1.5, 1e-9).plus());
    // divergent graph forces Minus for every finite t
    CHECK(sp.graph_sign_classify(0.0, 1e6, 1e-9).minus());
}

TEST_CASE("iteration and graph-sign classification agree off the graph") {
    SkewProduct sp = paper_example();
    riddle::Rng rng(2026, 1);
    const double tol = 1e-9;
    long agree = 0, total = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        double x = rng.uniform();
        double t = rng.uniform(0.0, 4.0);
        auto sign = sp.graph_sign_classify(x, t, tol);
        if (sign.undecided()) continue;
        auto gv = sp.invariant_graph_value(x, tol, 4000);
        if (gv.finite() && std::fabs(gv.value - t) <= 10 * tol) continue;
        auto iter = sp.classify_point(x, t, 4000);
        if (iter.undecided()) continue;
        ++total;
        if (iter.kind == sign.kind) ++agree;
    }
    CHECK(total > 9000);
    CHECK(static_cast<double>(agree) / total >= 0.999);
}

TEST_CASE("basin grid: constant example bands") {
    SkewProduct cf = constant_example();
    GridOptions opts;
    auto all_plus = cf.basin_grid(0, 1, 2, 3, 16, 16, opts);
    for (const auto& c : all_plus) CHECK(c.plus());
    auto all_minus = cf.basin_grid(0, 1, -1, 0.5, 16, 16, opts);
    for (const auto& c : all_minus) CHECK(c.minus());
}

TEST_CASE("basin grid of the paper example: minus fraction decays with height") {
    SkewProduct sp = paper_example();
    GridOptions opts;
    opts.max_iter = 3000;
    int nx = 128, nt = 120;
    auto grid = sp.basin_grid(0, 1, 0, 12, nx, nt, opts);
    // bands of height 1 = 10 rows each
    double prev = 2.0;
    for (int band = 0; band < 12; ++band) {
        long minus = 0, tot = 0;
        for (int j = band * 10; j < (band + 1) * 10; ++j)
            for (int i = 0; i < nx; ++i) {
                ++tot;
                if (grid[static_cast<std::size_t>(j) * nx + i].minus()) ++minus;
            }
        double frac = static_cast<double>(minus) / tot;
        CHECK(frac <= prev + 0.02); // nonincreasing within sampling noise
        prev = frac;
    }
}
