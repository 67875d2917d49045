#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "riddle/expr.hpp"
#include "riddle/rng.hpp"

using riddle::expr::Compiled;
using riddle::expr::Expression;

namespace {

const char* kPaperF = "(2 + sin(2*pi*x))/5";
const char* kPaperLambda = "4/5 + cos(2*pi*x)/4";

// centered finite differences, the independent oracle for derivative()
double fd_derivative(const Expression& e, double x, double h = 1e-6) {
    return (e.evaluate(x + h) - e.evaluate(x - h)) / (2.0 * h);
}

} // namespace

TEST_CASE("parse of the paper's f evaluates to the closed form") {
    Expression f = Expression::parse(kPaperF);
    for (double x : {0.0, 0.1, 1.0 / 3.0, 0.5, 0.77, 1.0}) {
        double expect = (2.0 + std::sin(2.0 * M_PI * x)) / 5.0;
        CHECK(f.evaluate(x) == doctest::Approx(expect).epsilon(1e-15));
    }
    // direct arithmetic: (2 + sqrt(3)/2)/5
    double expect13 = (2.0 + std::sqrt(3.0) / 2.0) / 5.0;
    CHECK(f.evaluate(1.0 / 3.0) == doctest::Approx(expect13).epsilon(1e-12));
    CHECK(f.evaluate(1.0 / 3.0) == doctest::Approx(0.5732050808).epsilon(1e-9));
}

TEST_CASE("identity and simple arithmetic") {
    CHECK(Expression::parse("x").evaluate(0.25) == 0.25);
    CHECK(Expression::parse("4/5 + cos(2*pi*x)/4").evaluate(0.0) ==
          doctest::Approx(1.05).epsilon(1e-15));
    // lambda of the paper at 1/3: cos(2pi/3) = -1/2 so 0.8 - 0.125
    Expression lam = Expression::parse(kPaperLambda);
    CHECK(lam.evaluate(1.0 / 3.0) == doctest::Approx(0.675).epsilon(1e-12));
}

TEST_CASE("precedence and associativity") {
    CHECK(Expression::parse("2+3*4").evaluate(0) == 14.0);
    CHECK(Expression::parse("2*3^2").evaluate(0) == 18.0);
    CHECK(Expression::parse("-2^2").evaluate(0) == -4.0);  // unary binds looser than ^
    CHECK(Expression::parse("2^-2").evaluate(0) == 0.25);
    CHECK(Expression::parse("8-4-2").evaluate(0) == 2.0);  // left associative
    CHECK(Expression::parse("16/4/2").evaluate(0) == 2.0);
    CHECK(Expression::parse("  2 + sin( 2*pi*x ) ").evaluate(0.25) ==
          doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("errors carry position and kind") {
    CHECK_THROWS_AS(Expression::parse(""), riddle::expr::SyntaxError);
    CHECK_THROWS_AS(Expression::parse("2+"), riddle::expr::SyntaxError);
    CHECK_THROWS_AS(Expression::parse("2**3"), riddle::expr::SyntaxError);
    CHECK_THROWS_AS(Expression::parse("sin x"), riddle::expr::SyntaxError);
    CHECK_THROWS_AS(Expression::parse("tan(x)"), riddle::expr::UnknownIdentifier);
    CHECK_THROWS_AS(Expression::parse("y + 1"), riddle::expr::UnknownIdentifier);
    CHECK_THROWS_AS(Expression::parse("x^x"), riddle::expr::SyntaxError);
    CHECK_THROWS_AS(Expression::parse("2^(x+1)"), riddle::expr::SyntaxError);

    try {
        Expression::parse("1 + tan(x)");
    } catch (const riddle::expr::UnknownIdentifier& e) {
        CHECK(e.offset() == 4);
        CHECK(e.name() == "tan");
    }
}

TEST_CASE("evaluate domain errors") {
    CHECK_THROWS_AS(Expression::parse("log(x)").evaluate(0.0), riddle::expr::DomainError);
    CHECK_THROWS_AS(Expression::parse("log(x - 1)").evaluate(0.5), riddle::expr::DomainError);
    CHECK_THROWS_AS(Expression::parse("1/x").evaluate(0.0), riddle::expr::DomainError);
    CHECK(Expression::parse("log(x)").evaluate(1.0) == 0.0);
}

TEST_CASE("derivative: trivial cases") {
    Expression d3 = Expression::parse("3").derivative();
    CHECK(d3.evaluate(0.1) == 0.0);
    Expression d2x = Expression::parse("2*x").derivative();
    for (double x : {0.0, 0.3, 0.9})
        CHECK(d2x.evaluate(x) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("derivative of sin(2 pi x) matches 2 pi cos(2 pi x) and finite differences") {
    Expression e = Expression::parse("sin(2*pi*x)");
    Expression de = e.derivative();
    for (int i = 0; i < 64; ++i) {
        double x = (i + 0.5) / 64.0;
        double analytic = 2.0 * M_PI * std::cos(2.0 * M_PI * x);
        CHECK(de.evaluate(x) == doctest::Approx(analytic).epsilon(1e-12));
        double fd = fd_derivative(e, x);
        CHECK(de.evaluate(x) == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("derivative of abs is unsupported") {
    CHECK_THROWS_AS(Expression::parse("abs(x)").derivative(), riddle::expr::Unsupported);
}

TEST_CASE("derivative of quotients, powers and nests agrees with finite differences") {
    std::vector<const char*> formulas = {
        kPaperF,
        kPaperLambda,
        "exp(x)/(1 + x^2)",
        "log(2 + sin(2*pi*x))",
        "(x + 1)^3 - x^-2",
        "cos(x)^2 + sin(x)^2",
        "0.6 + ((1 + cos(2*pi*x))/2)^8",
    };
    for (const char* text : formulas) {
        Expression e = Expression::parse(text);
        Expression de = e.derivative();
        for (int i = 1; i <= 16; ++i) {
            double x = i / 17.0;
            double fd = fd_derivative(e, x);
            double got = de.evaluate(x);
            CHECK(got == doctest::Approx(fd).epsilon(1e-5));
        }
    }
}

namespace {

// random expression generator for the round-trip property
std::string random_expression_text(riddle::Rng& rng, int depth) {
    if (depth <= 0 || rng.uniform() < 0.25) {
        switch (rng.next_u64() % 4) {
        case 0: return "x";
        case 1: return "pi";
        case 2: return std::to_string(rng.uniform(0.1, 3.0));
        default: return std::to_string(1 + int(rng.next_u64() % 9));
        }
    }
    switch (rng.next_u64() % 8) {
    case 0: return "(" + random_expression_text(rng, depth - 1) + " + " +
                   random_expression_text(rng, depth - 1) + ")";
    case 1: return "(" + random_expression_text(rng, depth - 1) + " - " +
                   random_expression_text(rng, depth - 1) + ")";
    case 2: return "(" + random_expression_text(rng, depth - 1) + "*" +
                   random_expression_text(rng, depth - 1) + ")";
    case 3: return "(" + random_expression_text(rng, depth - 1) + "/(4 + " +
                   random_expression_text(rng, depth - 1) + "^2))";
    case 4: return "sin(" + random_expression_text(rng, depth - 1) + ")";
    case 5: return "cos(" + random_expression_text(rng, depth - 1) + ")";
    case 6: return "abs(" + random_expression_text(rng, depth - 1) + ")";
    default: return "(" + random_expression_text(rng, depth - 1) + ")^" +
                    std::to_string(1 + int(rng.next_u64() % 3));
    }
}

} // namespace

TEST_CASE("round trip: parse(serialize(e)) evaluates identically") {
    riddle::Rng rng(20260810, 0);
    for (int trial = 0; trial < 200; ++trial) {
        std::string text = random_expression_text(rng, 3);
        Expression e = Expression::parse(text);
        Expression e2 = Expression::parse(e.serialize());
        CHECK(e2.serialize() == e.serialize()); // structural identity
        for (int i = 0; i < 100; ++i) {
            double x = rng.uniform(1e-6, 1.0 - 1e-6);
            double a, b;
            try {
                a = e.evaluate(x);
            } catch (const riddle::expr::DomainError&) {
                continue;
            }
            b = e2.evaluate(x);
            CHECK(a == b); // bit identical
        }
    }
}

TEST_CASE("serializer keeps structure for tricky shapes") {
    for (const char* text : {"1 - (2 - x)", "x/(2*x)", "(2^3)^2", "2^3^2",
                             "-(x + 1)", "x - -3", "(-2)^2", "-2^2"}) {
        Expression e = Expression::parse(text);
        Expression e2 = Expression::parse(e.serialize());
        CHECK(e.serialize() == e2.serialize());
        for (double x : {0.2, 0.5, 0.8})
            CHECK(e.evaluate(x) == e2.evaluate(x));
    }
    CHECK(Expression::parse("2^3^2").evaluate(0) == 512.0); // right associative
}

TEST_CASE("compiled tape matches checked evaluation") {
    riddle::Rng rng(7, 1);
    std::vector<const char*> formulas = {kPaperF, kPaperLambda, "2*x", "2*x - 1",
                                         "0.6 + ((1 + cos(2*pi*x))/2)^8",
                                         "exp(x)/(4 + x^2)", "x^-3 + pi"};
    for (const char* text : formulas) {
        Expression e = Expression::parse(text);
        Compiled c(e);
        for (int i = 0; i < 64; ++i) {
            double x = rng.uniform(0.01, 0.99);
            CHECK(c(x) == doctest::Approx(e.evaluate(x)).epsilon(1e-15));
        }
    }
}
