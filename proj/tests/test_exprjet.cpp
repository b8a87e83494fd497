#include "support.hpp"

#include <gtest/gtest.h>

using namespace projcalc;
using namespace testing_support;

namespace {

const std::vector<std::string> kXY{"x", "y"};

Jet eval_at(const std::string& src, std::vector<double> p, const std::vector<std::string>& vars = kXY)
{
    Chart chart(vars, std::vector<Interval>(vars.size(), {-10.0, 10.0}));
    return ScalarField::parse(chart, src).eval_jet(p, 4);
}

} // namespace

TEST(Parser, UnknownIdentifierNamesTheSymbolAndOffset)
{
    try {
        parse_expression("x + b", kXY);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseError::Kind::UnknownIdentifier);
        EXPECT_EQ(e.offset(), 4u);
        EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
    }
}

TEST(Parser, GrammarReadingOfSimpleSum)
{
    const Expression parsed = parse_expression("2+0.3*sin(x)", kXY);
    const Expression built = number(2) + number(0.3) * call(Func::Sin, coordinate("x", 0));
    EXPECT_TRUE(structurally_equal(parsed, built));
}

TEST(Parser, UnaryMinusBindsLooserThanPower)
{
    const Expression parsed = parse_expression("-x^2", kXY);
    const Expression built = -pow(coordinate("x", 0), number(2));
    EXPECT_TRUE(structurally_equal(parsed, built));
    // numeric cross-check against the precedence table
    EXPECT_DOUBLE_EQ(eval_at("-x^2", {1.5, 0}).value(), -2.25);
    EXPECT_DOUBLE_EQ(eval_at("2*-x^2", {1.5, 0}).value(), -4.5);
    EXPECT_DOUBLE_EQ(eval_at("2^3^2", {0, 0}).value(), 512.0);
    EXPECT_DOUBLE_EQ(eval_at("2^-1", {0, 0}).value(), 0.5);
    EXPECT_DOUBLE_EQ(eval_at("8/4/2", {0, 0}).value(), 1.0);
    EXPECT_DOUBLE_EQ(eval_at("1-2-3", {0, 0}).value(), -4.0);
}

TEST(Parser, SyntaxErrorsCarryOffsets)
{
    const std::vector<std::pair<std::string, std::size_t>> cases{{"x + * y", 4}, {"x +", 3}, {"(x", 2}, {"x y", 2}, {"sin()", 4}};
    for (const auto& [src, off] : cases) {
        try {
            parse_expression(src, kXY);
            ADD_FAILURE() << src;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.kind(), ParseError::Kind::Syntax) << src;
            EXPECT_EQ(e.offset(), off) << src;
        }
    }
}

TEST(Parser, ArityErrors)
{
    for (const char* src : {"sin(x, y)", "sin x"}) {
        try {
            parse_expression(src, kXY);
            ADD_FAILURE() << src;
        } catch (const ParseError& e) {
            EXPECT_EQ(e.kind(), ParseError::Kind::Arity) << src;
        }
    }
}

TEST(Parser, ParametersResolve)
{
    const std::vector<std::string> params{"a"};
    const Expression e = parse_expression("a*x", kXY, params);
    Chart chart({"x", "y"}, {{-1, 1}, {-1, 1}});
    ScalarField f = ScalarField::parse(chart, "a*x", {{"a", 2.5}});
    EXPECT_DOUBLE_EQ(f.value(std::vector<double>{0.4, 0}), 1.0);
    EXPECT_TRUE(free_coordinates(e) == std::set<int>{0});
}

TEST(Parser, RoundTripCorpus)
{
    std::vector<std::string> corpus{"-x^2", "2^-x", "-(-x)", "x-(y-1)", "(x-y)-1", "x/(y*2)", "x/y*2", "2^3^2",
                                    "(2^3)^2", "1e-3*x", "pi*e", "-x*y", "(-x)^2", "sin(x)^cos(y)", "abs(x-y)/3",
                                    "sqrt(1+x^2)", "exp(-x^2-y^2)", "2.5e+2 - -x", "cosh(x)-sinh(y)", "atan(x/2)"};
    for (int i = 0; i < 100; ++i) corpus.push_back(random_expression(kXY, 3));
    for (const auto& src : corpus) {
        const Expression e = parse_expression(src, kXY);
        const std::string printed = print(e);
        const Expression again = parse_expression(printed, kXY);
        EXPECT_TRUE(structurally_equal(e, again)) << src << "  ->  " << printed;
        EXPECT_EQ(print(again), printed);
    }
}

TEST(Jet, BilinearProduct)
{
    const Jet j = eval_at("x*y", {2, 3});
    EXPECT_DOUBLE_EQ(j.value(), 6);
    EXPECT_DOUBLE_EQ(j.partial({0}), 3);
    EXPECT_DOUBLE_EQ(j.partial({1}), 2);
    EXPECT_DOUBLE_EQ(j.partial({0, 1}), 1);
    EXPECT_DOUBLE_EQ(j.partial({0, 0}), 0);
    EXPECT_DOUBLE_EQ(j.partial({1, 1}), 0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) EXPECT_DOUBLE_EQ(j.partial({a, b, c}), 0);
}

TEST(Jet, SineAtOrigin)
{
    const Jet j = eval_at("sin(x)", {0, 0});
    EXPECT_DOUBLE_EQ(j.value(), 0);
    EXPECT_DOUBLE_EQ(j.partial({0}), 1);
    EXPECT_DOUBLE_EQ(j.partial({0, 0}), 0);
    EXPECT_DOUBLE_EQ(j.partial({0, 0, 0}), -1);
    EXPECT_DOUBLE_EQ(j.partial({0, 0, 0, 0}), 0);
}

TEST(Jet, ExponentialAgainstFiniteDifferences)
{
    const std::vector<double> p{0.1, 0.2};
    const Jet j = eval_at("exp(x+y^2)", p);
    const auto f = [](std::span<const double> q) { return std::exp(q[0] + q[1] * q[1]); };
    for (const auto& vars : std::vector<std::vector<int>>{{0}, {1}, {0, 1}, {1, 1}, {0, 0, 1}, {1, 1, 1}}) {
        // second-order central stencil with step 1e-4 for first and second partials
        double fd;
        if (vars.size() <= 2) {
            const double h = 1e-4;
            auto shift = [&](double a, double b) {
                std::vector<double> q = p;
                q[static_cast<std::size_t>(vars[0])] += a;
                if (vars.size() == 2) q[static_cast<std::size_t>(vars[1])] += b;
                return f(q);
            };
            fd = vars.size() == 1 ? (shift(h, 0) - shift(-h, 0)) / (2 * h)
                                  : (shift(h, h) - shift(h, -h) - shift(-h, h) + shift(-h, -h)) / (4 * h * h);
        } else {
            fd = fd_partial(f, p, vars, 1e-2);
        }
        const double exact = j.partial(std::span<const int>(vars));
        EXPECT_NEAR(fd, exact, 1e-6 * std::max(1.0, std::abs(exact)));
    }
}

TEST(Jet, ConstantHasZeroPartials)
{
    const Jet c = Jet::constant(3, 4, 2.5);
    EXPECT_EQ(c.value(), 2.5);
    for (std::size_t i = 1; i < c.coefficients().size(); ++i) EXPECT_EQ(c.coefficients()[i], 0.0);
}

TEST(Jet, MixedPartialsAreStoredOnce)
{
    const Jet j = eval_at("sin(x*y)*exp(y)", {0.3, 0.7});
    EXPECT_EQ(j.partial({0, 1}), j.partial({1, 0}));
    EXPECT_EQ(j.partial({0, 1, 1}), j.partial({1, 0, 1}));
    EXPECT_EQ(j.partial({0, 1, 1}), j.partial({1, 1, 0}));
}

TEST(Jet, PolynomialsAreExact)
{
    // p = 3x^4 - 2x^2 y + x y^3 + 5, all derivatives by hand
    const double x = 0.7, y = -1.3;
    const Jet j = eval_at("3*x^4 - 2*x^2*y + x*y^3 + 5", {x, y});
    const auto close = [](double a, double b) { EXPECT_NEAR(a, b, 1e-13 * std::max(1.0, std::abs(b))); };
    close(j.value(), 3 * std::pow(x, 4) - 2 * x * x * y + x * y * y * y + 5);
    close(j.partial({0}), 12 * x * x * x - 4 * x * y + y * y * y);
    close(j.partial({1}), -2 * x * x + 3 * x * y * y);
    close(j.partial({0, 0}), 36 * x * x - 4 * y);
    close(j.partial({0, 1}), -4 * x + 3 * y * y);
    close(j.partial({1, 1}), 6 * x * y);
    close(j.partial({0, 0, 0}), 72 * x);
    close(j.partial({0, 0, 1}), -4);
    close(j.partial({0, 1, 1}), 6 * y);
    close(j.partial({1, 1, 1}), 6 * x);
    close(j.partial({0, 0, 0, 0}), 72);
    close(j.partial({0, 1, 1, 1}), 6);
    close(j.partial({0, 0, 1, 1}), 0);
}

TEST(Jet, AbsUsesSignAtThePoint)
{
    const Jet j = eval_at("abs(x*y)", {-0.5, 2});
    EXPECT_DOUBLE_EQ(j.value(), 1.0);
    EXPECT_DOUBLE_EQ(j.partial({0}), -2.0);
    EXPECT_DOUBLE_EQ(j.partial({1}), 0.5);
}

TEST(Jet, DerivativeLowersOrder)
{
    const Jet j = eval_at("x^3*y", {0.5, 2});
    const Jet d = j.derivative(0);
    EXPECT_EQ(d.order(), 3);
    EXPECT_DOUBLE_EQ(d.value(), 3 * 0.25 * 2);
    EXPECT_DOUBLE_EQ(d.partial({0}), j.partial({0, 0}));
    EXPECT_DOUBLE_EQ(d.partial({0, 1}), j.partial({0, 0, 1}));
}

TEST(Jet, DomainErrorsNameTheSubexpression)
{
    Chart chart({"x", "y"}, {{-1, 1}, {-1, 1}});
    const std::vector<double> p{0.5, 0};
    const std::vector<std::pair<std::string, std::string>> cases{
        {"log(x-1)", "log(x - 1)"}, {"1/(x-0.5)", "1/(x - 0.5)"}, {"sqrt(-1-x)", "sqrt(-1 - x)"}};
    for (const auto& [src, sub] : cases) {
        try {
            ScalarField::parse(chart, src).value(p);
            ADD_FAILURE() << src;
        } catch (const DomainError& e) {
            EXPECT_NE(std::string(e.what()).find(sub), std::string::npos) << e.what();
        }
    }
}

TEST(Jet, HundredExpressionFiniteDifferenceCorpus)
{
    const std::vector<std::string> vars{"x", "y", "z"};
    Chart chart(vars, std::vector<Interval>(3, {-1.0, 1.0}));
    std::vector<std::vector<int>> multi;
    for (int a = 0; a < 3; ++a) {
        multi.push_back({a});
        for (int b = a; b < 3; ++b) {
            multi.push_back({a, b});
            for (int c = b; c < 3; ++c) multi.push_back({a, b, c});
        }
    }
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const ScalarField f = ScalarField::parse(chart, random_expression(vars, 3));
        const std::vector<double> p = random_point(3, 0.7);
        const Jet j = f.eval_jet(p, 3);
        const auto value = [&](std::span<const double> q) { return f.value(q); };
        for (const auto& m : multi) {
            const double exact = j.partial(std::span<const int>(m));
            const double fd = fd_partial(value, p, m, 2e-3);
            const double rel = std::abs(fd - exact) / std::max(1.0, std::abs(exact));
            worst = std::max(worst, rel);
            EXPECT_LE(rel, 1e-6) << print(f.expression()) << " at " << format_point(p);
        }
    }
    RecordProperty("worst_relative_error", std::to_string(worst));
}
