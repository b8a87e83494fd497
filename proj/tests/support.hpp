#pragma once

// Shared helpers for the test binaries: random expression and field
// generators, and finite-difference stencils used as independent oracles.

#include <projcalc/constructions.hpp>

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using namespace projcalc;

inline std::mt19937_64& rng()
{
    static std::mt19937_64 gen(987654321ULL);
    return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }
inline int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng()); }

inline std::string num(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

/// Random smooth expression in the given variables, bounded and well
/// defined on [-1,1]^n (arguments of log/sqrt stay positive, denominators
/// stay away from zero).
inline std::string random_expression(const std::vector<std::string>& vars, int depth)
{
    auto var = [&] { return vars[static_cast<std::size_t>(uniform_int(0, static_cast<int>(vars.size()) - 1))]; };
    if (depth <= 0) {
        switch (uniform_int(0, 3)) {
        case 0: return num(uniform(-2, 2));
        case 1: return var();
        case 2: return num(uniform(0.2, 1.5)) + "*" + var();
        default: return var() + "^" + std::to_string(uniform_int(2, 4));
        }
    }
    const std::string a = random_expression(vars, depth - 1);
    const std::string b = random_expression(vars, depth - 1);
    switch (uniform_int(0, 11)) {
    case 0: return "(" + a + ") + (" + b + ")";
    case 1: return "(" + a + ") - (" + b + ")";
    case 2: return "(" + a + ")*(" + b + ")";
    case 3: return "(" + a + ")/(2.5 + cos(" + b + "))";
    case 4: return "sin(" + a + ")";
    case 5: return "cos(" + a + ")";
    case 6: return "exp(0.3*sin(" + a + "))";
    case 7: return "log(1.5 + sin(" + a + "))";
    case 8: return "sqrt(2 + cos(" + a + "))";
    case 9: return "atan(" + a + ")";
    case 10: return "-(" + a + ")^2";
    default: return "tan(0.4*sin(" + a + "))";
    }
}

inline std::vector<double> random_point(int n, double r = 0.8)
{
    std::vector<double> p(static_cast<std::size_t>(n));
    for (auto& v : p) v = uniform(-r, r);
    return p;
}

/// Nested 5-point central differences, one variable at a time.
inline double fd_partial(const std::function<double(std::span<const double>)>& f, std::vector<double> p,
                         std::vector<int> vars, double h)
{
    if (vars.empty()) return f(p);
    const int v = vars.back();
    vars.pop_back();
    const auto at = [&](double off) {
        std::vector<double> q = p;
        q[static_cast<std::size_t>(v)] += off;
        return fd_partial(f, q, vars, h);
    };
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
}

/// Random polynomial of total degree <= d in the chart coordinates.
inline std::string random_polynomial(const Chart& chart, int degree, double scale)
{
    std::string out = num(uniform(-scale, scale));
    for (const auto& e : monomial_exponents(chart.dim(), degree)) {
        int total = 0;
        for (int k : e) total += k;
        if (total == 0) continue;
        std::string term = num(uniform(-scale, scale));
        for (int i = 0; i < chart.dim(); ++i)
            for (int k = 0; k < e[static_cast<std::size_t>(i)]; ++k) term += "*" + chart.names()[static_cast<std::size_t>(i)];
        out += " + " + term;
    }
    return out;
}

inline ConnectionField random_polynomial_connection(const Chart& chart, int degree, double scale)
{
    const int n = chart.dim();
    std::vector<std::string> src(static_cast<std::size_t>(n * n * n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = j; k < n; ++k) {
                const std::string s = random_polynomial(chart, degree, scale);
                src[static_cast<std::size_t>((i * n + j) * n + k)] = s;
                src[static_cast<std::size_t>((i * n + k) * n + j)] = s;
            }
    std::vector<ScalarField> comps;
    for (const auto& s : src) comps.push_back(ScalarField::parse(chart, s));
    return ConnectionField::from_components(chart, std::move(comps));
}

inline OneForm random_polynomial_form(const Chart& chart, int degree, double scale)
{
    std::vector<std::string> src;
    for (int i = 0; i < chart.dim(); ++i) src.push_back(random_polynomial(chart, degree, scale));
    return OneForm::parse(chart, src);
}

/// Random Riemannian metric: diagonally dominant identity plus small
/// smooth perturbations.
inline MetricField random_metric(const Chart& chart, double amp = 0.2)
{
    const int n = chart.dim();
    const auto& x = chart.names();
    std::vector<std::string> src(static_cast<std::size_t>(n * n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const std::string a = x[static_cast<std::size_t>(uniform_int(0, n - 1))];
            const std::string b = x[static_cast<std::size_t>(uniform_int(0, n - 1))];
            std::string s = num(uniform(-amp, amp)) + "*sin(" + num(uniform(0.5, 1.5)) + "*" + a + " + " +
                            num(uniform(-1, 1)) + ") + " + num(uniform(-amp, amp)) + "*" + a + "*" + b;
            if (i == j) s = num(uniform(1.0, 2.0)) + " + " + s;
            src[static_cast<std::size_t>(i * n + j)] = s;
            src[static_cast<std::size_t>(j * n + i)] = s;
        }
    return MetricField::parse(chart, src);
}

/// Gnomonic sphere metric built independently: pull back the Euclidean
/// metric of R^(n+1) through u -> (u, 1)/sqrt(1 + |u|^2), differentiating
/// the embedding by central differences.
inline Eigen::MatrixXd embedded_sphere_metric(std::span<const double> u)
{
    const int n = static_cast<int>(u.size());
    const auto embed = [n](std::span<const double> v) {
        double r2 = 1.0;
        for (double c : v) r2 += c * c;
        Eigen::VectorXd y(n + 1);
        for (int i = 0; i < n; ++i) y(i) = v[static_cast<std::size_t>(i)] / std::sqrt(r2);
        y(n) = 1.0 / std::sqrt(r2);
        return y;
    };
    Eigen::MatrixXd jac(n + 1, n);
    const double h = 1e-4;
    for (int a = 0; a < n; ++a) {
        std::vector<double> p(u.begin(), u.end()), m(u.begin(), u.end()), p2(u.begin(), u.end()), m2(u.begin(), u.end());
        p[static_cast<std::size_t>(a)] += h;
        m[static_cast<std::size_t>(a)] -= h;
        p2[static_cast<std::size_t>(a)] += 2 * h;
        m2[static_cast<std::size_t>(a)] -= 2 * h;
        jac.col(a) = (-embed(p2) + 8 * embed(p) - 8 * embed(m) + embed(m2)) / (12 * h);
    }
    return jac.transpose() * jac;
}

} // namespace testing_support
