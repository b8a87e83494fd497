#pragma once

// Named models: flat space, Dini pairs, Levi-Civita block metrics, the
// gnomonic sphere chart and Beltrami maps.

#include <projcalc/flows.hpp>

#include <Eigen/Dense>

#include <map>

namespace projcalc {

namespace detail {

inline std::vector<Parameter> merge_parameters(std::initializer_list<const ScalarField*> fields)
{
    std::vector<Parameter> out;
    for (const ScalarField* f : fields)
        for (const auto& p : f->parameters()) {
            auto it = std::find_if(out.begin(), out.end(), [&](const Parameter& q) { return q.name == p.name; });
            if (it == out.end()) out.push_back(p);
            else if (it->value != p.value) throw InputError("parameter '" + p.name + "' has conflicting values");
        }
    return out;
}

/// Re-targets an expression built over the same coordinate names.
inline ScalarField field_of(const Chart& chart, Expression e, std::vector<Parameter> params)
{
    return ScalarField(chart, std::move(e), std::move(params));
}

inline void require_dependence(const ScalarField& f, const std::set<int>& allowed, const std::string& what)
{
    for (int c : free_coordinates(f.expression()))
        if (!allowed.count(c))
            throw GeometryError(what + " depends on coordinate '" + f.chart().names()[static_cast<std::size_t>(c)] + "'");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Flat model
// ---------------------------------------------------------------------------

struct FlatModel {
    ConnectionField connection;
    MetricField metric;
};

inline FlatModel flat_model(const Chart& chart)
{
    const int n = chart.dim();
    std::vector<ScalarField> comps;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) comps.push_back(ScalarField::constant(chart, i == j ? 1.0 : 0.0));
    return {ConnectionField::zero(chart), MetricField::from_components(chart, std::move(comps))};
}

inline FlatModel flat_model(int n, Interval iv = {-1.0, 1.0}) { return flat_model(Chart::box(n, iv)); }

// ---------------------------------------------------------------------------
// Dini pair
// ---------------------------------------------------------------------------

struct DiniData {
    ScalarField x_fn; ///< X, a function of the first coordinate
    ScalarField y_fn; ///< Y, a function of the second coordinate
    MetricField g;
    MetricField g_bar;
    ATensor a; ///< diag(X, Y)
};

/// g = (X - Y)(dx^2 + dy^2),
/// g-bar = (X - Y)/(X^2 Y) dx^2 + (X - Y)/(X Y^2) dy^2.
/// Checks X > Y > 0 on a grid over the chart (boundary included).
inline DiniData dini_pair(const ScalarField& x_fn, const ScalarField& y_fn, int check_grid = 21)
{
    const Chart& chart = x_fn.chart();
    require_same_chart(chart, y_fn.chart(), "dini_pair");
    if (chart.dim() != 2) throw GeometryError("a Dini pair lives on a 2-dimensional chart");
    detail::require_dependence(x_fn, {0}, "X");
    detail::require_dependence(y_fn, {1}, "Y");
    for (const auto& p : grid_points(chart, check_grid)) {
        const double x = x_fn.value(p), y = y_fn.value(p);
        if (!(y > 0.0) || !(x > 0.0) || !(x - y > 0.0)) {
            std::ostringstream os;
            os.precision(6);
            os << "Dini positivity violated at " << format_point(p) << ": X = " << x << ", Y = " << y
               << " (need X > Y > 0)";
            throw GeometryError(os.str());
        }
    }
    const auto params = detail::merge_parameters({&x_fn, &y_fn});
    const Expression x = x_fn.expression(), y = y_fn.expression();
    const Expression d = x - y;
    const Expression zero = number(0.0), two = number(2.0);
    auto f = [&](Expression e) { return detail::field_of(chart, std::move(e), params); };

    DiniData out{x_fn, y_fn, {}, {}, {}};
    out.g = MetricField::from_components(chart, {f(d), f(zero), f(zero), f(d)});
    out.g_bar = MetricField::from_components(chart, {f(d / (pow(x, two) * y)), f(zero), f(zero), f(d / (x * pow(y, two)))});
    out.a = {TensorField::from_components(chart, {1, 1}, 0.0, {f(x), f(zero), f(zero), f(y)})};
    return out;
}

inline DiniData dini_pair(const Chart& chart, std::string_view x_src, std::string_view y_src,
                          std::vector<Parameter> params = {})
{
    return dini_pair(ScalarField::parse(chart, x_src, params), ScalarField::parse(chart, y_src, params));
}

// ---------------------------------------------------------------------------
// Levi-Civita block model
// ---------------------------------------------------------------------------

struct LeviCivitaData {
    Chart chart;
    ScalarField lambda;                        ///< function of x1 only
    int sign = 1;                              ///< sign in front of lambda (1 - lambda) dx1^2
    std::vector<std::vector<ScalarField>> h;     ///< m x m block over x2..x_{m+1}
    std::vector<std::vector<ScalarField>> h_bar; ///< m-bar x m-bar block over x_{m+2}..x_n
};

struct LeviCivitaModel {
    MetricField g;
    ATensor a; ///< diag(lambda, 0 (m times), 1 (m-bar times))
    MobilitySolution sigma;
    MobilitySolution sigma_bar; ///< A sigma
    int m = 0;
    int m_bar = 0;
};

/// g = sign lambda (1 - lambda) dx1^2 + lambda h + (1 - lambda) h-bar, with
/// h on the 0-eigenvalue block and h-bar on the 1-eigenvalue block.
inline LeviCivitaModel levi_civita_model(const LeviCivitaData& data, int check_grid = 7)
{
    const Chart& chart = data.chart;
    const int n = chart.dim();
    const int m = static_cast<int>(data.h.size()), mb = static_cast<int>(data.h_bar.size());
    if (1 + m + mb != n) throw GeometryError("Levi-Civita blocks do not add up to the chart dimension");
    if (data.sign != 1 && data.sign != -1) throw GeometryError("Levi-Civita sign must be +1 or -1");
    detail::require_dependence(data.lambda, {0}, "lambda");
    std::set<int> hv, hbv;
    for (int i = 1; i <= m; ++i) hv.insert(i);
    for (int i = m + 1; i < n; ++i) hbv.insert(i);
    std::vector<const ScalarField*> all{&data.lambda};
    for (int i = 0; i < m; ++i) {
        if (static_cast<int>(data.h[static_cast<std::size_t>(i)].size()) != m) throw GeometryError("h block is not square");
        for (const auto& c : data.h[static_cast<std::size_t>(i)]) {
            require_same_chart(c.chart(), chart, "levi_civita_model");
            detail::require_dependence(c, hv, "h");
            all.push_back(&c);
        }
    }
    for (int i = 0; i < mb; ++i) {
        if (static_cast<int>(data.h_bar[static_cast<std::size_t>(i)].size()) != mb) throw GeometryError("h-bar block is not square");
        for (const auto& c : data.h_bar[static_cast<std::size_t>(i)]) {
            require_same_chart(c.chart(), chart, "levi_civita_model");
            detail::require_dependence(c, hbv, "h-bar");
            all.push_back(&c);
        }
    }
    for (const auto& p : grid_points(chart, check_grid)) {
        const double l = data.lambda.value(p);
        if (std::abs(l * (1 - l)) <= 1e-12)
            throw GeometryError("lambda reaches 0 or 1 at " + format_point(p));
    }
    std::vector<Parameter> params;
    for (const ScalarField* f : all)
        for (const auto& pr : f->parameters())
            if (std::none_of(params.begin(), params.end(), [&](const Parameter& q) { return q.name == pr.name; }))
                params.push_back(pr);

    const Expression lam = data.lambda.expression();
    const Expression one = number(1.0), zero = number(0.0);
    auto f = [&](Expression e) { return detail::field_of(chart, std::move(e), params); };
    std::vector<ScalarField> gc(static_cast<std::size_t>(n * n), f(zero));
    gc[0] = f(number(data.sign) * lam * (one - lam));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            gc[static_cast<std::size_t>((1 + i) * n + 1 + j)] = f(lam * data.h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].expression());
    for (int i = 0; i < mb; ++i)
        for (int j = 0; j < mb; ++j)
            gc[static_cast<std::size_t>((1 + m + i) * n + 1 + m + j)] =
                f((one - lam) * data.h_bar[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].expression());

    LeviCivitaModel out;
    out.m = m;
    out.m_bar = mb;
    const MetricField probe = MetricField::from_components(chart, gc);
    const Eigen::MatrixXd g0 = probe.matrix(chart.center());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g0 + g0.transpose()));
    int neg = 0;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()(i) < 0) ++neg;
    out.g = MetricField::from_components(chart, gc, Signature{neg});
    out.g.validate(grid_points(chart, 3));

    std::vector<ScalarField> ac(static_cast<std::size_t>(n * n), f(zero));
    ac[0] = f(lam);
    for (int i = 1 + m; i < n; ++i) ac[static_cast<std::size_t>(i * n + i)] = f(one);
    out.a = {TensorField::from_components(chart, {1, 1}, 0.0, ac)};

    out.sigma = sigma_from_metric(out.g);
    const TensorField s = out.sigma.sigma, a = out.a.field;
    out.sigma_bar.sigma = TensorField(chart, {2, 0}, 2.0, [s, a, n](std::span<const double> p, int order) {
        const JetTensor sj = s.jets(p, order), aj = a.jets(p, order);
        JetTensor o({2, 0}, n, Jet::constant(n, order, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) o.at(i, j) += aj.at(i, k) * sj.at(k, j);
        return o;
    });
    out.sigma_bar.residual_norm =
        detail::max_metrisability_residual(out.sigma_bar.sigma, christoffel(out.g), detail::check_points(chart));
    return out;
}

/// t(t-1) xi_1^2 + (t-1)(t-lambda) |xi_0|^2 + t(t-lambda) |xi_1|^2 where
/// xi_frame holds the components of xi in an adapted frame ordered
/// (lambda, 0-block, 1-block).
inline double adapted_family_bracket(double t, double lambda, int m, int m_bar, std::span<const double> xi_frame)
{
    double s0 = 0.0, s1 = 0.0;
    for (int i = 1; i <= m; ++i) s0 += xi_frame[static_cast<std::size_t>(i)] * xi_frame[static_cast<std::size_t>(i)];
    for (int i = 1 + m; i <= m + m_bar; ++i) s1 += xi_frame[static_cast<std::size_t>(i)] * xi_frame[static_cast<std::size_t>(i)];
    return t * (t - 1) * xi_frame[0] * xi_frame[0] + (t - 1) * (t - lambda) * s0 + t * (t - lambda) * s1;
}

/// I_t = t^(m-1) (t-1)^(m_bar-1) times the bracket above.
inline double adapted_family_prefactor(double t, int m, int m_bar)
{
    return std::pow(t, m - 1) * std::pow(t - 1, m_bar - 1);
}

// ---------------------------------------------------------------------------
// Sphere and Beltrami maps
// ---------------------------------------------------------------------------

/// Round unit sphere in a gnomonic chart with coordinates u:
/// g_ij = ((1 + |u|^2) delta_ij - u_i u_j) / (1 + |u|^2)^2.
inline MetricField sphere_gnomonic_model(const Chart& chart)
{
    const int n = chart.dim();
    if (n < 2 || n > 4) throw GeometryError("sphere model supports dimensions 2 to 4");
    std::vector<Expression> u;
    for (int i = 0; i < n; ++i) u.push_back(coordinate(chart.names()[static_cast<std::size_t>(i)], i));
    Expression q = number(1.0);
    for (int i = 0; i < n; ++i) q = q + pow(u[static_cast<std::size_t>(i)], number(2.0));
    const Expression den = pow(q, number(2.0));
    std::vector<ScalarField> comps;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Expression num = i == j ? q - u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)]
                                          : -(u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)]);
            comps.emplace_back(chart, num / den);
        }
    return MetricField::from_components(chart, std::move(comps));
}

/// The same on the chart [-r, r]^n.
inline MetricField sphere_gnomonic_model(int n, double r)
{
    if (n < 2 || n > 4) throw GeometryError("sphere model supports dimensions 2 to 4");
    if (!(r > 0)) throw GeometryError("chart radius must be positive");
    return sphere_gnomonic_model(Chart::box(n, {-r, r}));
}

struct BeltramiMap {
    Eigen::MatrixXd matrix;
    ChartMap map;
};

/// u -> (A[0:n,0:n] u + A[0:n,n]) / (A[n,0:n] u + A[n,n]) from `source` into
/// `target`. Requires det A = 1 and a denominator of one sign on the source.
inline BeltramiMap beltrami_transform(const Eigen::MatrixXd& a, const Chart& source, const Chart& target, int check_grid = 21)
{
    const int n = source.dim();
    if (a.rows() != n + 1 || a.cols() != n + 1) throw GeometryError("Beltrami matrix must be (n+1) x (n+1)");
    if (std::abs(a.determinant() - 1.0) > 1e-12) throw GeometryError("Beltrami matrix must have determinant 1");
    if (target.dim() != n) throw GeometryError("Beltrami map between different dimensions");
    double sign = 0.0;
    for (const auto& p : grid_points(source, check_grid)) {
        double den = a(n, n);
        for (int j = 0; j < n; ++j) den += a(n, j) * p[static_cast<std::size_t>(j)];
        if (std::abs(den) < 1e-9 || (sign != 0.0 && den * sign < 0))
            throw GeometryError("Beltrami map leaves the chart: denominator vanishes near " + format_point(p));
        sign = den;
    }
    std::vector<Expression> u;
    for (int i = 0; i < n; ++i) u.push_back(coordinate(source.names()[static_cast<std::size_t>(i)], i));
    auto affine = [&](int row) {
        Expression e = number(a(row, n));
        for (int j = 0; j < n; ++j)
            if (a(row, j) != 0.0) e = e + number(a(row, j)) * u[static_cast<std::size_t>(j)];
        return e;
    };
    const Expression den = affine(n);
    std::vector<ScalarField> comps;
    for (int i = 0; i < n; ++i) comps.emplace_back(source, affine(i) / den);
    return {a, ChartMap::from_components(source, target, std::move(comps))};
}

inline BeltramiMap beltrami_transform(const Eigen::MatrixXd& a, const Chart& chart)
{
    return beltrami_transform(a, chart, chart);
}

} // namespace projcalc
