#pragma once

// Geodesic integration and first integrals of the geodesic flow.

#include <projcalc/mobility.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace projcalc {

struct GeodesicState {
    double t = 0.0;
    std::vector<double> x;
    std::vector<double> v;
};

/// Value of a first integral, either the Painleve integral or a member of
/// the family I_t (then `t` is set).
struct IntegralEvaluation {
    std::string tag;
    std::optional<double> t;
    double value = 0.0;
    double drift = 0.0; ///< |value - value at start|
};

struct NamedIntegral {
    std::string name;
    std::function<double(const GeodesicState&)> eval;
};

struct GeodesicTrajectory {
    std::vector<GeodesicState> samples;
    std::vector<std::string> integral_names;
    std::vector<std::vector<double>> integral_values; ///< [sample][integral]
    double step = 0.0;
    std::string method = "rk4";
    bool left_domain = false;
    std::optional<double> exit_time; ///< estimated crossing time when left_domain
};

namespace detail {

inline void geodesic_rhs(const ConnectionField& conn, std::span<const double> x, std::span<const double> v,
                         std::span<double> acc)
{
    const PointTensor g = conn.at(x);
    const int n = conn.dim();
    for (int i = 0; i < n; ++i) {
        double a = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) a -= g.at(i, j, k) * v[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(k)];
        acc[static_cast<std::size_t>(i)] = a;
    }
}

inline bool finite(std::span<const double> v)
{
    for (double d : v)
        if (!std::isfinite(d)) return false;
    return true;
}

/// Fraction s in (0,1] along the segment a->b where it first leaves the chart.
inline double exit_fraction(const Chart& chart, std::span<const double> a, std::span<const double> b)
{
    double s = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& iv = chart.domain()[i];
        const double d = b[i] - a[i];
        if (b[i] > iv.hi && d > 0) s = std::min(s, (iv.hi - a[i]) / d);
        if (b[i] < iv.lo && d < 0) s = std::min(s, (iv.lo - a[i]) / d);
    }
    return std::clamp(s, 0.0, 1.0);
}

} // namespace detail

/// Classical fixed-step fourth order Runge-Kutta for
/// x'' + Gamma(x', x') = 0. Stops at the chart boundary.
inline GeodesicTrajectory integrate_geodesic(const ConnectionField& conn, const GeodesicState& start, double t_max,
                                             double step, std::span<const NamedIntegral> integrals = {})
{
    const Chart& chart = conn.chart();
    const int n = chart.dim();
    if (!(step > 0)) throw InputError("step must be positive");
    if (static_cast<int>(start.x.size()) != n || static_cast<int>(start.v.size()) != n)
        throw InputError("start state has the wrong dimension");
    if (!chart.contains(start.x)) throw GeometryError("start point " + format_point(start.x) + " is outside the chart");

    GeodesicTrajectory traj;
    traj.step = step;
    for (const auto& in : integrals) traj.integral_names.push_back(in.name);
    auto record = [&](const GeodesicState& s) {
        traj.samples.push_back(s);
        std::vector<double> vals;
        for (const auto& in : integrals) vals.push_back(in.eval(s));
        traj.integral_values.push_back(std::move(vals));
    };
    record(start);

    const auto un = static_cast<std::size_t>(n);
    std::vector<double> x = start.x, v = start.v;
    std::vector<double> k1x(un), k1v(un), k2x(un), k2v(un), k3x(un), k3v(un), k4x(un), k4v(un), tx(un), tv(un);
    const auto nsteps = static_cast<long>(std::ceil(t_max / step - 1e-9));
    double t = start.t;

    auto stage = [&](std::span<const double> sx, std::span<const double> sv, std::vector<double>& ox, std::vector<double>& ov) {
        if (!chart.contains(sx)) return false;
        std::copy(sv.begin(), sv.end(), ox.begin());
        detail::geodesic_rhs(conn, sx, sv, ov);
        return true;
    };

    for (long s = 0; s < nsteps; ++s) {
        const double h = std::min(step, start.t + t_max - t);
        if (h <= 0) break;
        bool ok = stage(x, v, k1x, k1v);
        if (ok) {
            for (std::size_t i = 0; i < un; ++i) tx[i] = x[i] + 0.5 * h * k1x[i], tv[i] = v[i] + 0.5 * h * k1v[i];
            ok = stage(tx, tv, k2x, k2v);
        }
        if (ok) {
            for (std::size_t i = 0; i < un; ++i) tx[i] = x[i] + 0.5 * h * k2x[i], tv[i] = v[i] + 0.5 * h * k2v[i];
            ok = stage(tx, tv, k3x, k3v);
        }
        if (ok) {
            for (std::size_t i = 0; i < un; ++i) tx[i] = x[i] + h * k3x[i], tv[i] = v[i] + h * k3v[i];
            ok = stage(tx, tv, k4x, k4v);
        }
        std::vector<double> nx(un), nv(un);
        if (ok) {
            for (std::size_t i = 0; i < un; ++i) {
                nx[i] = x[i] + h / 6 * (k1x[i] + 2 * k2x[i] + 2 * k3x[i] + k4x[i]);
                nv[i] = v[i] + h / 6 * (k1v[i] + 2 * k2v[i] + 2 * k3v[i] + k4v[i]);
            }
            if (!detail::finite(nx) || !detail::finite(nv))
                throw GeometryError("geodesic state became nonfinite at t = " + std::to_string(t));
            ok = chart.contains(nx);
        }
        if (!ok) {
            // crossing estimated along the straight step x + h v
            std::vector<double> probe(un);
            for (std::size_t i = 0; i < un; ++i) probe[i] = x[i] + h * v[i];
            traj.left_domain = true;
            traj.exit_time = t + h * (chart.contains(probe) ? 1.0 : detail::exit_fraction(chart, x, probe));
            break;
        }
        x = std::move(nx);
        v = std::move(nv);
        t = start.t + static_cast<double>(s + 1) * step;
        if (s + 1 == nsteps) t = std::min(t, start.t + t_max);
        record({t, x, v});
    }
    return traj;
}

// ---------------------------------------------------------------------------
// 2D projective ODE
// ---------------------------------------------------------------------------

struct ProjectiveCurve {
    std::vector<double> x, y, slope;
    bool left_domain = false;
};

/// y'' = K0 + K1 y' + K2 y'^2 + K3 y'^3, RK4 in x. x_max may be below x0.
inline ProjectiveCurve integrate_projective_ode(const ProjectiveClass2D& cls, double x0, double y0, double slope0,
                                                double x_max, double step, double blowup = 1e8)
{
    if (!(step > 0)) throw InputError("step must be positive");
    const Chart& chart = cls.chart();
    auto rhs = [&](double x, double y, double q) {
        const std::array<double, 2> p{x, y};
        if (!chart.contains(p)) return std::optional<double>{};
        const auto k = cls.at(p);
        return std::optional<double>(k[0] + q * (k[1] + q * (k[2] + q * k[3])));
    };
    ProjectiveCurve c;
    const double dir = x_max >= x0 ? 1.0 : -1.0;
    const double len = std::abs(x_max - x0);
    const auto nsteps = static_cast<long>(std::ceil(len / step - 1e-9));
    double x = x0, y = y0, q = slope0;
    {
        const std::array<double, 2> p{x, y};
        if (!chart.contains(p)) throw GeometryError("start point outside the chart");
    }
    c.x.push_back(x);
    c.y.push_back(y);
    c.slope.push_back(q);
    for (long s = 0; s < nsteps; ++s) {
        const double h = dir * std::min(step, len - static_cast<double>(s) * step);
        const auto a1 = rhs(x, y, q);
        if (!a1) { c.left_domain = true; break; }
        const auto a2 = rhs(x + h / 2, y + h / 2 * q, q + h / 2 * *a1);
        if (!a2) { c.left_domain = true; break; }
        const double q2 = q + h / 2 * *a1;
        const auto a3 = rhs(x + h / 2, y + h / 2 * q2, q + h / 2 * *a2);
        if (!a3) { c.left_domain = true; break; }
        const double q3 = q + h / 2 * *a2;
        const auto a4 = rhs(x + h, y + h * q3, q + h * *a3);
        if (!a4) { c.left_domain = true; break; }
        const double q4 = q + h * *a3;
        const double ny = y + h / 6 * (q + 2 * q2 + 2 * q3 + q4);
        const double nq = q + h / 6 * (*a1 + 2 * *a2 + 2 * *a3 + *a4);
        if (!std::isfinite(nq) || std::abs(nq) > blowup)
            throw GeometryError("slope blew up after x = " + std::to_string(x));
        x = x0 + dir * std::min(len, static_cast<double>(s + 1) * step);
        y = ny;
        q = nq;
        const std::array<double, 2> p{x, y};
        if (!chart.contains(p)) { c.left_domain = true; break; }
        c.x.push_back(x);
        c.y.push_back(y);
        c.slope.push_back(q);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Reparameterisation check
// ---------------------------------------------------------------------------

/// Max over samples of |a - (a.v / v.v) v| (Euclidean), a = x'' + Gamma(x', x'),
/// with x' and x'' from finite differences on a uniform parameter grid.
inline double reparameterization_check(const ConnectionField& conn, std::span<const double> params,
                                       std::span<const std::vector<double>> positions)
{
    const std::size_t m = positions.size();
    if (m < 3 || params.size() != m) throw InputError("reparameterization check needs at least 3 samples");
    const int n = conn.dim();
    const double h = (params[m - 1] - params[0]) / static_cast<double>(m - 1);
    const bool five = m >= 5;
    const std::size_t lo = five ? 2 : 1, hi = five ? m - 2 : m - 1;
    double worst = 0.0;
    std::vector<double> d1(static_cast<std::size_t>(n)), d2(static_cast<std::size_t>(n));
    for (std::size_t s = lo; s < hi; ++s) {
        for (int i = 0; i < n; ++i) {
            auto f = [&](std::size_t k) { return positions[k][static_cast<std::size_t>(i)]; };
            if (five) {
                d1[static_cast<std::size_t>(i)] = (-f(s + 2) + 8 * f(s + 1) - 8 * f(s - 1) + f(s - 2)) / (12 * h);
                d2[static_cast<std::size_t>(i)] = (-f(s + 2) + 16 * f(s + 1) - 30 * f(s) + 16 * f(s - 1) - f(s - 2)) / (12 * h * h);
            } else {
                d1[static_cast<std::size_t>(i)] = (f(s + 1) - f(s - 1)) / (2 * h);
                d2[static_cast<std::size_t>(i)] = (f(s + 1) - 2 * f(s) + f(s - 1)) / (h * h);
            }
        }
        const PointTensor g = conn.at(positions[s]);
        Eigen::VectorXd a(n), v(n);
        for (int i = 0; i < n; ++i) {
            double acc = d2[static_cast<std::size_t>(i)];
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) acc += g.at(i, j, k) * d1[static_cast<std::size_t>(j)] * d1[static_cast<std::size_t>(k)];
            a(i) = acc;
            v(i) = d1[static_cast<std::size_t>(i)];
        }
        const double vv = v.squaredNorm();
        const Eigen::VectorXd perp = vv > 0 ? Eigen::VectorXd(a - (a.dot(v) / vv) * v) : a;
        worst = std::max(worst, perp.norm());
    }
    return worst;
}

inline double reparameterization_check(const ConnectionField& conn, const ProjectiveCurve& curve)
{
    std::vector<std::vector<double>> pos;
    for (std::size_t i = 0; i < curve.x.size(); ++i) pos.push_back({curve.x[i], curve.y[i]});
    return reparameterization_check(conn, curve.x, pos);
}

inline double reparameterization_check(const ConnectionField& conn, const GeodesicTrajectory& traj)
{
    std::vector<double> ts;
    std::vector<std::vector<double>> pos;
    for (const auto& s : traj.samples) {
        ts.push_back(s.t);
        pos.push_back(s.x);
    }
    return reparameterization_check(conn, ts, pos);
}

// ---------------------------------------------------------------------------
// Integrals
// ---------------------------------------------------------------------------

inline double quadratic_form(const Eigen::MatrixXd& m, std::span<const double> xi)
{
    const Eigen::Map<const Eigen::VectorXd> v(xi.data(), static_cast<Eigen::Index>(xi.size()));
    return v.dot(m * v);
}

/// I(xi) = |det g / det g-bar|^(2/(n+1)) g-bar(xi, xi).
inline IntegralEvaluation painleve_integral(const MetricField& g, const MetricField& g_bar, const GeodesicState& s)
{
    const int n = g.dim();
    const Eigen::MatrixXd gm = g.matrix(s.x), gb = g_bar.matrix(s.x);
    const double dg = gm.determinant(), db = gb.determinant();
    if (dg == 0.0 || db == 0.0) throw GeometryError("singular metric at " + format_point(s.x));
    IntegralEvaluation e;
    e.tag = "painleve";
    e.value = std::pow(std::abs(dg / db), 2.0 / (n + 1)) * quadratic_form(gb, s.v);
    return e;
}

/// Adjugate by cofactor expansion.
inline Eigen::MatrixXd adjugate_cofactor(const Eigen::MatrixXd& m)
{
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd adj(n, n);
    if (n == 1) {
        adj(0, 0) = 1.0;
        return adj;
    }
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::MatrixXd minor(n - 1, n - 1);
            for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
                if (r == i) continue;
                for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
                    if (c == j) continue;
                    minor(rr, cc++) = m(r, c);
                }
                ++rr;
            }
            const double cof = ((i + j) % 2 ? -1.0 : 1.0) * (n - 1 == 1 ? minor(0, 0) : minor.determinant());
            adj(j, i) = cof;
        }
    return adj;
}

/// Characteristic polynomial det(t I - m) = sum_k c[k] t^k, c[n] = 1,
/// by the Faddeev-LeVerrier recursion.
inline std::vector<double> characteristic_polynomial(const Eigen::MatrixXd& m)
{
    const Eigen::Index n = m.rows();
    std::vector<double> c(static_cast<std::size_t>(n + 1), 0.0);
    c[static_cast<std::size_t>(n)] = 1.0;
    Eigen::MatrixXd mk = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = 1; k <= n; ++k) {
        mk = m * mk + c[static_cast<std::size_t>(n - k + 1)] * id;
        c[static_cast<std::size_t>(n - k)] = -(m * mk).trace() / static_cast<double>(k);
    }
    return c;
}

/// Adjugate from the Faddeev-LeVerrier recursion.
inline Eigen::MatrixXd adjugate_faddeev(const Eigen::MatrixXd& m)
{
    const Eigen::Index n = m.rows();
    const auto c = characteristic_polynomial(m);
    // B_{n-1} = I, B_{k-1} = m B_k + c_k I; then adj(t I - m) = sum t^k B_k and
    // adj(-m) = B_0, so adj(m) = (-1)^(n-1) B_0.
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = n - 1; k >= 1; --k) b = m * b + c[static_cast<std::size_t>(k)] * Eigen::MatrixXd::Identity(n, n);
    return ((n - 1) % 2 ? -1.0 : 1.0) * b;
}

/// Comatrix: cofactor expansion up to 4x4, Faddeev-LeVerrier above.
inline Eigen::MatrixXd adjugate(const Eigen::MatrixXd& m)
{
    return m.rows() <= 4 ? adjugate_cofactor(m) : adjugate_faddeev(m);
}

/// I_t(xi) = g(co(t id - A) xi, xi).
inline IntegralEvaluation integral_family(const MetricField& g, const ATensor& a, double t, const GeodesicState& s)
{
    const Eigen::MatrixXd gm = g.matrix(s.x), am = a.matrix(s.x);
    const Eigen::Index n = gm.rows();
    const Eigen::MatrixXd co = adjugate(t * Eigen::MatrixXd::Identity(n, n) - am);
    const Eigen::Map<const Eigen::VectorXd> xi(s.v.data(), n);
    IntegralEvaluation e;
    e.tag = "family";
    e.t = t;
    e.value = xi.dot(gm * (co * xi));
    return e;
}

/// Coefficients c_0..c_{n-1} of I_t = sum c_k t^k at a state.
inline std::vector<double> integral_family_coefficients(const MetricField& g, const ATensor& a, const GeodesicState& s)
{
    const Eigen::MatrixXd gm = g.matrix(s.x), am = a.matrix(s.x);
    const Eigen::Index n = gm.rows();
    const auto c = characteristic_polynomial(am);
    const Eigen::Map<const Eigen::VectorXd> xi(s.v.data(), n);
    std::vector<double> out(static_cast<std::size_t>(n));
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index k = n - 1; k >= 0; --k) {
        out[static_cast<std::size_t>(k)] = xi.dot(gm * (b * xi));
        if (k > 0) b = am * b + c[static_cast<std::size_t>(k)] * Eigen::MatrixXd::Identity(n, n);
    }
    return out;
}

inline double energy(const MetricField& g, const GeodesicState& s) { return quadratic_form(g.matrix(s.x), s.v); }

struct ConservationRow {
    std::string name;
    double initial = 0.0;
    double max_abs_drift = 0.0;
    double max_rel_drift = 0.0;
    std::vector<double> drift; ///< per sample
};

/// Drift of each recorded integral against its value at the first sample.
/// Relative drift is taken against |initial| (absolute if that is zero).
inline std::vector<ConservationRow> conservation_report(const GeodesicTrajectory& traj)
{
    if (traj.samples.empty()) throw InputError("empty trajectory");
    std::vector<ConservationRow> rows;
    for (std::size_t k = 0; k < traj.integral_names.size(); ++k) {
        ConservationRow r;
        r.name = traj.integral_names[k];
        r.initial = traj.integral_values.front()[k];
        const double denom = r.initial != 0.0 ? std::abs(r.initial) : 1.0;
        for (const auto& vals : traj.integral_values) {
            const double d = std::abs(vals[k] - r.initial);
            r.drift.push_back(d);
            r.max_abs_drift = std::max(r.max_abs_drift, d);
        }
        r.max_rel_drift = r.max_abs_drift / denom;
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Evaluates extra integrals on an existing trajectory.
inline std::vector<ConservationRow> conservation_report(const GeodesicTrajectory& traj,
                                                        std::span<const NamedIntegral> integrals)
{
    GeodesicTrajectory t = traj;
    t.integral_names.clear();
    t.integral_values.clear();
    for (const auto& in : integrals) t.integral_names.push_back(in.name);
    for (const auto& s : t.samples) {
        std::vector<double> vals;
        for (const auto& in : integrals) vals.push_back(in.eval(s));
        t.integral_values.push_back(std::move(vals));
    }
    return conservation_report(t);
}

} // namespace projcalc
