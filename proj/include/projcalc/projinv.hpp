#pragma once

// Projectively invariant data: the four coefficients of the 2D geodesic ODE,
// projective Killing and trace-free operators, the metrisability operator,
// and the Weyl and Liouville tensors.

#include <projcalc/geometry.hpp>

#include <array>
#include <optional>

namespace projcalc {

// ---------------------------------------------------------------------------
// Two-dimensional projective classes
// ---------------------------------------------------------------------------

/// Coefficients of y'' = K0 + K1 y' + K2 y'^2 + K3 y'^3.
class ProjectiveClass2D {
public:
    using Coefficients = std::array<Jet, 4>;
    using Evaluator = std::function<Coefficients(std::span<const double>, int)>;

    ProjectiveClass2D() = default;

    ProjectiveClass2D(Chart chart, Evaluator eval) : chart_(std::move(chart)), eval_(std::move(eval))
    {
        if (chart_.dim() != 2) throw GeometryError("projective class coefficients need a 2-dimensional chart");
    }

    static ProjectiveClass2D from_expressions(const Chart& chart, std::array<ScalarField, 4> k)
    {
        for (const auto& f : k) require_same_chart(f.chart(), chart, "projective class");
        ProjectiveClass2D c(chart, [k](std::span<const double> p, int order) {
            const auto coords = coordinate_jets(p, order);
            return Coefficients{k[0].eval_with(coords), k[1].eval_with(coords), k[2].eval_with(coords),
                                k[3].eval_with(coords)};
        });
        c.expressions_ = std::move(k);
        return c;
    }

    const Chart& chart() const noexcept { return chart_; }
    Coefficients jets(std::span<const double> p, int order) const { return eval_(p, order); }

    std::array<double, 4> at(std::span<const double> p) const
    {
        const auto k = eval_(p, 0);
        return {k[0].value(), k[1].value(), k[2].value(), k[3].value()};
    }

    const std::optional<std::array<ScalarField, 4>>& expressions() const noexcept { return expressions_; }

    /// The connection with G^1_11 = K1, G^2_11 = -K0, G^1_22 = K3, G^2_22 = -K2
    /// and all mixed symbols zero; its coefficients are exactly (K0..K3).
    ConnectionField representative() const
    {
        auto eval = eval_;
        return ConnectionField(chart_, [eval](std::span<const double> p, int order) {
            const auto k = eval(p, order);
            JetTensor g({1, 2}, 2, Jet::constant(2, order, 0.0));
            g.at(0, 0, 0) = k[1];
            g.at(1, 0, 0) = -k[0];
            g.at(0, 1, 1) = k[3];
            g.at(1, 1, 1) = -k[2];
            return g;
        });
    }

private:
    Chart chart_;
    Evaluator eval_;
    std::optional<std::array<ScalarField, 4>> expressions_;
};

inline ProjectiveClass2D::Coefficients k_coefficient_jets(const JetTensor& g)
{
    return {-g.at(1, 0, 0), g.at(0, 0, 0) - 2.0 * g.at(1, 0, 1), 2.0 * g.at(0, 0, 1) - g.at(1, 1, 1), g.at(0, 1, 1)};
}

inline ProjectiveClass2D k_coefficients(const ConnectionField& conn)
{
    if (conn.dim() != 2) throw GeometryError("K-coefficients are defined in dimension 2 only");
    return ProjectiveClass2D(conn.chart(), [conn](std::span<const double> p, int order) {
        return k_coefficient_jets(conn.jets(p, order));
    });
}

/// Max deviation of Gamma-bar - Gamma from the form phi_k delta^i_j +
/// phi_j delta^i_k at a point, with phi_k = (Gamma-bar - Gamma)^s_sk / (n+1).
inline double projective_equivalence_defect(const ConnectionField& a, const ConnectionField& b,
                                            std::span<const double> p)
{
    require_same_chart(a.chart(), b.chart(), "projective equivalence");
    const int n = a.dim();
    const PointTensor ga = a.at(p), gb = b.at(p);
    std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k)
        for (int s = 0; s < n; ++s) phi[static_cast<std::size_t>(k)] += (gb.at(s, s, k) - ga.at(s, s, k)) / (n + 1);
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double d = gb.at(i, j, k) - ga.at(i, j, k);
                if (i == j) d -= phi[static_cast<std::size_t>(k)];
                if (i == k) d -= phi[static_cast<std::size_t>(j)];
                worst = std::max(worst, std::abs(d));
            }
    return worst;
}

// ---------------------------------------------------------------------------
// Invariant operators
// ---------------------------------------------------------------------------

namespace detail {

inline void require(const TensorField& t, Valence v, double weight, const char* what)
{
    if (!(t.valence() == v)) throw GeometryError(std::string(what) + ": wrong valence");
    if (std::abs(t.weight() - weight) > 1e-12) throw GeometryError(std::string(what) + ": wrong projective weight");
}

inline void require_symmetric(const PointTensor& t, std::span<const double> p, const char* what)
{
    const int n = t.dim();
    const double scale = std::max(1.0, max_abs(t));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(t.at(i, j) - t.at(j, i)) > 1e-12 * scale)
                throw GeometryError(std::string(what) + ": input is not symmetric at " + format_point(p));
}

} // namespace detail

/// K_ij + K_ji where K_ij = (nabla K)_i,j. No checks on valence or weight.
inline PointTensor symmetrized_derivative_1form(const TensorField& k, const ConnectionField& conn,
                                                std::span<const double> p)
{
    const PointTensor d = weighted_covariant_derivative(k, conn, p);
    const int n = k.dim();
    PointTensor out({0, 2}, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out.at(i, j) = d.at(i, j) + d.at(j, i);
    return out;
}

/// K_ij,k + K_jk,i + K_ki,j. No checks on valence or weight.
inline PointTensor symmetrized_derivative_02(const TensorField& k, const ConnectionField& conn,
                                             std::span<const double> p)
{
    const PointTensor d = weighted_covariant_derivative(k, conn, p);
    const int n = k.dim();
    PointTensor out({0, 3}, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) out.at(i, j, l) = d.at(i, j, l) + d.at(j, l, i) + d.at(l, i, j);
    return out;
}

/// Projective Killing operator on weight -2 one-forms.
inline PointTensor projective_killing_residual_1form(const TensorField& k, const ConnectionField& conn,
                                                     std::span<const double> p)
{
    detail::require(k, {0, 1}, -2.0, "projective Killing (1-form)");
    return symmetrized_derivative_1form(k, conn, p);
}

/// Projective Killing operator on symmetric weight -4 (0,2) tensors.
inline PointTensor projective_killing_residual_02(const TensorField& k, const ConnectionField& conn,
                                                  std::span<const double> p)
{
    detail::require(k, {0, 2}, -4.0, "projective Killing (0,2)");
    detail::require_symmetric(k.at(p), p, "projective Killing (0,2)");
    return symmetrized_derivative_02(k, conn, p);
}

/// v^i_,j - (1/n) v^s_,s delta^i_j for a weight 1 vector field.
inline PointTensor tracefree_gradient_vector(const TensorField& v, const ConnectionField& conn,
                                             std::span<const double> p)
{
    detail::require(v, {1, 0}, 1.0, "trace-free gradient");
    PointTensor d = weighted_covariant_derivative(v, conn, p);
    const int n = v.dim();
    double tr = 0.0;
    for (int s = 0; s < n; ++s) tr += d.at(s, s);
    for (int i = 0; i < n; ++i) d.at(i, i) -= tr / n;
    return d;
}

/// Trace-free part of a (2,1) array d^{ij}_k (symmetric in i, j).
inline PointTensor tracefree_21(const PointTensor& d)
{
    const int n = d.dim();
    std::vector<double> tr(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i)
        for (int s = 0; s < n; ++s) tr[static_cast<std::size_t>(i)] += d.at(i, s, s);
    PointTensor e = d;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            e.at(i, j, j) -= tr[static_cast<std::size_t>(i)] / (n + 1);
            e.at(i, j, i) -= tr[static_cast<std::size_t>(j)] / (n + 1);
        }
    return e;
}

/// E^ij_k = s^ij_,k - (1/(n+1)) (s^is_,s delta^j_k + s^js_,s delta^i_k) for a
/// symmetric weight 2 field s, evaluated from the connection symbols and the
/// values and first partials of s at a point. dsigma[(i*n+j)*n+k] = d_k s^ij.
inline PointTensor metrisability_from_values(const PointTensor& gamma, const PointTensor& sigma,
                                             std::span<const double> dsigma)
{
    const int n = sigma.dim();
    PointTensor d({2, 1}, n);
    for (int k = 0; k < n; ++k) {
        double tr = 0.0;
        for (int s = 0; s < n; ++s) tr += gamma.at(s, k, s);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = dsigma[static_cast<std::size_t>((i * n + j) * n + k)] - 2.0 / (n + 1) * tr * sigma.at(i, j);
                for (int s = 0; s < n; ++s) acc += gamma.at(i, k, s) * sigma.at(s, j) + gamma.at(j, k, s) * sigma.at(i, s);
                d.at(i, j, k) = acc;
            }
    }
    return tracefree_21(d);
}

inline PointTensor metrisability_residual(const TensorField& sigma, const ConnectionField& conn,
                                          std::span<const double> p)
{
    detail::require(sigma, {2, 0}, 2.0, "metrisability operator");
    detail::require_symmetric(sigma.at(p), p, "metrisability operator");
    return tracefree_21(weighted_covariant_derivative(sigma, conn, p));
}

/// The four scalar equations of the 2D metrisability system, in the order
/// (sigma22_x ..., sigma22_y - 2 sigma12_x ..., sigma11_x - 2 sigma12_y ...,
/// sigma11_y ...). They are (E^22_1, -3 E^12_1, 3 E^11_1, E^11_2) of the
/// general operator; the remaining components follow from the two trace
/// identities.
inline std::array<double, 4> metrization_system_2d(const PointTensor& e)
{
    if (e.dim() != 2) throw GeometryError("the metrisation system is 2-dimensional");
    return {e.at(1, 1, 0), -3.0 * e.at(0, 1, 0), 3.0 * e.at(0, 0, 0), e.at(0, 0, 1)};
}

// ---------------------------------------------------------------------------
// Weyl and Liouville tensors
// ---------------------------------------------------------------------------

/// Projective Weyl tensor W^h_ijk. The skew part of Ricci enters as
/// R_jk - R_kj.
inline PointTensor weyl_tensor(const ConnectionField& conn, std::span<const double> p)
{
    const int n = conn.dim();
    const PointTensor r = values(curvature_jets(conn, p, 0));
    PointTensor ric({0, 2}, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < n; ++a) ric.at(i, j) += r.at(a, i, j, a);
    auto skew = [&](int a, int b) { return ric.at(a, b) - ric.at(b, a); };
    const double c1 = 1.0 / (n - 1), c2 = 1.0 / (n + 1);
    PointTensor w = r;
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double v = 0.0;
                    if (h == k) v -= c1 * ric.at(i, j) + c2 * c1 * skew(j, i);
                    if (h == j) v += c1 * ric.at(i, k) + c2 * c1 * skew(k, i);
                    if (h == i) v += c2 * skew(j, k);
                    w.at(h, i, j, k) += v;
                }
    return w;
}

/// Ratio between the (L1, L2) pair of the K-coefficient formula and
/// (L_112, L_212) of the metric Liouville tensor. Determined once by
/// comparing the two on several metrics; see the liouville tests.
inline constexpr double kLiouvilleKScale = -3.0;

struct LiouvilleData {
    PointTensor tensor;            ///< L_ijk = R_ij,k - R_ik,j
    std::array<double, 2> pair{};  ///< (L_112, L_212) scaled by kLiouvilleKScale
};

/// Liouville pair (L1, L2) from the K-coefficients of a 2D projective class.
inline std::array<double, 2> liouville_from_coefficients(const ProjectiveClass2D& cls, std::span<const double> p)
{
    const auto k = cls.jets(p, 2);
    auto d = [&](int i, std::initializer_list<int> v) { return k[static_cast<std::size_t>(i)].partial(v); };
    auto val = [&](int i) { return k[static_cast<std::size_t>(i)].value(); };
    const double k0 = val(0), k1 = val(1), k2 = val(2), k3 = val(3);
    const double l1 = 2 * d(1, {0, 1}) - d(2, {0, 0}) - 3 * d(0, {1, 1}) - 6 * k0 * d(3, {0}) - 3 * k3 * d(0, {0})
                      + 3 * k0 * d(2, {1}) + 3 * k2 * d(0, {1}) + k1 * d(2, {0}) - 2 * k1 * d(1, {1});
    const double l2 = 2 * d(2, {0, 1}) - d(1, {1, 1}) - 3 * d(3, {0, 0}) + 6 * k3 * d(0, {1}) + 3 * k0 * d(3, {1})
                      - 3 * k3 * d(1, {0}) - 3 * k1 * d(3, {0}) - k2 * d(1, {1}) + 2 * k2 * d(2, {0});
    return {l1, l2};
}

inline LiouvilleData liouville_tensor(const MetricField& g, std::span<const double> p)
{
    if (g.dim() != 2) throw GeometryError("the Liouville tensor is defined in dimension 2 only");
    const ConnectionField lc = christoffel(g);
    const PointTensor dric = weighted_covariant_derivative(ricci_field(lc), lc, p);
    LiouvilleData out;
    out.tensor = PointTensor({0, 3}, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) out.tensor.at(i, j, k) = dric.at(i, j, k) - dric.at(i, k, j);
    out.pair = {kLiouvilleKScale * out.tensor.at(0, 0, 1), kLiouvilleKScale * out.tensor.at(1, 0, 1)};
    return out;
}

struct CurvatureFit {
    bool constant = false;
    double curvature = 0.0;     ///< fitted sectional curvature
    double max_deviation = 0.0; ///< max |R_hikp - c (g_hk g_ip - g_hp g_ik)|
};

/// Least-squares fit of a single sectional curvature c with
/// R_hikp = c (g_hk g_ip - g_hp g_ik) across all points and components.
inline CurvatureFit constant_curvature_test(const MetricField& g, std::span<const std::vector<double>> points, double tol)
{
    if (points.size() < 2) throw GeometryError("constant curvature test needs at least two points");
    const int n = g.dim();
    std::vector<double> rs, bs;
    for (const auto& p : points) {
        const PointTensor r = lowered_riemann(g, p);
        const PointTensor m = g.at(p);
        for (int h = 0; h < n; ++h)
            for (int i = 0; i < n; ++i)
                for (int k = 0; k < n; ++k)
                    for (int q = 0; q < n; ++q) {
                        rs.push_back(r.at(h, i, k, q));
                        bs.push_back(m.at(h, k) * m.at(i, q) - m.at(h, q) * m.at(i, k));
                    }
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        num += rs[i] * bs[i];
        den += bs[i] * bs[i];
    }
    CurvatureFit fit;
    fit.curvature = den > 0 ? num / den : 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i)
        fit.max_deviation = std::max(fit.max_deviation, std::abs(rs[i] - fit.curvature * bs[i]));
    fit.constant = fit.max_deviation <= tol;
    return fit;
}

} // namespace projcalc
