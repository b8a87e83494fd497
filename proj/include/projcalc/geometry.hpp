#pragma once

// Levi-Civita connections, projective shifts, curvature and the weighted
// covariant derivative. Weighted tensors are represented relative to the
// coordinate volume form; a weight-k field picks up |det J|^(k/(n+1)) under
// a change of coordinates.

#include <projcalc/fields.hpp>

#include <string>
#include <vector>

namespace projcalc {

namespace detail {

inline JetTensor truncated(const JetTensor& t, int order)
{
    JetTensor out(t.valence(), t.dim());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].truncated(order);
    return out;
}

inline Jet zero_jet(int n, int order) { return Jet::constant(n, order, 0.0); }

} // namespace detail

// ---------------------------------------------------------------------------
// Connections
// ---------------------------------------------------------------------------

inline JetTensor christoffel_jets(const MetricField& g, std::span<const double> p, int order)
{
    const int n = g.dim();
    const JetTensor gj = g.jets(p, order + 1);
    JetMatrix ginv;
    try {
        ginv = jet_inverse(jet_matrix(detail::truncated(gj, order)), n);
    } catch (const GeometryError&) {
        throw GeometryError("singular metric at " + format_point(p));
    }
    // d[(a*n + b)*n + c] = d_c g_ab
    std::vector<Jet> d;
    d.reserve(static_cast<std::size_t>(n * n * n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) d.push_back(gj.at(a, b).derivative(c));
    auto dg = [&](int a, int b, int c) -> const Jet& { return d[static_cast<std::size_t>((a * n + b) * n + c)]; };

    JetTensor gamma({1, 2}, n, detail::zero_jet(n, order));
    for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) {
            std::vector<Jet> lowered;
            for (int l = 0; l < n; ++l) lowered.push_back(0.5 * (dg(l, k, j) + dg(l, j, k) - dg(j, k, l)));
            for (int i = 0; i < n; ++i) {
                Jet acc = detail::zero_jet(n, order);
                for (int l = 0; l < n; ++l) acc += ginv[static_cast<std::size_t>(i * n + l)] * lowered[static_cast<std::size_t>(l)];
                gamma.at(i, j, k) = acc;
                gamma.at(i, k, j) = acc;
            }
        }
    return gamma;
}

/// Levi-Civita connection of g.
inline ConnectionField christoffel(const MetricField& g)
{
    return ConnectionField(g.chart(), [g](std::span<const double> p, int order) { return christoffel_jets(g, p, order); });
}

/// Gamma-bar^i_jk = Gamma^i_jk + phi_k delta^i_j + phi_j delta^i_k.
inline ConnectionField projective_shift(const ConnectionField& conn, const OneForm& phi)
{
    require_same_chart(conn.chart(), phi.chart(), "projective shift");
    return ConnectionField(conn.chart(), [conn, phi](std::span<const double> p, int order) {
        JetTensor out = conn.jets(p, order);
        const JetTensor f = phi.jets(p, order);
        const int n = out.dim();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    Jet& c = out.at(i, j, k);
                    if (i == j) c += f[static_cast<std::size_t>(k)];
                    if (i == k) c += f[static_cast<std::size_t>(j)];
                }
        return out;
    });
}

// ---------------------------------------------------------------------------
// Curvature
// ---------------------------------------------------------------------------

/// R^m_ikp = d_k G^m_ip - d_p G^m_ik + G^a_ip G^m_ak - G^a_ik G^m_ap.
inline JetTensor curvature_jets(const ConnectionField& conn, std::span<const double> p, int order)
{
    const int n = conn.dim();
    const JetTensor g1 = conn.jets(p, order + 1);
    const JetTensor g = detail::truncated(g1, order);
    JetTensor r({1, 3}, n, detail::zero_jet(n, order));
    for (int m = 0; m < n; ++m)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int q = k + 1; q < n; ++q) {
                    Jet acc = g1.at(m, i, q).derivative(k) - g1.at(m, i, k).derivative(q);
                    for (int a = 0; a < n; ++a) acc += g.at(a, i, q) * g.at(m, a, k) - g.at(a, i, k) * g.at(m, a, q);
                    r.at(m, i, k, q) = acc;
                    r.at(m, i, q, k) = -acc;
                }
    return r;
}

/// R_ij = R^a_ija.
inline JetTensor ricci_jets(const ConnectionField& conn, std::span<const double> p, int order)
{
    const JetTensor r = curvature_jets(conn, p, order);
    const int n = conn.dim();
    JetTensor out({0, 2}, n, detail::zero_jet(n, order));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < n; ++a) out.at(i, j) += r.at(a, i, j, a);
    return out;
}

inline TensorField curvature_field(const ConnectionField& conn)
{
    return TensorField(conn.chart(), {1, 3}, 0.0,
                       [conn](std::span<const double> p, int order) { return curvature_jets(conn, p, order); });
}

inline TensorField ricci_field(const ConnectionField& conn)
{
    return TensorField(conn.chart(), {0, 2}, 0.0,
                       [conn](std::span<const double> p, int order) { return ricci_jets(conn, p, order); });
}

inline PointTensor curvature_tensor(const ConnectionField& conn, std::span<const double> p)
{
    return values(curvature_jets(conn, p, 0));
}

inline PointTensor ricci_tensor(const ConnectionField& conn, std::span<const double> p)
{
    return values(ricci_jets(conn, p, 0));
}

/// R_hikp = g_hm R^m_ikp for the Levi-Civita connection of g.
inline PointTensor lowered_riemann(const MetricField& g, std::span<const double> p)
{
    const PointTensor r = curvature_tensor(christoffel(g), p);
    const PointTensor gm = g.at(p);
    const int n = g.dim();
    PointTensor out({0, 4}, n);
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                for (int q = 0; q < n; ++q) {
                    double acc = 0.0;
                    for (int m = 0; m < n; ++m) acc += gm.at(h, m) * r.at(m, i, k, q);
                    out.at(h, i, k, q) = acc;
                }
    return out;
}

inline double scalar_curvature(const MetricField& g, std::span<const double> p)
{
    const PointTensor ric = ricci_tensor(christoffel(g), p);
    const Eigen::MatrixXd ginv = g.matrix(p).inverse();
    double s = 0.0;
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j) s += ginv(i, j) * ric.at(i, j);
    return s;
}

// ---------------------------------------------------------------------------
// Weighted covariant derivative
// ---------------------------------------------------------------------------

/// Components of nabla T with the derivative index last:
/// d_k T + sum_upper G^u_ks T - sum_lower G^s_kl T - (w/(n+1)) G^s_ks T.
inline JetTensor covariant_derivative_jets(const TensorField& t, const ConnectionField& conn,
                                           std::span<const double> p, int order)
{
    require_same_chart(t.chart(), conn.chart(), "covariant derivative");
    const int n = t.dim();
    const Valence v = t.valence();
    const JetTensor tj = t.jets(p, order + 1);
    const JetTensor g = conn.jets(p, order);
    JetTensor out({v.up, v.down + 1}, n);

    std::vector<Jet> trace;
    const double wfac = t.weight() / (n + 1);
    if (wfac != 0.0)
        for (int k = 0; k < n; ++k) {
            Jet acc = detail::zero_jet(n, order);
            for (int s = 0; s < n; ++s) acc += g.at(s, k, s);
            trace.push_back(acc * wfac);
        }

    std::vector<Jet> base;
    base.reserve(tj.size());
    for (std::size_t f = 0; f < tj.size(); ++f) base.push_back(tj[f].truncated(order));

    std::vector<int> idx2;
    for (std::size_t f = 0; f < tj.size(); ++f) {
        const std::vector<int> idx = tj.unflatten(f);
        for (int k = 0; k < n; ++k) {
            Jet acc = tj[f].derivative(k);
            if (wfac != 0.0) acc -= trace[static_cast<std::size_t>(k)] * base[f];
            for (int a = 0; a < v.rank(); ++a) {
                idx2 = idx;
                for (int s = 0; s < n; ++s) {
                    idx2[static_cast<std::size_t>(a)] = s;
                    const Jet& ts = base[tj.flat(idx2)];
                    if (a < v.up)
                        acc += g.at(idx[static_cast<std::size_t>(a)], k, s) * ts;
                    else
                        acc -= g.at(s, k, idx[static_cast<std::size_t>(a)]) * ts;
                }
            }
            out[f * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = acc;
        }
    }
    return out;
}

/// nabla T as a field of valence (p, q+1) and the same weight.
inline TensorField covariant_derivative(const TensorField& t, const ConnectionField& conn)
{
    require_same_chart(t.chart(), conn.chart(), "covariant derivative");
    const Valence v = t.valence();
    return TensorField(t.chart(), {v.up, v.down + 1}, t.weight(), [t, conn](std::span<const double> p, int order) {
        return covariant_derivative_jets(t, conn, p, order);
    });
}

inline PointTensor weighted_covariant_derivative(const TensorField& t, const ConnectionField& conn,
                                                 std::span<const double> p)
{
    return values(covariant_derivative_jets(t, conn, p, 0));
}

// ---------------------------------------------------------------------------
// Algebra on fields
// ---------------------------------------------------------------------------

/// Outer product; weights add.
inline TensorField tensor_product(const TensorField& a, const TensorField& b)
{
    require_same_chart(a.chart(), b.chart(), "tensor product");
    const Valence va = a.valence(), vb = b.valence();
    const Valence v{va.up + vb.up, va.down + vb.down};
    return TensorField(a.chart(), v, a.weight() + b.weight(), [a, b, v](std::span<const double> p, int order) {
        const JetTensor x = a.jets(p, order);
        const JetTensor y = b.jets(p, order);
        const int n = x.dim();
        JetTensor out(v, n);
        const Valence vx = x.valence();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto ix = x.unflatten(i);
            for (std::size_t j = 0; j < y.size(); ++j) {
                const auto iy = y.unflatten(j);
                std::vector<int> idx;
                idx.insert(idx.end(), ix.begin(), ix.begin() + vx.up);
                idx.insert(idx.end(), iy.begin(), iy.begin() + y.valence().up);
                idx.insert(idx.end(), ix.begin() + vx.up, ix.end());
                idx.insert(idx.end(), iy.begin() + y.valence().up, iy.end());
                out[out.flat(idx)] = x[i] * y[j];
            }
        }
        return out;
    });
}

/// a + s*b for fields of equal valence and weight.
inline TensorField add_scaled(const TensorField& a, double s, const TensorField& b)
{
    require_same_chart(a.chart(), b.chart(), "field sum");
    if (!(a.valence() == b.valence()) || a.weight() != b.weight())
        throw GeometryError("field sum: valence or weight mismatch");
    return TensorField(a.chart(), a.valence(), a.weight(), [a, s, b](std::span<const double> p, int order) {
        JetTensor x = a.jets(p, order);
        const JetTensor y = b.jets(p, order);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += s * y[i];
        return x;
    });
}

inline TensorField scaled(const TensorField& a, double s)
{
    return TensorField(a.chart(), a.valence(), a.weight(), [a, s](std::span<const double> p, int order) {
        JetTensor x = a.jets(p, order);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] *= s;
        return x;
    });
}

/// Weight-0 scalar field from an expression.
inline TensorField scalar_field(const ScalarField& f, double weight = 0.0)
{
    return TensorField::from_components(f.chart(), {0, 0}, weight, {f});
}

/// Field with identical components everywhere.
inline TensorField constant_field(const Chart& chart, Valence v, double weight, std::vector<double> comps)
{
    const int n = chart.dim();
    if (comps.size() != static_cast<std::size_t>(ipow(n, v.rank()))) throw GeometryError("constant field: component count");
    return TensorField(chart, v, weight, [v, n, comps](std::span<const double>, int order) {
        JetTensor out(v, n);
        for (std::size_t i = 0; i < comps.size(); ++i) out[i] = Jet::constant(n, order, comps[i]);
        return out;
    });
}

inline Jet metric_determinant(const JetTensor& g) { return jet_determinant(jet_matrix(g), g.dim()); }

/// (Vol_g)^beta: component (sqrt|det g|)^beta, weight (n+1) beta.
inline TensorField volume_weight_field(const MetricField& g, double beta)
{
    const int n = g.dim();
    return TensorField(g.chart(), {0, 0}, (n + 1) * beta, [g, beta, n](std::span<const double> p, int order) {
        JetTensor out({0, 0}, n);
        const Jet det = metric_determinant(g.jets(p, order));
        if (det.value() == 0.0) throw GeometryError("singular metric at " + format_point(p));
        out[0] = pow(abs(det), 0.5 * beta);
        return out;
    });
}

/// Raise both indices of a (0,2) field with g (weight kept).
inline TensorField inverse_metric_field(const MetricField& g)
{
    const int n = g.dim();
    return TensorField(g.chart(), {2, 0}, 0.0, [g, n](std::span<const double> p, int order) {
        JetMatrix inv;
        try {
            inv = jet_inverse(jet_matrix(g.jets(p, order)), n);
        } catch (const GeometryError&) {
            throw GeometryError("singular metric at " + format_point(p));
        }
        JetTensor out({2, 0}, n);
        for (std::size_t i = 0; i < inv.size(); ++i) out[i] = inv[i];
        return out;
    });
}

// ---------------------------------------------------------------------------
// Pullback
// ---------------------------------------------------------------------------

/// Pullback of a weighted tensor field on map.target() to map.source():
/// lower indices transform with J = dx/dy, upper ones with J^-1, and the
/// result is multiplied by |det J|^(k/(n+1)).
inline TensorField pullback_weighted(const TensorField& t, const ChartMap& map)
{
    require_same_chart(t.chart(), map.target(), "pullback");
    const int n = t.dim();
    const Valence v = t.valence();
    return TensorField(map.source(), v, t.weight(), [t, map, n, v](std::span<const double> y, int order) {
        const std::vector<Jet> fj = map.jets(y, order + 1);
        std::vector<double> x;
        for (const Jet& j : fj) x.push_back(j.value());
        const JetTensor tx = t.jets(x, order);

        // jets of T at F(y), expanded in y
        std::vector<Jet> inner;
        for (const Jet& j : fj) inner.push_back(j.truncated(order));
        std::vector<Jet> ty;
        ty.reserve(tx.size());
        for (std::size_t i = 0; i < tx.size(); ++i) ty.push_back(compose(tx[i], inner));

        JetMatrix jac;
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a) jac.push_back(fj[static_cast<std::size_t>(i)].derivative(a));
        JetMatrix jinv;
        if (v.up > 0) {
            try {
                jinv = jet_inverse(jac, n);
            } catch (const GeometryError&) {
                throw GeometryError("singular Jacobian at " + format_point(y));
            }
        }
        Jet factor = Jet::constant(n, order, 1.0);
        if (t.weight() != 0.0 || v.up == 0) {
            const Jet det = jet_determinant(jac, n);
            if (std::abs(det.value()) <= 1e-300) throw GeometryError("singular Jacobian at " + format_point(y));
            if (t.weight() != 0.0) factor = pow(abs(det), t.weight() / (n + 1));
        }

        // Contract one index at a time.
        std::vector<Jet> cur = ty;
        const int rank = v.rank();
        TensorArray<int> shape(v, n);
        for (int slot = 0; slot < rank; ++slot) {
            std::vector<Jet> next(cur.size(), Jet::constant(n, order, 0.0));
            for (std::size_t f = 0; f < cur.size(); ++f) {
                auto idx = shape.unflatten(f);
                const int out_index = idx[static_cast<std::size_t>(slot)];
                Jet acc = Jet::constant(n, order, 0.0);
                for (int s = 0; s < n; ++s) {
                    idx[static_cast<std::size_t>(slot)] = s;
                    const Jet& c = cur[shape.flat(idx)];
                    if (slot < v.up)
                        acc += jinv[static_cast<std::size_t>(out_index * n + s)] * c;
                    else
                        acc += jac[static_cast<std::size_t>(s * n + out_index)] * c;
                }
                next[f] = acc;
            }
            cur = std::move(next);
        }
        JetTensor out(v, n);
        for (std::size_t i = 0; i < cur.size(); ++i) out[i] = cur[i] * factor;
        return out;
    });
}

inline MetricField pullback_metric(const MetricField& g, const ChartMap& map)
{
    return MetricField(pullback_weighted(g.field(), map), g.signature());
}

} // namespace projcalc
