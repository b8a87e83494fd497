#pragma once

// Charts, tensor component arrays and tensor fields evaluated as jets.

#include <projcalc/error.hpp>
#include <projcalc/expression.hpp>
#include <projcalc/jet.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace projcalc {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool operator==(const Interval&) const = default;
};

/// A rectangular coordinate chart of dimension 2..8.
class Chart {
public:
    Chart() = default;

    Chart(std::vector<std::string> names, std::vector<Interval> domain)
        : names_(std::move(names)), domain_(std::move(domain))
    {
        const auto n = names_.size();
        if (n < 2 || n > static_cast<std::size_t>(kMaxJetVars))
            throw GeometryError("chart dimension must be between 2 and 8");
        if (domain_.size() != n) throw GeometryError("chart domain does not match its dimension");
        for (const auto& iv : domain_)
            if (!(iv.lo < iv.hi)) throw GeometryError("empty chart interval");
        for (std::size_t i = 0; i < n; ++i) {
            if (!is_identifier(names_[i]) || is_reserved_name(names_[i]))
                throw GeometryError("invalid coordinate name '" + names_[i] + "'");
            for (std::size_t j = 0; j < i; ++j)
                if (names_[i] == names_[j]) throw GeometryError("duplicate coordinate '" + names_[i] + "'");
        }
    }

    /// Chart with coordinates named prefix1..prefixN over a common interval.
    static Chart box(int n, Interval iv, const std::string& prefix = "x")
    {
        std::vector<std::string> names;
        for (int i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
        return Chart(std::move(names), std::vector<Interval>(static_cast<std::size_t>(n), iv));
    }

    int dim() const noexcept { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Interval>& domain() const noexcept { return domain_; }

    bool contains(std::span<const double> p) const
    {
        for (std::size_t i = 0; i < domain_.size(); ++i)
            if (!(p[i] >= domain_[i].lo && p[i] <= domain_[i].hi)) return false;
        return true;
    }

    std::vector<double> center() const
    {
        std::vector<double> c;
        for (const auto& iv : domain_) c.push_back(0.5 * (iv.lo + iv.hi));
        return c;
    }

    bool operator==(const Chart&) const = default;

private:
    std::vector<std::string> names_;
    std::vector<Interval> domain_;
};

inline void require_same_chart(const Chart& a, const Chart& b, const char* what)
{
    if (!(a == b)) throw GeometryError(std::string(what) + ": chart mismatch");
}

inline std::string format_point(std::span<const double> p)
{
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ')';
    return os.str();
}

// ---------------------------------------------------------------------------
// Scalar fields
// ---------------------------------------------------------------------------

struct Parameter {
    std::string name;
    double value = 0.0;
};

/// A closed-form expression over a chart, evaluable with exact partials.
class ScalarField {
public:
    ScalarField() = default;

    ScalarField(Chart chart, Expression expr, std::vector<Parameter> params = {})
        : chart_(std::move(chart)), expr_(std::move(expr)), params_(std::move(params))
    {}

    static ScalarField parse(const Chart& chart, std::string_view source, std::vector<Parameter> params = {})
    {
        std::vector<std::string> names;
        for (const auto& p : params) names.push_back(p.name);
        return ScalarField(chart, parse_expression(source, chart.names(), names), std::move(params));
    }

    static ScalarField constant(const Chart& chart, double v) { return ScalarField(chart, number(v)); }

    const Chart& chart() const noexcept { return chart_; }
    const Expression& expression() const noexcept { return expr_; }
    const std::vector<Parameter>& parameters() const noexcept { return params_; }

    Jet eval_jet(std::span<const double> point, int order = kMaxJetOrder) const
    {
        return eval_with(coordinate_jets(point, order));
    }

    Jet eval_with(std::span<const Jet> coords) const
    {
        std::vector<double> values;
        values.reserve(params_.size());
        for (const auto& p : params_) values.push_back(p.value);
        return evaluate(expr_, coords, values);
    }

    double value(std::span<const double> point) const { return eval_jet(point, 0).value(); }

    /// Coordinate-name accessor for building expressions over this chart.
    Expression coord(int i) const { return coordinate(chart_.names()[static_cast<std::size_t>(i)], i); }

private:
    Chart chart_;
    Expression expr_;
    std::vector<Parameter> params_;
};

// ---------------------------------------------------------------------------
// Component arrays
// ---------------------------------------------------------------------------

/// (p,q): number of contravariant and covariant indices.
struct Valence {
    int up = 0;
    int down = 0;

    int rank() const noexcept { return up + down; }
    bool operator==(const Valence&) const = default;
};

inline int ipow(int n, int k)
{
    int r = 1;
    while (k-- > 0) r *= n;
    return r;
}

/// Components of a (p,q) array in dimension n: upper indices first, then
/// lower, row-major.
template <class T>
class TensorArray {
public:
    TensorArray() = default;

    TensorArray(Valence v, int n, T fill = T{})
        : valence_(v), n_(n), data_(static_cast<std::size_t>(ipow(n, v.rank())), fill)
    {}

    Valence valence() const noexcept { return valence_; }
    int dim() const noexcept { return n_; }
    std::size_t size() const noexcept { return data_.size(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::size_t flat(std::initializer_list<int> idx) const
    {
        std::size_t f = 0;
        for (int i : idx) f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
        return f;
    }

    std::size_t flat(std::span<const int> idx) const
    {
        std::size_t f = 0;
        for (int i : idx) f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
        return f;
    }

    T& operator()(std::initializer_list<int> idx) { return data_[flat(idx)]; }
    const T& operator()(std::initializer_list<int> idx) const { return data_[flat(idx)]; }

    template <class... I>
    T& at(I... idx) { return data_[flat({static_cast<int>(idx)...})]; }
    template <class... I>
    const T& at(I... idx) const { return data_[flat({static_cast<int>(idx)...})]; }

    /// Multi-index of a flat position.
    std::vector<int> unflatten(std::size_t f) const
    {
        std::vector<int> idx(static_cast<std::size_t>(valence_.rank()));
        for (int k = valence_.rank() - 1; k >= 0; --k) {
            idx[static_cast<std::size_t>(k)] = static_cast<int>(f % static_cast<std::size_t>(n_));
            f /= static_cast<std::size_t>(n_);
        }
        return idx;
    }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }

private:
    Valence valence_;
    int n_ = 0;
    std::vector<T> data_;
};

using JetTensor = TensorArray<Jet>;
using PointTensor = TensorArray<double>;

inline PointTensor values(const JetTensor& t)
{
    PointTensor out(t.valence(), t.dim());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i].value();
    return out;
}

inline double max_abs(const PointTensor& t)
{
    double m = 0.0;
    for (double v : t.data()) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs_diff(const PointTensor& a, const PointTensor& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline Eigen::MatrixXd to_matrix(const PointTensor& t)
{
    const int n = t.dim();
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = t.at(i, j);
    return m;
}

// ---------------------------------------------------------------------------
// Jet linear algebra
// ---------------------------------------------------------------------------

using JetMatrix = std::vector<Jet>; // n*n, row-major

/// LU with partial pivoting on values; returns the determinant.
inline Jet jet_determinant(JetMatrix a, int n)
{
    Jet det = Jet::constant(a.front().nvars(), a.front().order(), 1.0);
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col].value()) > std::abs(a[piv * n + col].value())) piv = r;
        if (a[piv * n + col].value() == 0.0) return det * 0.0;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
            det = -det;
        }
        const Jet& p = a[col * n + col];
        det = det * p;
        const Jet inv = reciprocal(p);
        for (int r = col + 1; r < n; ++r) {
            const Jet f = a[r * n + col] * inv;
            for (int c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
        }
    }
    return det;
}

/// Gauss-Jordan inverse; throws GeometryError on a (numerically) singular matrix.
inline JetMatrix jet_inverse(JetMatrix a, int n)
{
    const Jet& proto = a.front();
    JetMatrix inv(static_cast<std::size_t>(n * n), Jet::constant(proto.nvars(), proto.order(), 0.0));
    for (int i = 0; i < n; ++i) inv[i * n + i] = Jet::constant(proto.nvars(), proto.order(), 1.0);
    double scale = 0.0;
    for (const Jet& j : a) scale = std::max(scale, std::abs(j.value()));
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col].value()) > std::abs(a[piv * n + col].value())) piv = r;
        if (std::abs(a[piv * n + col].value()) <= 1e-14 * scale)
            throw GeometryError("singular matrix");
        if (piv != col)
            for (int c = 0; c < n; ++c) {
                std::swap(a[col * n + c], a[piv * n + c]);
                std::swap(inv[col * n + c], inv[piv * n + c]);
            }
        const Jet pinv = reciprocal(a[col * n + col]);
        for (int c = 0; c < n; ++c) {
            a[col * n + c] = a[col * n + c] * pinv;
            inv[col * n + c] = inv[col * n + c] * pinv;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const Jet f = a[r * n + col];
            if (f.value() == 0.0 && std::all_of(f.coefficients().begin(), f.coefficients().end(),
                                                [](double v) { return v == 0.0; }))
                continue;
            for (int c = 0; c < n; ++c) {
                a[r * n + c] -= f * a[col * n + c];
                inv[r * n + c] -= f * inv[col * n + c];
            }
        }
    }
    return inv;
}

inline JetMatrix jet_matrix(const JetTensor& t)
{
    return JetMatrix(t.data().begin(), t.data().end());
}

// ---------------------------------------------------------------------------
// Tensor fields
// ---------------------------------------------------------------------------

/// Evaluates all components as jets of the requested order at a point.
using TensorEvaluator = std::function<JetTensor(std::span<const double>, int)>;

/// A (p,q) tensor field of projective weight k, represented by its
/// components relative to the coordinate volume form dx^1 ^ ... ^ dx^n.
/// Weight 0 fields are ordinary tensor fields.
class TensorField {
public:
    TensorField() = default;

    TensorField(Chart chart, Valence valence, double weight, TensorEvaluator eval)
        : chart_(std::move(chart)), valence_(valence), weight_(weight), eval_(std::move(eval))
    {}

    static TensorField from_components(Chart chart, Valence valence, double weight,
                                       std::vector<ScalarField> components)
    {
        const int n = chart.dim();
        if (components.size() != static_cast<std::size_t>(ipow(n, valence.rank())))
            throw GeometryError("component count does not match valence");
        for (const auto& c : components) require_same_chart(c.chart(), chart, "tensor component");
        auto shared = std::make_shared<const std::vector<ScalarField>>(components);
        TensorField f(chart, valence, weight, [shared, valence, n](std::span<const double> p, int order) {
            const auto coords = coordinate_jets(p, order);
            JetTensor out(valence, n);
            for (std::size_t i = 0; i < shared->size(); ++i) out[i] = (*shared)[i].eval_with(coords);
            return out;
        });
        f.components_ = std::move(components);
        return f;
    }

    const Chart& chart() const noexcept { return chart_; }
    int dim() const noexcept { return chart_.dim(); }
    Valence valence() const noexcept { return valence_; }
    double weight() const noexcept { return weight_; }

    JetTensor jets(std::span<const double> point, int order) const { return eval_(point, order); }
    PointTensor at(std::span<const double> point) const { return values(eval_(point, 0)); }

    /// Component expressions when the field was built from expressions.
    const std::optional<std::vector<ScalarField>>& components() const noexcept { return components_; }

    /// Same components, different weight label.
    TensorField with_weight(double w) const
    {
        TensorField f = *this;
        f.weight_ = w;
        return f;
    }

private:
    Chart chart_;
    Valence valence_;
    double weight_ = 0.0;
    TensorEvaluator eval_;
    std::optional<std::vector<ScalarField>> components_;
};

using WeightedTensorField = TensorField;

/// A 1-form (used for projective shifts).
class OneForm {
public:
    OneForm() = default;
    explicit OneForm(TensorField f) : field_(std::move(f))
    {
        if (!(field_.valence() == Valence{0, 1})) throw GeometryError("one-form must have valence (0,1)");
    }

    static OneForm from_components(const Chart& chart, std::vector<ScalarField> comps)
    {
        return OneForm(TensorField::from_components(chart, {0, 1}, 0.0, std::move(comps)));
    }

    static OneForm parse(const Chart& chart, const std::vector<std::string>& sources)
    {
        std::vector<ScalarField> comps;
        for (const auto& s : sources) comps.push_back(ScalarField::parse(chart, s));
        return from_components(chart, std::move(comps));
    }

    const TensorField& field() const noexcept { return field_; }
    const Chart& chart() const noexcept { return field_.chart(); }
    JetTensor jets(std::span<const double> p, int order) const { return field_.jets(p, order); }

private:
    TensorField field_;
};

/// Signature as the number of negative eigenvalues.
struct Signature {
    int negative = 0;
    bool operator==(const Signature&) const = default;
};

/// Metric g_ij: symmetric nondegenerate (0,2) field.
class MetricField {
public:
    MetricField() = default;

    explicit MetricField(TensorField f, Signature sig = {}) : field_(std::move(f)), signature_(sig)
    {
        if (!(field_.valence() == Valence{0, 2}) || field_.weight() != 0.0)
            throw GeometryError("metric must be a weight-0 (0,2) field");
    }

    static MetricField from_components(const Chart& chart, std::vector<ScalarField> comps, Signature sig = {})
    {
        return MetricField(TensorField::from_components(chart, {0, 2}, 0.0, std::move(comps)), sig);
    }

    /// Row-major n x n expression sources.
    static MetricField parse(const Chart& chart, const std::vector<std::string>& sources, Signature sig = {})
    {
        std::vector<ScalarField> comps;
        for (const auto& s : sources) comps.push_back(ScalarField::parse(chart, s));
        return from_components(chart, std::move(comps), sig);
    }

    const TensorField& field() const noexcept { return field_; }
    const Chart& chart() const noexcept { return field_.chart(); }
    int dim() const noexcept { return field_.dim(); }
    Signature signature() const noexcept { return signature_; }

    JetTensor jets(std::span<const double> p, int order) const { return field_.jets(p, order); }
    PointTensor at(std::span<const double> p) const { return field_.at(p); }
    Eigen::MatrixXd matrix(std::span<const double> p) const { return to_matrix(at(p)); }

    /// Checks symmetry, nondegeneracy and signature at the given points.
    void validate(std::span<const std::vector<double>> points, double tol = 1e-12) const
    {
        for (const auto& p : points) {
            const Eigen::MatrixXd g = matrix(p);
            const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
            if ((g - g.transpose()).cwiseAbs().maxCoeff() > tol * scale)
                throw GeometryError("metric is not symmetric at " + format_point(p));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g + g.transpose()));
            const auto& ev = es.eigenvalues();
            int neg = 0;
            for (int i = 0; i < ev.size(); ++i) {
                if (std::abs(ev(i)) <= 1e-12 * scale) throw GeometryError("metric is degenerate at " + format_point(p));
                if (ev(i) < 0) ++neg;
            }
            if (neg != signature_.negative)
                throw GeometryError("metric signature differs from the declared one at " + format_point(p));
        }
    }

private:
    TensorField field_;
    Signature signature_;
};

/// Christoffel symbols Gamma^i_jk stored as a (1,2) array.
class ConnectionField {
public:
    ConnectionField() = default;

    explicit ConnectionField(TensorField f) : field_(std::move(f))
    {
        if (!(field_.valence() == Valence{1, 2})) throw GeometryError("connection must have (1,2) components");
    }

    ConnectionField(Chart chart, TensorEvaluator eval) : ConnectionField(TensorField(std::move(chart), {1, 2}, 0.0, std::move(eval))) {}

    static ConnectionField from_components(const Chart& chart, std::vector<ScalarField> comps)
    {
        return ConnectionField(TensorField::from_components(chart, {1, 2}, 0.0, std::move(comps)));
    }

    static ConnectionField zero(const Chart& chart)
    {
        const int n = chart.dim();
        return ConnectionField(chart, [n](std::span<const double>, int order) {
            return JetTensor({1, 2}, n, Jet::constant(n, order, 0.0));
        });
    }

    const TensorField& field() const noexcept { return field_; }
    const Chart& chart() const noexcept { return field_.chart(); }
    int dim() const noexcept { return field_.dim(); }

    JetTensor jets(std::span<const double> p, int order) const { return field_.jets(p, order); }
    PointTensor at(std::span<const double> p) const { return field_.at(p); }

    /// Max |Gamma^i_jk - Gamma^i_kj| over the points.
    double torsion(std::span<const std::vector<double>> points) const
    {
        double m = 0.0;
        const int n = dim();
        for (const auto& p : points) {
            const PointTensor g = at(p);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k) m = std::max(m, std::abs(g.at(i, j, k) - g.at(i, k, j)));
        }
        return m;
    }

private:
    TensorField field_;
};

/// Map between charts x = F(y); components are functions of the source
/// coordinates y.
class ChartMap {
public:
    using Evaluator = std::function<std::vector<Jet>(std::span<const double>, int)>;

    ChartMap() = default;

    ChartMap(Chart source, Chart target, Evaluator eval)
        : source_(std::move(source)), target_(std::move(target)), eval_(std::move(eval))
    {
        if (source_.dim() != target_.dim()) throw GeometryError("chart map between different dimensions");
    }

    static ChartMap from_components(Chart source, Chart target, std::vector<ScalarField> comps)
    {
        if (static_cast<int>(comps.size()) != target.dim()) throw GeometryError("chart map component count");
        for (const auto& c : comps) require_same_chart(c.chart(), source, "chart map component");
        auto shared = std::make_shared<const std::vector<ScalarField>>(comps);
        ChartMap m(std::move(source), std::move(target), [shared](std::span<const double> p, int order) {
            const auto coords = coordinate_jets(p, order);
            std::vector<Jet> out;
            for (const auto& c : *shared) out.push_back(c.eval_with(coords));
            return out;
        });
        m.components_ = std::move(comps);
        return m;
    }

    static ChartMap identity(const Chart& chart)
    {
        return ChartMap(chart, chart, [](std::span<const double> p, int order) { return coordinate_jets(p, order); });
    }

    const Chart& source() const noexcept { return source_; }
    const Chart& target() const noexcept { return target_; }
    const std::optional<std::vector<ScalarField>>& components() const noexcept { return components_; }

    std::vector<Jet> jets(std::span<const double> p, int order) const { return eval_(p, order); }

    std::vector<double> apply(std::span<const double> p) const
    {
        std::vector<double> out;
        for (const Jet& j : eval_(p, 0)) out.push_back(j.value());
        return out;
    }

    /// J^i_a = dF^i/dy^a.
    Eigen::MatrixXd jacobian(std::span<const double> p) const
    {
        const auto f = eval_(p, 1);
        const int n = source_.dim();
        Eigen::MatrixXd j(n, n);
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < n; ++a) j(i, a) = f[static_cast<std::size_t>(i)].gradient(a);
        return j;
    }

    /// (this o inner)(y) = this(inner(y)).
    ChartMap after(const ChartMap& inner) const
    {
        require_same_chart(inner.target_, source_, "chart map composition");
        auto outer = eval_;
        auto in = inner.eval_;
        return ChartMap(inner.source_, target_, [outer, in](std::span<const double> p, int order) {
            const auto mid = in(p, order);
            std::vector<double> mid_point;
            for (const Jet& j : mid) mid_point.push_back(j.value());
            const auto o = outer(mid_point, order);
            std::vector<Jet> out;
            for (const Jet& j : o) out.push_back(compose(j, mid));
            return out;
        });
    }

private:
    Chart source_;
    Chart target_;
    Evaluator eval_;
    std::optional<std::vector<ScalarField>> components_;
};

} // namespace projcalc
