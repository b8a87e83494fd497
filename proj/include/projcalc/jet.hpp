#pragma once

// Truncated multivariate Taylor arithmetic ("jets").
//
// A Jet holds the Taylor coefficients f_a = (d^a f)(x0) / a! of a function of
// up to kMaxJetVars variables, for every multi-index a of total degree at most
// the jet's order (<= kMaxJetOrder). Coefficients are stored graded by total
// degree, so the layout of a lower-order jet is a prefix of the layout of a
// higher-order one and truncation is a resize.

#include <projcalc/error.hpp>

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

namespace projcalc {

inline constexpr int kMaxJetOrder = 4;
inline constexpr int kMaxJetVars = 8;

using MultiIndex = std::array<std::uint8_t, kMaxJetVars>;

/// Coefficient layout and product tables for one variable count.
class JetLayout {
public:
    struct Product {
        int lhs;
        int rhs;
        int out;
    };

    static const JetLayout& get(int nvars)
    {
        if (nvars < 1 || nvars > kMaxJetVars)
            throw Error("jet variable count out of range: " + std::to_string(nvars));
        static const std::array<JetLayout, kMaxJetVars> layouts = [] {
            std::array<JetLayout, kMaxJetVars> all;
            for (int n = 1; n <= kMaxJetVars; ++n) all[n - 1].build(n);
            return all;
        }();
        return layouts[nvars - 1];
    }

    int nvars() const noexcept { return nvars_; }

    /// Number of coefficients of a jet of the given order.
    int size(int order) const noexcept { return degree_start_[order + 1]; }
    int degree_start(int degree) const noexcept { return degree_start_[degree]; }

    const MultiIndex& multi(int index) const noexcept { return multi_[index]; }
    int degree(int index) const noexcept { return degree_[index]; }

    /// Index of multi(index) + e_var, or -1 past kMaxJetOrder.
    int raise(int index, int var) const noexcept { return raise_[index * nvars_ + var]; }

    int index_of(const MultiIndex& m) const
    {
        auto it = lookup_.find(pack(m));
        return it == lookup_.end() ? -1 : it->second;
    }

    /// a! for the multi-index at `index`.
    double factorial(int index) const noexcept { return factorial_[index]; }

    /// Product terms whose output index is below size(order); sorted by output.
    std::span<const Product> products(int order) const noexcept
    {
        return {products_.data(), static_cast<std::size_t>(product_end_[order])};
    }

private:
    static std::uint32_t pack(const MultiIndex& m)
    {
        std::uint32_t key = 0;
        for (int i = 0; i < kMaxJetVars; ++i) key = key * (kMaxJetOrder + 1) + m[i];
        return key;
    }

    void build(int n)
    {
        nvars_ = n;
        degree_start_.assign(kMaxJetOrder + 2, 0);
        for (int d = 0; d <= kMaxJetOrder; ++d) {
            degree_start_[d] = static_cast<int>(multi_.size());
            MultiIndex m{};
            enumerate(m, 0, d);
        }
        degree_start_[kMaxJetOrder + 1] = static_cast<int>(multi_.size());

        for (int i = 0; i < static_cast<int>(multi_.size()); ++i) {
            lookup_[pack(multi_[i])] = i;
            double f = 1.0;
            int deg = 0;
            for (int v = 0; v < n; ++v) {
                deg += multi_[i][v];
                for (int k = 2; k <= multi_[i][v]; ++k) f *= k;
            }
            factorial_.push_back(f);
            degree_.push_back(deg);
        }
        raise_.assign(multi_.size() * n, -1);
        for (int i = 0; i < static_cast<int>(multi_.size()); ++i) {
            for (int v = 0; v < n; ++v) {
                if (degree_[i] == kMaxJetOrder) continue;
                MultiIndex m = multi_[i];
                ++m[v];
                raise_[i * n + v] = index_of(m);
            }
        }
        for (int out = 0; out < static_cast<int>(multi_.size()); ++out) {
            const MultiIndex& c = multi_[out];
            for (int a = 0; a <= out; ++a) {
                const MultiIndex& am = multi_[a];
                bool fits = true;
                MultiIndex bm{};
                for (int v = 0; v < n && fits; ++v) {
                    if (am[v] > c[v]) fits = false;
                    else bm[v] = static_cast<std::uint8_t>(c[v] - am[v]);
                }
                if (fits) products_.push_back({a, index_of(bm), out});
            }
        }
        product_end_.assign(kMaxJetOrder + 1, 0);
        for (int order = 0; order <= kMaxJetOrder; ++order) {
            const int limit = size(order);
            product_end_[order] = static_cast<int>(
                std::partition_point(products_.begin(), products_.end(),
                                     [&](const Product& p) { return p.out < limit; }) -
                products_.begin());
        }
    }

    // Degree-d multi-indices in lexicographic order, first variable highest.
    void enumerate(MultiIndex& m, int var, int remaining)
    {
        if (var == nvars_ - 1) {
            m[var] = static_cast<std::uint8_t>(remaining);
            multi_.push_back(m);
            m[var] = 0;
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            m[var] = static_cast<std::uint8_t>(k);
            enumerate(m, var + 1, remaining - k);
        }
        m[var] = 0;
    }

    int nvars_ = 0;
    std::vector<MultiIndex> multi_;
    std::vector<int> degree_;
    std::vector<int> degree_start_;
    std::vector<int> raise_;
    std::vector<double> factorial_;
    std::vector<Product> products_;
    std::vector<int> product_end_;
    std::unordered_map<std::uint32_t, int> lookup_;
};

class Jet {
public:
    Jet() = default;

    Jet(int nvars, int order) : nvars_(nvars), order_(order)
    {
        if (order < 0 || order > kMaxJetOrder)
            throw Error("jet order out of range: " + std::to_string(order));
        resize(layout().size(order));
    }

    static Jet constant(int nvars, int order, double value)
    {
        Jet j(nvars, order);
        j[0] = value;
        return j;
    }

    /// The coordinate function x_var expanded around x_var = value.
    static Jet variable(int nvars, int order, int var, double value)
    {
        Jet j = constant(nvars, order, value);
        if (order >= 1) j[1 + var] = 1.0;
        return j;
    }

    int nvars() const noexcept { return nvars_; }
    int order() const noexcept { return order_; }
    int size() const noexcept { return size_; }
    const JetLayout& layout() const { return JetLayout::get(nvars_); }

    double value() const noexcept { return data()[0]; }

    double& operator[](int i) noexcept { return data()[i]; }
    double operator[](int i) const noexcept { return data()[i]; }

    std::span<const double> coefficients() const noexcept
    {
        return {data(), static_cast<std::size_t>(size_)};
    }

    /// Partial derivative given as a list of variable indices, e.g. {0,0,1}
    /// is d^3/dx0^2 dx1. Zero beyond the jet's order.
    double partial(std::initializer_list<int> vars) const
    {
        return partial(std::span<const int>(vars.begin(), vars.size()));
    }

    double partial(std::span<const int> vars) const
    {
        if (static_cast<int>(vars.size()) > order_) return 0.0;
        MultiIndex m{};
        for (int v : vars) {
            assert(v >= 0 && v < nvars_);
            ++m[v];
        }
        const JetLayout& l = layout();
        const int idx = l.index_of(m);
        return data()[idx] * l.factorial(idx);
    }

    double gradient(int var) const { return order_ >= 1 ? data()[1 + var] : 0.0; }

    /// d/dx_var; the result has order one less.
    Jet derivative(int var) const
    {
        if (order_ == 0) throw Error("cannot differentiate an order-0 jet");
        const JetLayout& l = layout();
        Jet out(nvars_, order_ - 1);
        for (int i = 0; i < out.size_; ++i) {
            const int up = l.raise(i, var);
            out[i] = (l.multi(i)[var] + 1) * data()[up];
        }
        return out;
    }

    Jet truncated(int order) const
    {
        if (order >= order_) return *this;
        Jet out(nvars_, order);
        std::copy_n(data(), out.size_, out.data());
        return out;
    }

    Jet& operator+=(const Jet& o)
    {
        match(o);
        for (int i = 0; i < size_; ++i) data()[i] += o[i];
        return *this;
    }
    Jet& operator-=(const Jet& o)
    {
        match(o);
        for (int i = 0; i < size_; ++i) data()[i] -= o[i];
        return *this;
    }
    Jet& operator+=(double s) { data()[0] += s; return *this; }
    Jet& operator-=(double s) { data()[0] -= s; return *this; }
    Jet& operator*=(double s)
    {
        for (int i = 0; i < size_; ++i) data()[i] *= s;
        return *this;
    }
    Jet& operator*=(const Jet& o) { return *this = *this * o; }
    Jet& operator/=(const Jet& o) { return *this = *this / o; }

    friend Jet operator-(Jet a)
    {
        for (int i = 0; i < a.size_; ++i) a[i] = -a[i];
        return a;
    }
    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a -= s; }
    friend Jet operator-(double s, Jet a) { return -(a -= s); }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }

    friend Jet operator*(const Jet& a, const Jet& b)
    {
        if (a.nvars_ != b.nvars_) throw Error("jet variable count mismatch");
        const int order = std::min(a.order_, b.order_);
        Jet out(a.nvars_, order);
        const double* pa = a.data();
        const double* pb = b.data();
        double* po = out.data();
        for (const auto& p : a.layout().products(order)) po[p.out] += pa[p.lhs] * pb[p.rhs];
        return out;
    }

    friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
    friend Jet operator/(double s, const Jet& b) { return s * reciprocal(b); }
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

    /// Compose a univariate function with this jet, given the derivatives
    /// f(u0), f'(u0), ..., f^(order)(u0) at u0 = value().
    Jet apply(std::span<const double> derivatives) const
    {
        assert(static_cast<int>(derivatives.size()) > order_);
        Jet delta = *this;
        delta[0] = 0.0;
        double kfact = 1.0;
        for (int k = 2; k <= order_; ++k) kfact *= k;
        Jet out = constant(nvars_, order_, derivatives[order_] / kfact);
        for (int k = order_ - 1; k >= 0; --k) {
            kfact /= (k + 1);
            out = out * delta;
            out[0] += derivatives[k] / kfact;
        }
        return out;
    }

    friend Jet reciprocal(const Jet& u)
    {
        const double x = u.value();
        if (x == 0.0) throw DomainError("division by zero");
        std::array<double, kMaxJetOrder + 1> d{};
        double p = 1.0 / x;
        double sign = 1.0;
        double fact = 1.0;
        for (int k = 0; k <= u.order_; ++k) {
            d[k] = sign * fact * p;
            p /= x;
            sign = -sign;
            fact *= (k + 1);
        }
        return u.apply(d);
    }

private:
    static constexpr int kInline = 15;

    void resize(int n)
    {
        size_ = n;
        if (n > kInline) heap_.assign(n, 0.0);
    }

    void match(const Jet& o)
    {
        if (nvars_ != o.nvars_) throw Error("jet variable count mismatch");
        if (o.order_ < order_) *this = truncated(o.order_);
    }

    double* data() noexcept { return size_ > kInline ? heap_.data() : inline_.data(); }
    const double* data() const noexcept { return size_ > kInline ? heap_.data() : inline_.data(); }

    int nvars_ = 0;
    int order_ = 0;
    int size_ = 0;
    std::array<double, kInline> inline_{};
    std::vector<double> heap_;
};

// Elementary functions. Each fills the derivative list of the scalar function
// at the expansion point and composes.

inline Jet sin(const Jet& u)
{
    const double s = std::sin(u.value()), c = std::cos(u.value());
    const std::array<double, 5> d{s, c, -s, -c, s};
    return u.apply(d);
}

inline Jet cos(const Jet& u)
{
    const double s = std::sin(u.value()), c = std::cos(u.value());
    const std::array<double, 5> d{c, -s, -c, s, c};
    return u.apply(d);
}

inline Jet tan(const Jet& u)
{
    const double c = std::cos(u.value());
    if (c == 0.0) throw DomainError("tan at a pole");
    const double t = std::tan(u.value()), t2 = t * t;
    const std::array<double, 5> d{t, 1 + t2, 2 * t * (1 + t2), 2 + 8 * t2 + 6 * t2 * t2,
                                  16 * t + 40 * t * t2 + 24 * t * t2 * t2};
    return u.apply(d);
}

inline Jet atan(const Jet& u)
{
    const double x = u.value(), q = 1.0 / (1.0 + x * x);
    const std::array<double, 5> d{std::atan(x), q, -2 * x * q * q, (6 * x * x - 2) * q * q * q,
                                  24 * x * (1 - x * x) * q * q * q * q};
    return u.apply(d);
}

inline Jet exp(const Jet& u)
{
    const double e = std::exp(u.value());
    const std::array<double, 5> d{e, e, e, e, e};
    return u.apply(d);
}

inline Jet log(const Jet& u)
{
    const double x = u.value();
    if (!(x > 0.0)) throw DomainError("log of nonpositive value");
    const std::array<double, 5> d{std::log(x), 1 / x, -1 / (x * x), 2 / (x * x * x),
                                  -6 / (x * x * x * x)};
    return u.apply(d);
}

inline Jet sinh(const Jet& u)
{
    const double s = std::sinh(u.value()), c = std::cosh(u.value());
    const std::array<double, 5> d{s, c, s, c, s};
    return u.apply(d);
}

inline Jet cosh(const Jet& u)
{
    const double s = std::sinh(u.value()), c = std::cosh(u.value());
    const std::array<double, 5> d{c, s, c, s, c};
    return u.apply(d);
}

/// |u| with the sign frozen at the expansion point.
inline Jet abs(const Jet& u) { return u.value() < 0.0 ? -u : u; }

/// u^p for a real constant p.
inline Jet pow(const Jet& u, double p)
{
    const double x = u.value();
    const double rounded = std::nearbyint(p);
    if (p == rounded && p >= 0.0 && p <= 64.0) {
        // exact repeated squaring; valid at x = 0 and for negative x
        auto k = static_cast<unsigned>(rounded);
        Jet result = Jet::constant(u.nvars(), u.order(), 1.0);
        Jet base = u;
        while (k) {
            if (k & 1u) result = result * base;
            k >>= 1u;
            if (k) base = base * base;
        }
        return result;
    }
    if (p == rounded) {
        if (x == 0.0) throw DomainError("negative power of zero");
        return reciprocal(pow(u, -p));
    }
    if (!(x > 0.0)) throw DomainError("fractional power of nonpositive value");
    std::array<double, kMaxJetOrder + 1> d{};
    double coeff = 1.0;
    for (int k = 0; k <= u.order(); ++k) {
        d[k] = coeff * std::pow(x, p - k);
        coeff *= (p - k);
    }
    return u.apply(d);
}

inline Jet sqrt(const Jet& u)
{
    if (!(u.value() > 0.0)) throw DomainError("sqrt of nonpositive value");
    return pow(u, 0.5);
}

inline Jet pow(const Jet& base, const Jet& exponent)
{
    bool constant_exponent = true;
    for (int i = 1; i < exponent.size(); ++i)
        if (exponent[i] != 0.0) constant_exponent = false;
    if (constant_exponent) return pow(base, exponent.value());
    if (!(base.value() > 0.0)) throw DomainError("variable power of nonpositive base");
    return exp(exponent * log(base));
}

/// Multivariate composition outer(inner_1, ..., inner_m), where outer is a
/// jet in m variables expanded at (inner_1.value(), ..., inner_m.value()) and
/// each inner jet is in the common set of variables of the result.
inline Jet compose(const Jet& outer, std::span<const Jet> inner)
{
    const int m = outer.nvars();
    if (static_cast<int>(inner.size()) != m) throw Error("compose: arity mismatch");
    const int nv = inner.front().nvars();
    int order = outer.order();
    for (const Jet& j : inner) order = std::min(order, j.order());

    std::vector<Jet> delta;
    delta.reserve(m);
    for (const Jet& j : inner) {
        Jet d = j.truncated(order);
        d[0] = 0.0;
        delta.push_back(std::move(d));
    }
    const JetLayout& l = outer.layout();
    // monomials[i] = delta^multi(i), built by raising an earlier monomial.
    std::vector<Jet> monomials;
    monomials.reserve(l.size(order));
    monomials.push_back(Jet::constant(nv, order, 1.0));
    Jet out = Jet::constant(nv, order, outer[0]);
    for (int i = 1; i < l.size(order); ++i) {
        const MultiIndex& mi = l.multi(i);
        int var = 0;
        while (mi[var] == 0) ++var;
        MultiIndex lower = mi;
        --lower[var];
        monomials.push_back(monomials[l.index_of(lower)] * delta[var]);
        if (outer[i] != 0.0) out += outer[i] * monomials.back();
    }
    return out;
}

} // namespace projcalc
