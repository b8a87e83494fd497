#pragma once

// Solutions of the metrisability equation: conversions to and from metrics,
// the collocation solver for the degree of mobility, and the objects built
// from a pair of solutions (A-tensor, Sinjukov form, Killing tensor,
// adapted frame, pullback representation).

#include <projcalc/projinv.hpp>
#include <projcalc/sampling.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <optional>
#include <sstream>

namespace projcalc {

/// A symmetric (2,0) field of weight 2 together with the largest
/// metrisability residual seen on the points it was checked on.
struct MobilitySolution {
    TensorField sigma;
    double residual_norm = 0.0;
    bool degenerate = false; ///< det sigma vanishes (or nearly) somewhere on the check points
};

namespace detail {

inline std::vector<std::vector<double>> check_points(const Chart& chart)
{
    return sample_points(chart, 16, default_seed());
}

inline double max_metrisability_residual(const TensorField& sigma, const ConnectionField& conn,
                                         std::span<const std::vector<double>> pts)
{
    double m = 0.0;
    for (const auto& p : pts) m = std::max(m, max_abs(metrisability_residual(sigma, conn, p)));
    return m;
}

} // namespace detail

/// sigma^ij = g^ij |det g|^(1/(n+1)).
inline MobilitySolution sigma_from_metric(const MetricField& g)
{
    const int n = g.dim();
    MobilitySolution s;
    s.sigma = tensor_product(inverse_metric_field(g), volume_weight_field(g, 2.0 / (n + 1)));
    s.residual_norm = detail::max_metrisability_residual(s.sigma, christoffel(g), detail::check_points(g.chart()));
    return s;
}

/// g^ij = |det sigma| sigma^ij. Throws if det sigma vanishes at one of the
/// chart's check points.
inline MetricField metric_from_sigma(const MobilitySolution& sol)
{
    const TensorField& sigma = sol.sigma;
    if (!(sigma.valence() == Valence{2, 0}) || sigma.weight() != 2.0)
        throw GeometryError("metric_from_sigma: expected a symmetric (2,0) field of weight 2");
    const int n = sigma.dim();
    const Chart& chart = sigma.chart();
    auto pts = detail::check_points(chart);
    pts.push_back(chart.center());
    for (const auto& p : pts) {
        const Eigen::MatrixXd m = to_matrix(sigma.at(p));
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if (std::abs(m.determinant()) <= 1e-12 * std::pow(scale, n))
            throw GeometryError("degenerate solution: det sigma = 0 at " + format_point(p));
    }
    TensorField gf(chart, {0, 2}, 0.0, [sigma, n](std::span<const double> p, int order) {
        const JetMatrix s = jet_matrix(sigma.jets(p, order));
        const Jet det = jet_determinant(s, n);
        JetMatrix inv;
        try {
            inv = jet_inverse(s, n);
        } catch (const GeometryError&) {
            throw GeometryError("degenerate solution: det sigma = 0 at " + format_point(p));
        }
        const Jet f = reciprocal(abs(det));
        JetTensor out({0, 2}, n);
        for (std::size_t i = 0; i < inv.size(); ++i) out[i] = inv[i] * f;
        return out;
    });
    const Eigen::MatrixXd g0 = to_matrix(gf.at(chart.center()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (g0 + g0.transpose()));
    int neg = 0;
    for (int i = 0; i < n; ++i)
        if (es.eigenvalues()(i) < 0) ++neg;
    return MetricField(gf, Signature{neg});
}

// ---------------------------------------------------------------------------
// Collocation solver
// ---------------------------------------------------------------------------

struct MobilityOptions {
    int degree = 4;            ///< total degree of the polynomial ansatz
    int grid = 15;             ///< collocation nodes per axis
    double sv_threshold = 1e-8;
};

struct MobilityResult {
    std::vector<MobilitySolution> basis;
    std::vector<double> singular_values; ///< descending
    int dimension = 0;
    std::optional<std::string> warning;
    Eigen::MatrixXd coefficients;        ///< one column per basis element
    int equations = 0;
    int unknowns = 0;
};

/// Monomials s^e of total degree <= d in n variables, graded.
inline std::vector<std::vector<int>> monomial_exponents(int n, int d)
{
    std::vector<std::vector<int>> out;
    std::vector<int> e(static_cast<std::size_t>(n), 0);
    for (int deg = 0; deg <= d; ++deg) {
        // enumerate compositions of deg into n parts
        std::function<void(int, int)> rec = [&](int var, int left) {
            if (var == n - 1) {
                e[static_cast<std::size_t>(var)] = left;
                out.push_back(e);
                return;
            }
            for (int k = left; k >= 0; --k) {
                e[static_cast<std::size_t>(var)] = k;
                rec(var + 1, left - k);
            }
        };
        rec(0, deg);
    }
    return out;
}

/// Polynomial ansatz for symmetric (2,0) fields in coordinates scaled to
/// [-1,1] over the chart.
class PolynomialAnsatz {
public:
    PolynomialAnsatz(const Chart& chart, int degree)
        : chart_(chart), exps_(monomial_exponents(chart.dim(), degree))
    {
        for (const auto& iv : chart.domain()) {
            center_.push_back(0.5 * (iv.lo + iv.hi));
            half_.push_back(0.5 * (iv.hi - iv.lo));
        }
        const int n = chart.dim();
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) pairs_.emplace_back(i, j);
    }

    int monomials() const { return static_cast<int>(exps_.size()); }
    int unknowns() const { return monomials() * static_cast<int>(pairs_.size()); }
    const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

    std::vector<Jet> monomial_jets(std::span<const double> p, int order) const
    {
        const int n = chart_.dim();
        const auto x = coordinate_jets(p, order);
        std::vector<std::vector<Jet>> powers(static_cast<std::size_t>(n));
        int maxdeg = 0;
        for (const auto& e : exps_) maxdeg = std::max(maxdeg, *std::max_element(e.begin(), e.end()));
        for (int i = 0; i < n; ++i) {
            const Jet s = (x[static_cast<std::size_t>(i)] - center_[static_cast<std::size_t>(i)]) / half_[static_cast<std::size_t>(i)];
            auto& pw = powers[static_cast<std::size_t>(i)];
            pw.push_back(Jet::constant(n, order, 1.0));
            for (int k = 1; k <= maxdeg; ++k) pw.push_back(pw.back() * s);
        }
        std::vector<Jet> out;
        out.reserve(exps_.size());
        for (const auto& e : exps_) {
            Jet m = powers[0][static_cast<std::size_t>(e[0])];
            for (int i = 1; i < n; ++i) m = m * powers[static_cast<std::size_t>(i)][static_cast<std::size_t>(e[static_cast<std::size_t>(i)])];
            out.push_back(std::move(m));
        }
        return out;
    }

    /// Field with coefficient vector c; unknown u = pair * monomials + monomial.
    TensorField field(const Eigen::VectorXd& c) const
    {
        const int n = chart_.dim();
        auto self = std::make_shared<const PolynomialAnsatz>(*this);
        std::vector<double> coeff(c.data(), c.data() + c.size());
        return TensorField(chart_, {2, 0}, 2.0, [self, coeff, n](std::span<const double> p, int order) {
            const auto mono = self->monomial_jets(p, order);
            JetTensor out({2, 0}, n, Jet::constant(n, order, 0.0));
            const int nm = self->monomials();
            for (std::size_t pr = 0; pr < self->pairs_.size(); ++pr) {
                Jet acc = Jet::constant(n, order, 0.0);
                for (int m = 0; m < nm; ++m) {
                    const double cf = coeff[pr * static_cast<std::size_t>(nm) + static_cast<std::size_t>(m)];
                    if (cf != 0.0) acc += cf * mono[static_cast<std::size_t>(m)];
                }
                const auto [i, j] = self->pairs_[pr];
                out.at(i, j) = acc;
                out.at(j, i) = acc;
            }
            return out;
        });
    }

private:
    Chart chart_;
    std::vector<std::vector<int>> exps_;
    std::vector<double> center_, half_;
    std::vector<std::pair<int, int>> pairs_;
};

/// Numerical nullspace of the metrisability operator of `conn` on
/// polynomial (2,0) fields, collocated on a grid over the chart.
inline MobilityResult solve_mobility(const ConnectionField& conn, const MobilityOptions& opt)
{
    if (opt.degree < 1) throw InputError("ansatz degree must be at least 1");
    if (opt.grid < 2) throw InputError("collocation grid needs at least 2 nodes per axis");
    if (!(opt.sv_threshold > 0)) throw InputError("singular value threshold must be positive");
    const Chart& chart = conn.chart();
    const int n = chart.dim();
    const PolynomialAnsatz ansatz(chart, opt.degree);
    const auto pts = grid_points(chart, opt.grid);
    const int rows_per_point = n * (n + 1) / 2 * n;
    const int rows = static_cast<int>(pts.size()) * rows_per_point;
    const int cols = ansatz.unknowns();
    if (rows < cols)
        throw InputError("collocation grid too small: " + std::to_string(rows) + " equations for " +
                         std::to_string(cols) + " unknowns");

    Eigen::MatrixXd a(rows, cols);
    const int nm = ansatz.monomials();
    const auto& pairs = ansatz.pairs();
    std::vector<double> dsigma(static_cast<std::size_t>(n * n * n));
    for (std::size_t pi = 0; pi < pts.size(); ++pi) {
        const auto& p = pts[pi];
        const PointTensor gamma = conn.at(p);
        const auto mono = ansatz.monomial_jets(p, 1);
        for (std::size_t pr = 0; pr < pairs.size(); ++pr) {
            const auto [i0, j0] = pairs[pr];
            for (int m = 0; m < nm; ++m) {
                const Jet& mj = mono[static_cast<std::size_t>(m)];
                PointTensor s({2, 0}, n);
                s.at(i0, j0) = mj.value();
                s.at(j0, i0) = mj.value();
                std::fill(dsigma.begin(), dsigma.end(), 0.0);
                for (int k = 0; k < n; ++k) {
                    dsigma[static_cast<std::size_t>((i0 * n + j0) * n + k)] = mj.gradient(k);
                    dsigma[static_cast<std::size_t>((j0 * n + i0) * n + k)] = mj.gradient(k);
                }
                const PointTensor e = metrisability_from_values(gamma, s, dsigma);
                const int col = static_cast<int>(pr) * nm + m;
                int r = static_cast<int>(pi) * rows_per_point;
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        for (int k = 0; k < n; ++k) a(r++, col) = e.at(i, j, k);
            }
        }
    }
    for (int r = 0; r < rows; ++r) {
        const double norm = a.row(r).norm();
        if (norm > 0) a.row(r) /= norm;
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    MobilityResult res;
    res.equations = rows;
    res.unknowns = cols;
    res.singular_values.assign(sv.data(), sv.data() + sv.size());
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) < opt.sv_threshold) ++res.dimension;
    bool ambiguous = false;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) >= opt.sv_threshold / 10 && sv(i) <= opt.sv_threshold * 10) ambiguous = true;
    if (ambiguous) {
        std::ostringstream os;
        os.precision(3);
        os << "singular value within a factor 10 of the threshold " << opt.sv_threshold << "; spectrum:";
        for (double v : res.singular_values) os << ' ' << v;
        res.warning = os.str();
    }
    res.coefficients = svd.matrixV().rightCols(res.dimension);
    const ConnectionField conn_copy = conn;
    for (int c = 0; c < res.dimension; ++c) {
        MobilitySolution sol;
        sol.sigma = ansatz.field(res.coefficients.col(c));
        double resid = 0.0;
        bool degenerate = false;
        for (const auto& p : pts) {
            resid = std::max(resid, max_abs(metrisability_residual(sol.sigma, conn_copy, p)));
            const Eigen::MatrixXd m = to_matrix(sol.sigma.at(p));
            if (std::abs(m.determinant()) <= 1e-10 * std::pow(std::max(1e-300, m.cwiseAbs().maxCoeff()), n))
                degenerate = true;
        }
        sol.residual_norm = resid;
        sol.degenerate = degenerate;
        res.basis.push_back(std::move(sol));
    }
    return res;
}

inline MobilityResult solve_mobility(const ProjectiveClass2D& cls, const MobilityOptions& opt)
{
    return solve_mobility(cls.representative(), opt);
}

/// Relative least-squares distance of `target` from span(basis), sampled at
/// the given points over all components.
inline double distance_to_span(const TensorField& target, std::span<const MobilitySolution> basis,
                               std::span<const std::vector<double>> pts)
{
    std::vector<double> rhs;
    std::vector<std::vector<double>> cols(basis.size());
    for (const auto& p : pts) {
        const PointTensor t = target.at(p);
        rhs.insert(rhs.end(), t.data().begin(), t.data().end());
        for (std::size_t b = 0; b < basis.size(); ++b) {
            const PointTensor s = basis[b].sigma.at(p);
            cols[b].insert(cols[b].end(), s.data().begin(), s.data().end());
        }
    }
    const Eigen::Map<const Eigen::VectorXd> y(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    if (basis.empty()) return 1.0;
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rhs.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t b = 0; b < basis.size(); ++b)
        m.col(static_cast<Eigen::Index>(b)) = Eigen::Map<const Eigen::VectorXd>(cols[b].data(), static_cast<Eigen::Index>(cols[b].size()));
    const Eigen::VectorXd c = m.colPivHouseholderQr().solve(y);
    return (m * c - y).norm() / std::max(1e-300, y.norm());
}

// ---------------------------------------------------------------------------
// Objects built from pairs of solutions
// ---------------------------------------------------------------------------

/// (1,1) tensor A^i_j with pointwise eigen report.
struct ATensor {
    TensorField field;

    Eigen::MatrixXd matrix(std::span<const double> p) const { return to_matrix(field.at(p)); }
};

/// A = sigma-bar sigma^-1, i.e. A^i_j = sigma-bar^ik (sigma^-1)_kj.
inline ATensor a_tensor(const MobilitySolution& sigma, const MobilitySolution& sigma_bar)
{
    require_same_chart(sigma.sigma.chart(), sigma_bar.sigma.chart(), "a_tensor");
    const TensorField s = sigma.sigma, sb = sigma_bar.sigma;
    const int n = s.dim();
    return {TensorField(s.chart(), {1, 1}, 0.0, [s, sb, n](std::span<const double> p, int order) {
        JetMatrix inv;
        try {
            inv = jet_inverse(jet_matrix(s.jets(p, order)), n);
        } catch (const GeometryError&) {
            throw GeometryError("a_tensor: singular sigma at " + format_point(p));
        }
        const JetTensor b = sb.jets(p, order);
        JetTensor out({1, 1}, n, Jet::constant(n, order, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) out.at(i, j) += b.at(i, k) * inv[static_cast<std::size_t>(k * n + j)];
        return out;
    })};
}

/// A^i_j = |det g-bar / det g|^(1/(n+1)) g-bar^ik g_kj.
inline ATensor a_tensor_from_metrics(const MetricField& g, const MetricField& g_bar)
{
    require_same_chart(g.chart(), g_bar.chart(), "a_tensor");
    const int n = g.dim();
    return {TensorField(g.chart(), {1, 1}, 0.0, [g, g_bar, n](std::span<const double> p, int order) {
        const JetTensor gj = g.jets(p, order);
        const JetMatrix gb = jet_matrix(g_bar.jets(p, order));
        const Jet ratio = jet_determinant(gb, n) / jet_determinant(jet_matrix(gj), n);
        const Jet f = pow(abs(ratio), 1.0 / (n + 1));
        const JetMatrix inv = jet_inverse(gb, n);
        JetTensor out({1, 1}, n, Jet::constant(n, order, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                for (int k = 0; k < n; ++k) out.at(i, j) += inv[static_cast<std::size_t>(i * n + k)] * gj.at(k, j);
                out.at(i, j) = out.at(i, j) * f;
            }
        return out;
    })};
}

/// max |g_is A^s_j - g_js A^s_i|.
inline double self_adjointness_defect(const Eigen::MatrixXd& g, const Eigen::MatrixXd& a)
{
    const Eigen::MatrixXd ga = g * a;
    return (ga - ga.transpose()).cwiseAbs().maxCoeff();
}

struct EigenPattern {
    double lambda = 0.0;
    int m = 0;     ///< multiplicity of 0
    int m_bar = 0; ///< multiplicity of 1
};

struct EigenStructure {
    std::vector<double> eigenvalues;                 ///< ascending
    std::vector<std::pair<double, int>> multiplicities; ///< (value, multiplicity), ascending
    std::optional<EigenPattern> pattern;
};

/// Eigenvalues of a g-self-adjoint A at a point; clusters closer than
/// `tol` (relative to max(1, |A|)) are one eigenvalue.
inline EigenStructure eigen_structure(const Eigen::MatrixXd& a, double tol = 1e-8)
{
    Eigen::EigenSolver<Eigen::MatrixXd> es(a);
    EigenStructure out;
    for (int i = 0; i < a.rows(); ++i) out.eigenvalues.push_back(es.eigenvalues()(i).real());
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    for (double v : out.eigenvalues) {
        if (!out.multiplicities.empty() && std::abs(v - out.multiplicities.back().first) <= tol * scale)
            ++out.multiplicities.back().second;
        else
            out.multiplicities.emplace_back(v, 1);
    }
    int zeros = 0, ones = 0, others = 0;
    double lambda = 0.0;
    bool simple = true;
    for (const auto& [v, mult] : out.multiplicities) {
        if (std::abs(v) <= tol * scale) zeros += mult;
        else if (std::abs(v - 1.0) <= tol * scale) ones += mult;
        else {
            ++others;
            lambda = v;
            simple = simple && mult == 1;
        }
    }
    if (others == 1 && simple && zeros + ones > 0) out.pattern = EigenPattern{lambda, zeros, ones};
    return out;
}

struct AdaptedFrame {
    Eigen::MatrixXd frame;           ///< columns are the frame vectors (coordinate components)
    std::vector<double> eigenvalues; ///< A on each frame vector
    std::optional<EigenPattern> pattern;
};

/// g-orthonormal frame of eigenvectors of A. Each eigenspace is spanned by
/// the g-orthogonal projections of the coordinate vectors taken in order,
/// g-Gram-Schmidt orthonormalised.
inline AdaptedFrame adapted_frame(const MetricField& g, const ATensor& a, std::span<const double> p, double tol = 1e-8)
{
    const Eigen::MatrixXd gm = g.matrix(p);
    const Eigen::MatrixXd am = a.matrix(p);
    const int n = static_cast<int>(gm.rows());
    const double scale = std::max(1.0, am.cwiseAbs().maxCoeff()) * std::max(1.0, gm.cwiseAbs().maxCoeff());
    if (self_adjointness_defect(gm, am) > 1e-10 * scale)
        throw GeometryError("A is not self-adjoint with respect to g at " + format_point(p));
    Eigen::LLT<Eigen::MatrixXd> llt(gm);
    if (llt.info() != Eigen::Success)
        throw GeometryError("adapted frame needs a positive definite metric at " + format_point(p));

    const Eigen::MatrixXd ga = 0.5 * (gm * am + (gm * am).transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(ga, gm);
    const Eigen::VectorXd ev = es.eigenvalues();
    const Eigen::MatrixXd vecs = es.eigenvectors(); // g-orthonormal, ascending eigenvalues

    // clusters of equal eigenvalues
    const EigenStructure st = eigen_structure(am, tol);
    struct Block {
        double value;
        std::vector<int> columns;
    };
    std::vector<Block> blocks;
    const double vscale = std::max(1.0, am.cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        if (!blocks.empty() && std::abs(ev(i) - blocks.back().value) <= tol * vscale)
            blocks.back().columns.push_back(i);
        else
            blocks.push_back({ev(i), {i}});
    }
    if (st.pattern) {
        auto rank = [&](const Block& b) {
            if (std::abs(b.value) <= tol * vscale) return 1;
            if (std::abs(b.value - 1.0) <= tol * vscale) return 2;
            return 0;
        };
        std::stable_sort(blocks.begin(), blocks.end(), [&](const Block& x, const Block& y) { return rank(x) < rank(y); });
    }

    AdaptedFrame out;
    out.pattern = st.pattern;
    out.frame.resize(n, n);
    int col = 0;
    for (const auto& b : blocks) {
        Eigen::MatrixXd v(n, static_cast<Eigen::Index>(b.columns.size()));
        for (std::size_t c = 0; c < b.columns.size(); ++c) v.col(static_cast<Eigen::Index>(c)) = vecs.col(b.columns[c]);
        const Eigen::MatrixXd proj = v * v.transpose() * gm; // g-orthogonal projector onto the eigenspace
        int found = 0;
        for (int e = 0; e < n && found < static_cast<int>(b.columns.size()); ++e) {
            Eigen::VectorXd w = proj.col(e);
            for (int k = col - found; k < col; ++k) w -= (out.frame.col(k).transpose() * gm * w)(0) * out.frame.col(k);
            const double len = std::sqrt(std::max(0.0, (w.transpose() * gm * w)(0)));
            if (len <= 1e-8) continue;
            out.frame.col(col++) = w / len;
            out.eigenvalues.push_back(b.value);
            ++found;
        }
        if (found != static_cast<int>(b.columns.size()))
            throw GeometryError("adapted frame: could not span an eigenspace at " + format_point(p));
    }
    return out;
}

/// a^ij = sigma^ij |det g|^(-1/(n+1)) and lambda^i = 1/2 g^is d_s(a^pq g_pq).
struct SinjukovForm {
    TensorField a;
    TensorField lambda;
    double residual = 0.0; ///< max |a^ij_,k - lambda^i delta^j_k - lambda^j delta^i_k| on the check points
};

inline PointTensor sinjukov_residual(const SinjukovForm& s, const MetricField& g, std::span<const double> p)
{
    const PointTensor da = weighted_covariant_derivative(s.a, christoffel(g), p);
    const PointTensor lam = s.lambda.at(p);
    const int n = g.dim();
    PointTensor r = da;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            r.at(i, j, j) -= lam[static_cast<std::size_t>(i)];
            r.at(i, j, i) -= lam[static_cast<std::size_t>(j)];
        }
    return r;
}

inline SinjukovForm sinjukov_form(const MobilitySolution& sigma, const MetricField& g)
{
    require_same_chart(sigma.sigma.chart(), g.chart(), "sinjukov_form");
    const int n = g.dim();
    SinjukovForm out;
    out.a = tensor_product(sigma.sigma, volume_weight_field(g, -2.0 / (n + 1)));
    const TensorField a = out.a;
    out.lambda = TensorField(g.chart(), {1, 0}, 0.0, [a, g, n](std::span<const double> p, int order) {
        const JetTensor aj = a.jets(p, order + 1);
        const JetTensor gj = g.jets(p, order + 1);
        Jet trace = Jet::constant(n, order + 1, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) trace += aj.at(i, j) * gj.at(i, j);
        const JetMatrix inv = jet_inverse(jet_matrix(detail::truncated(gj, order)), n);
        JetTensor out({1, 0}, n, Jet::constant(n, order, 0.0));
        for (int i = 0; i < n; ++i)
            for (int s = 0; s < n; ++s) out[static_cast<std::size_t>(i)] += 0.5 * inv[static_cast<std::size_t>(i * n + s)] * trace.derivative(s);
        return out;
    });
    for (const auto& p : detail::check_points(g.chart()))
        out.residual = std::max(out.residual, max_abs(sinjukov_residual(out, g, p)));
    return out;
}

/// K-hat = |det g / det g-bar|^(2/(n+1)) g-bar, assembled as
/// (g-bar (x) Vol_gbar^(-4/(n+1))) (x) Vol_g^(4/(n+1)).
struct KillingFromPair {
    TensorField k_hat;
    double residual = 0.0; ///< max symmetrised nabla^g derivative on the check points
};

inline KillingFromPair killing_tensor_from_pair(const MetricField& g, const MetricField& g_bar)
{
    require_same_chart(g.chart(), g_bar.chart(), "killing_tensor_from_pair");
    const int n = g.dim();
    const TensorField k = tensor_product(g_bar.field(), volume_weight_field(g_bar, -4.0 / (n + 1)));
    KillingFromPair out;
    out.k_hat = tensor_product(k, volume_weight_field(g, 4.0 / (n + 1)));
    const ConnectionField lc = christoffel(g);
    for (const auto& p : detail::check_points(g.chart()))
        out.residual = std::max(out.residual, max_abs(symmetrized_derivative_02(out.k_hat, lc, p)));
    return out;
}

/// Rows express pullbacks in the basis: map^* sigma_a = sum_b T_ab sigma_b.
/// With this convention T over (phi o psi) equals T_phi T_psi.
struct TransformationMatrix {
    Eigen::MatrixXd t;
    double fit_residual = 0.0; ///< relative
};

inline TransformationMatrix transformation_matrix(const ChartMap& map, std::span<const MobilitySolution> basis,
                                                  double tol = 1e-8, int probes = 40)
{
    if (basis.empty()) throw GeometryError("transformation_matrix: empty basis");
    const Chart& chart = basis.front().sigma.chart();
    require_same_chart(map.source(), chart, "transformation_matrix");
    require_same_chart(map.target(), chart, "transformation_matrix");
    auto pts = sample_points(chart, probes, default_seed());
    const auto k = static_cast<Eigen::Index>(basis.size());

    auto sample = [&](const TensorField& f) {
        std::vector<double> v;
        for (const auto& p : pts) {
            const PointTensor t = f.at(p);
            v.insert(v.end(), t.data().begin(), t.data().end());
        }
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    const Eigen::Index rows = static_cast<Eigen::Index>(pts.size()) * static_cast<Eigen::Index>(basis.front().sigma.at(pts[0]).size());
    Eigen::MatrixXd s(rows, k), y(rows, k);
    for (Eigen::Index b = 0; b < k; ++b) {
        s.col(b) = sample(basis[static_cast<std::size_t>(b)].sigma);
        y.col(b) = sample(pullback_weighted(basis[static_cast<std::size_t>(b)].sigma, map));
    }
    const auto qr = s.colPivHouseholderQr();
    if (qr.rank() < k) throw GeometryError("transformation_matrix: basis is linearly dependent");
    const Eigen::MatrixXd c = qr.solve(y); // y = s c, so T = c^T
    TransformationMatrix out;
    out.t = c.transpose();
    out.fit_residual = (s * c - y).norm() / std::max(1e-300, y.norm());
    if (out.fit_residual > tol) {
        std::ostringstream os;
        os << "map is not projective for this class (fit residual " << out.fit_residual << ")";
        throw GeometryError(os.str());
    }
    return out;
}

} // namespace projcalc
