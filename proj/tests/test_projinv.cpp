#include "support.hpp"

#include <gtest/gtest.h>

using namespace projcalc;
using namespace testing_support;

namespace {

Chart square(double r = 1.0) { return Chart({"x", "y"}, {{-r, r}, {-r, r}}); }

TensorField random_field(const Chart& c, Valence v, double weight, int degree = 2, bool symmetric = false)
{
    const int n = c.dim();
    const auto count = static_cast<std::size_t>(ipow(n, v.rank()));
    std::vector<std::string> src(count);
    for (auto& s : src) s = random_polynomial(c, degree, 0.7);
    if (symmetric && v.rank() == 2)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) src[static_cast<std::size_t>(i * n + j)] = src[static_cast<std::size_t>(j * n + i)];
    std::vector<ScalarField> comps;
    for (const auto& s : src) comps.push_back(ScalarField::parse(c, s));
    return TensorField::from_components(c, v, weight, std::move(comps));
}

double relative_diff(const PointTensor& a, const PointTensor& b)
{
    return max_abs_diff(a, b) / std::max(1.0, max_abs(a));
}

} // namespace

TEST(KCoefficients, MatchTheChristoffelCombination)
{
    const Chart c = square();
    const ConnectionField conn = random_polynomial_connection(c, 2, 0.8);
    for (const auto& p : sample_points(c, 5)) {
        const PointTensor g = conn.at(p);
        const auto k = k_coefficients(conn).at(p);
        EXPECT_NEAR(k[0], -g.at(1, 0, 0), 1e-15);
        EXPECT_NEAR(k[1], g.at(0, 0, 0) - 2 * g.at(1, 0, 1), 1e-15);
        EXPECT_NEAR(k[2], 2 * g.at(0, 0, 1) - g.at(1, 1, 1), 1e-15);
        EXPECT_NEAR(k[3], g.at(0, 1, 1), 1e-15);
    }
}

TEST(KCoefficients, FlatShiftedFlatAndSphereVanish)
{
    const Chart c = square();
    const std::vector<double> p{0.3, -0.4};
    for (double v : k_coefficients(ConnectionField::zero(c)).at(p)) EXPECT_EQ(v, 0.0);
    const ConnectionField shifted = projective_shift(ConnectionField::zero(c), OneForm::parse(c, {"1", "0"}));
    for (double v : k_coefficients(shifted).at(p)) EXPECT_EQ(v, 0.0);
    const MetricField sphere = sphere_gnomonic_model(2, 0.8);
    const ConnectionField lc = christoffel(sphere);
    for (const auto& q : sample_points(sphere.chart(), 10))
        for (double v : k_coefficients(lc).at(q)) EXPECT_NEAR(v, 0.0, 1e-15);
    // straight chart lines: Gamma(b, b) stays parallel to b along the line
    for (const auto& q : sample_points(sphere.chart(), 10)) {
        const std::vector<double> b{0.6, -0.8};
        const PointTensor g = lc.at(q);
        double acc[2] = {0, 0};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) acc[i] += g.at(i, j, k) * b[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(k)];
        EXPECT_NEAR(acc[0] * b[1] - acc[1] * b[0], 0.0, 1e-15);
    }
}

TEST(KCoefficients, KernelIsExactlyTheShifts)
{
    // linear map from constant symmetric Gamma (6 numbers) to (K0..K3)
    const Chart c = square();
    const std::vector<double> p{0, 0};
    const std::vector<std::array<int, 3>> slots{{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 0, 0}, {1, 0, 1}, {1, 1, 1}};
    Eigen::MatrixXd m(4, 6);
    for (int col = 0; col < 6; ++col) {
        std::vector<ScalarField> comps(8, ScalarField::constant(c, 0.0));
        const auto [i, j, k] = slots[static_cast<std::size_t>(col)];
        comps[static_cast<std::size_t>((i * 2 + j) * 2 + k)] = ScalarField::constant(c, 1.0);
        comps[static_cast<std::size_t>((i * 2 + k) * 2 + j)] = ScalarField::constant(c, 1.0);
        const auto kv = k_coefficients(ConnectionField::from_components(c, comps)).at(p);
        for (int r = 0; r < 4; ++r) m(r, col) = kv[static_cast<std::size_t>(r)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    EXPECT_EQ(svd.rank(), 4);
    // the two shift tensors span the kernel
    for (int a = 0; a < 2; ++a) {
        Eigen::VectorXd v(6);
        for (int col = 0; col < 6; ++col) {
            const auto [i, j, k] = slots[static_cast<std::size_t>(col)];
            v(col) = (i == j && k == a ? 1.0 : 0.0) + (i == k && j == a ? 1.0 : 0.0);
        }
        EXPECT_LE((m * v).norm(), 1e-15);
    }
}

TEST(KCoefficients, ShiftInvarianceOnGrid)
{
    const Chart c = square();
    for (int trial = 0; trial < 5; ++trial) {
        const ConnectionField conn = random_polynomial_connection(c, 3, 1.0);
        const ConnectionField shifted = projective_shift(conn, random_polynomial_form(c, 3, 1.0));
        const ProjectiveClass2D a = k_coefficients(conn), b = k_coefficients(shifted);
        for (const auto& p : grid_points(c, 5))
            for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.at(p)[static_cast<std::size_t>(i)], b.at(p)[static_cast<std::size_t>(i)], 1e-10);
    }
}

TEST(KCoefficients, RequireDimensionTwo)
{
    EXPECT_THROW(k_coefficients(ConnectionField::zero(Chart::box(3, {-1, 1}))).at(std::vector<double>{0, 0, 0}), GeometryError);
}

TEST(ProjectiveClass, RepresentativeReproducesCoefficients)
{
    const Chart c = square();
    const auto cls = ProjectiveClass2D::from_expressions(
        c, {ScalarField::parse(c, "x*y"), ScalarField::parse(c, "sin(x)"), ScalarField::parse(c, "1 + y^2"), ScalarField::parse(c, "-x")});
    const ProjectiveClass2D back = k_coefficients(cls.representative());
    for (const auto& p : sample_points(c, 5))
        for (int i = 0; i < 4; ++i) EXPECT_NEAR(back.at(p)[static_cast<std::size_t>(i)], cls.at(p)[static_cast<std::size_t>(i)], 1e-15);
}

TEST(Killing, OneFormResidual)
{
    const Chart c = Chart::box(3, {-1, 1});
    const ConnectionField conn = random_polynomial_connection(c, 2, 0.5);
    const std::vector<double> p{0.1, 0.2, -0.3};
    EXPECT_EQ(max_abs(projective_killing_residual_1form(constant_field(c, {0, 1}, -2.0, {0, 0, 0}), conn, p)), 0.0);
    EXPECT_EQ(max_abs(projective_killing_residual_1form(constant_field(c, {0, 1}, -2.0, {1, 2, 3}), ConnectionField::zero(c), p)), 0.0);
    EXPECT_THROW(projective_killing_residual_1form(constant_field(c, {0, 1}, 0.0, {1, 2, 3}), conn, p), GeometryError);
    EXPECT_THROW(projective_killing_residual_1form(constant_field(c, {1, 0}, -2.0, {1, 2, 3}), conn, p), GeometryError);
    for (int trial = 0; trial < 20; ++trial) {
        const TensorField k = random_field(c, {0, 1}, -2.0);
        const ConnectionField shifted = projective_shift(conn, random_polynomial_form(c, 2, 0.5));
        const auto q = random_point(3);
        const PointTensor a = projective_killing_residual_1form(k, conn, q);
        EXPECT_LE(relative_diff(a, projective_killing_residual_1form(k, shifted, q)), 1e-10);
        EXPECT_LE(std::abs(a.at(0, 1) - a.at(1, 0)), 1e-15);
    }
}

TEST(Killing, MetricTensorTimesVolumeIsProjectiveKilling)
{
    for (int n = 2; n <= 3; ++n) {
        const Chart c = Chart::box(n, {-1, 1});
        for (int trial = 0; trial < 3; ++trial) {
            const MetricField g = random_metric(c);
            const TensorField k = tensor_product(g.field(), volume_weight_field(g, -4.0 / (n + 1)));
            const ConnectionField lc = christoffel(g);
            for (const auto& p : sample_points(c, 4)) {
                EXPECT_LE(max_abs(projective_killing_residual_02(k, lc, p)), 1e-10);
                for (int s = 0; s < 5; ++s) {
                    const ConnectionField shifted = projective_shift(lc, random_polynomial_form(c, 2, 0.5));
                    EXPECT_LE(max_abs(projective_killing_residual_02(k, shifted, p)), 1e-10);
                }
            }
        }
    }
}

TEST(Killing, DiniSecondMetricUnderFirstConnection)
{
    const DiniData d = dini_pair(square(), "3+0.5*sin(x)", "1+0.5*cos(y)");
    const TensorField k = tensor_product(d.g_bar.field(), volume_weight_field(d.g_bar, -4.0 / 3.0));
    for (const auto& p : sample_points(d.g.chart(), 10)) EXPECT_LE(max_abs(projective_killing_residual_02(k, christoffel(d.g), p)), 1e-9);
}

TEST(Killing, TwoTensorResidualIsSymmetricAndInvariant)
{
    const Chart c = Chart::box(3, {-1, 1});
    const ConnectionField conn = random_polynomial_connection(c, 2, 0.5);
    EXPECT_THROW(projective_killing_residual_02(random_field(c, {0, 2}, -4.0), conn, std::vector<double>{0, 0, 0}), GeometryError);
    EXPECT_THROW(projective_killing_residual_02(random_field(c, {0, 2}, -2.0, 2, true), conn, std::vector<double>{0, 0, 0}), GeometryError);
    for (int trial = 0; trial < 20; ++trial) {
        const TensorField k = random_field(c, {0, 2}, -4.0, 2, true);
        const ConnectionField shifted = projective_shift(conn, random_polynomial_form(c, 2, 0.5));
        const auto p = random_point(3);
        const PointTensor a = projective_killing_residual_02(k, conn, p);
        EXPECT_LE(relative_diff(a, projective_killing_residual_02(k, shifted, p)), 1e-10);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l) {
                    EXPECT_NEAR(a.at(i, j, l), a.at(j, i, l), 1e-12);
                    EXPECT_NEAR(a.at(i, j, l), a.at(i, l, j), 1e-12);
                }
    }
}

TEST(TracefreeGradient, ExamplesTraceAndInvariance)
{
    const Chart c = Chart::box(3, {-1, 1});
    const ConnectionField conn = random_polynomial_connection(c, 2, 0.5);
    const std::vector<double> p{0.3, 0.1, -0.2};
    EXPECT_EQ(max_abs(tracefree_gradient_vector(constant_field(c, {1, 0}, 1.0, {0, 0, 0}), conn, p)), 0.0);
    EXPECT_THROW(tracefree_gradient_vector(constant_field(c, {1, 0}, 0.0, {0, 0, 0}), conn, p), GeometryError);
    // divergence-free linear field on a flat chart: the plain Jacobian
    const TensorField lin = TensorField::from_components(
        c, {1, 0}, 1.0, {ScalarField::parse(c, "x1 + 2*x2"), ScalarField::parse(c, "3*x3 - x2"), ScalarField::parse(c, "x1")});
    const PointTensor j = tracefree_gradient_vector(lin, ConnectionField::zero(c), p);
    const double jac[3][3] = {{1, 2, 0}, {0, -1, 3}, {1, 0, 0}};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) EXPECT_NEAR(j.at(a, b), jac[a][b], 1e-15);
    for (int trial = 0; trial < 20; ++trial) {
        const TensorField v = random_field(c, {1, 0}, 1.0);
        const ConnectionField shifted = projective_shift(conn, random_polynomial_form(c, 2, 0.5));
        const auto q = random_point(3);
        const PointTensor a = tracefree_gradient_vector(v, conn, q);
        EXPECT_NEAR(a.at(0, 0) + a.at(1, 1) + a.at(2, 2), 0.0, 1e-12);
        EXPECT_LE(relative_diff(a, tracefree_gradient_vector(v, shifted, q)), 1e-10);
    }
}

TEST(Metrisability, MetricSolutionsAndInvariance)
{
    for (int n = 2; n <= 3; ++n) {
        const Chart c = Chart::box(n, {-1, 1});
        const MetricField g = random_metric(c);
        const TensorField sigma = sigma_from_metric(g).sigma;
        const ConnectionField lc = christoffel(g);
        for (const auto& p : sample_points(c, 5)) {
            EXPECT_LE(max_abs(metrisability_residual(sigma, lc, p)), 1e-10);
            EXPECT_LE(max_abs(metrisability_residual(sigma, projective_shift(lc, random_polynomial_form(c, 2, 0.5)), p)), 1e-10);
        }
    }
}

TEST(Metrisability, TracesVanishAndShiftInvariance)
{
    const Chart c = Chart::box(3, {-1, 1});
    const ConnectionField conn = random_polynomial_connection(c, 2, 0.5);
    EXPECT_THROW(metrisability_residual(random_field(c, {2, 0}, 2.0), conn, std::vector<double>{0, 0, 0}), GeometryError);
    for (int trial = 0; trial < 20; ++trial) {
        const TensorField sigma = random_field(c, {2, 0}, 2.0, 2, true);
        const ConnectionField shifted = projective_shift(conn, random_polynomial_form(c, 2, 0.5));
        const auto p = random_point(3);
        const PointTensor e = metrisability_residual(sigma, conn, p);
        for (int i = 0; i < 3; ++i) {
            double t1 = 0, t2 = 0;
            for (int k = 0; k < 3; ++k) {
                t1 += e.at(i, k, k);
                t2 += e.at(k, i, k);
            }
            EXPECT_NEAR(t1, 0.0, 1e-12);
            EXPECT_NEAR(t2, 0.0, 1e-12);
        }
        EXPECT_LE(relative_diff(e, metrisability_residual(sigma, shifted, p)), 1e-10);
    }
}

TEST(Metrisability, TwoDimensionalSystemMatchesCoefficientForm)
{
    // the four printed equations in terms of K0..K3, evaluated directly
    const Chart c = square();
    for (int trial = 0; trial < 10; ++trial) {
        const ConnectionField conn = random_polynomial_connection(c, 2, 0.8);
        const TensorField sigma = random_field(c, {2, 0}, 2.0, 3, true);
        const auto p = random_point(2);
        const auto k = k_coefficients(conn).at(p);
        const JetTensor s = sigma.jets(p, 1);
        const double s11 = s.at(0, 0).value(), s12 = s.at(0, 1).value(), s22 = s.at(1, 1).value();
        const auto dx = [&](int i, int j) { return s.at(i, j).gradient(0); };
        const auto dy = [&](int i, int j) { return s.at(i, j).gradient(1); };
        const double printed[4] = {
            dx(1, 1) - 2.0 / 3 * k[1] * s22 - 2 * k[0] * s12,
            dy(1, 1) - 2 * dx(0, 1) - 4.0 / 3 * k[2] * s22 - 2.0 / 3 * k[1] * s12 + 2 * k[0] * s11,
            -2 * dy(0, 1) + dx(0, 0) - 2 * k[3] * s22 + 2.0 / 3 * k[2] * s12 + 4.0 / 3 * k[1] * s11,
            dy(0, 0) + 2 * k[3] * s12 + 2.0 / 3 * k[2] * s11};
        const auto sys = metrization_system_2d(metrisability_residual(sigma, conn, p));
        for (int i = 0; i < 4; ++i) EXPECT_NEAR(sys[static_cast<std::size_t>(i)], printed[i], 1e-12) << i;
    }
}

TEST(Weyl, VanishesInDimensionTwo)
{
    const Chart c = square();
    for (int trial = 0; trial < 5; ++trial) {
        const ConnectionField conn = random_polynomial_connection(c, 3, 1.0);
        for (const auto& p : sample_points(c, 5)) EXPECT_LE(max_abs(weyl_tensor(conn, p)), 1e-10);
    }
}

TEST(Weyl, ThreeSphereAndProductMetric)
{
    const MetricField sphere = sphere_gnomonic_model(3, 0.7);
    for (const auto& p : sample_points(sphere.chart(), 10)) EXPECT_LE(max_abs(weyl_tensor(christoffel(sphere), p)), 1e-9);
    const Chart c = Chart::box(3, {-1, 1});
    const MetricField prod = MetricField::parse(c, {"1", "0", "0", "0", "1", "0", "0", "0", "1 + x1^2"});
    EXPECT_GT(max_abs(weyl_tensor(christoffel(prod), std::vector<double>{0.3, 0.2, 0.1})), 1e-3);
}

TEST(Weyl, ShiftInvarianceForMetricAndGeneralConnections)
{
    const Chart c = Chart::box(3, {-1, 1});
    for (int trial = 0; trial < 10; ++trial) {
        const ConnectionField lc = christoffel(random_metric(c));
        const ConnectionField general = random_polynomial_connection(c, 2, 0.6);
        const OneForm phi = random_polynomial_form(c, 2, 0.6);
        const auto p = random_point(3);
        EXPECT_LE(relative_diff(weyl_tensor(lc, p), weyl_tensor(projective_shift(lc, phi), p)), 1e-9);
        EXPECT_LE(relative_diff(weyl_tensor(general, p), weyl_tensor(projective_shift(general, phi), p)), 1e-9);
    }
}

TEST(Liouville, SphereFlatAndNonConstantCurvature)
{
    const MetricField sphere = sphere_gnomonic_model(2, 0.8);
    for (const auto& p : sample_points(sphere.chart(), 10)) EXPECT_LE(max_abs(liouville_tensor(sphere, p).tensor), 1e-9);
    const Chart c = square();
    EXPECT_EQ(max_abs(liouville_tensor(MetricField::parse(c, {"1", "0", "0", "1"}), std::vector<double>{0.2, 0.1}).tensor), 0.0);
    const MetricField bumpy = MetricField::parse(c, {"1 + x^2", "0", "0", "1 + x^2"});
    const LiouvilleData l = liouville_tensor(bumpy, std::vector<double>{0.3, 0.2});
    // the conformal factor depends on x only, so the y-slot component drops out
    EXPECT_NEAR(l.tensor.at(0, 0, 1), 0.0, 1e-15);
    EXPECT_GT(max_abs(l.tensor), 0.5);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) EXPECT_NEAR(l.tensor.at(i, j, k), -l.tensor.at(i, k, j), 1e-15);
    EXPECT_THROW(liouville_tensor(sphere_gnomonic_model(3, 0.5), std::vector<double>{0, 0, 0}), GeometryError);
}

TEST(Liouville, TensorAndCoefficientFormsShareOneConstant)
{
    const Chart c = square();
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const MetricField g = random_metric(c, 0.3);
        const ProjectiveClass2D cls = k_coefficients(christoffel(g));
        for (const auto& p : sample_points(c, 5)) {
            const LiouvilleData l = liouville_tensor(g, p);
            const auto from_k = liouville_from_coefficients(cls, p);
            const double scale = std::max({1.0, std::abs(from_k[0]), std::abs(from_k[1])});
            worst = std::max({worst, std::abs(l.pair[0] - from_k[0]) / scale, std::abs(l.pair[1] - from_k[1]) / scale});
            EXPECT_EQ(l.pair[0], kLiouvilleKScale * l.tensor.at(0, 0, 1));
        }
    }
    EXPECT_LE(worst, 1e-8);
}

TEST(Liouville, CoefficientFormIsShiftInvariant)
{
    const Chart c = square();
    const MetricField g = random_metric(c, 0.3);
    const ConnectionField lc = christoffel(g);
    for (int trial = 0; trial < 5; ++trial) {
        const ConnectionField shifted = projective_shift(lc, random_polynomial_form(c, 2, 0.5));
        const auto p = random_point(2);
        const auto a = liouville_from_coefficients(k_coefficients(lc), p);
        const auto b = liouville_from_coefficients(k_coefficients(shifted), p);
        EXPECT_NEAR(a[0], b[0], 1e-10);
        EXPECT_NEAR(a[1], b[1], 1e-10);
    }
}

TEST(ConstantCurvature, FlatSphereAndDini)
{
    const Chart c = square();
    const auto pts = sample_points(c, 10);
    const CurvatureFit flat = constant_curvature_test(MetricField::parse(c, {"1", "0", "0", "1"}), pts, 1e-9);
    EXPECT_TRUE(flat.constant);
    EXPECT_EQ(flat.curvature, 0.0);
    for (int n = 2; n <= 3; ++n) {
        const MetricField s = sphere_gnomonic_model(n, 0.8);
        const CurvatureFit fit = constant_curvature_test(s, sample_points(s.chart(), 10), 1e-9);
        EXPECT_TRUE(fit.constant);
        EXPECT_NEAR(fit.curvature, 1.0, 1e-9);
    }
    const DiniData d = dini_pair(c, "3+0.5*sin(x)", "1");
    EXPECT_FALSE(constant_curvature_test(d.g, pts, 1e-9).constant);

    // finite-difference oracle for a conformal metric f delta: with this
    // library's sign convention the scalar curvature is Laplacian(log f) / f
    const auto logf = [](std::span<const double> q) { return std::log(2.0 + 0.5 * std::sin(q[0])); };
    for (const auto& p : {std::vector<double>{-0.6, 0.0}, std::vector<double>{0.7, 0.0}}) {
        const double lap = fd_partial(logf, p, {0, 0}, 1e-3) + fd_partial(logf, p, {1, 1}, 1e-3);
        EXPECT_NEAR(scalar_curvature(d.g, p), lap / std::exp(logf(p)), 1e-8);
    }
    EXPECT_GT(std::abs(scalar_curvature(d.g, std::vector<double>{-0.6, 0}) - scalar_curvature(d.g, std::vector<double>{0.7, 0})), 1e-2);
}
