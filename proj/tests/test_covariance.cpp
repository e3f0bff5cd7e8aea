#include "doctest.h"

#include <cstring>
#include <random>

#include <Eigen/Eigenvalues>

#include "exsur/covariance.hpp"

using namespace exsur;

namespace {

Point vec(std::initializer_list<double> v) {
    Point p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) p[i++] = x;
    return p;
}

std::size_t binomial(std::size_t n, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Smallest eigenvalue of Zᵀ K Z, Z an orthonormal basis of ker P.
double projected_min_eig(const GeneralizedCovariance& k, const MonomialBasis& b, const PointSet& pts) {
    const Eigen::MatrixXd p = b.eval_matrix(pts);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(p);
    Eigen::MatrixXd z = lu.kernel();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
    z = qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), z.cols());
    const Eigen::MatrixXd m = z.transpose() * k.gram(pts) * z;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("power-linear values") {
    const auto k = GeneralizedCovariance::power_linear();
    CHECK(eval_gencov(k, vec({0.0})) == 0.0);
    CHECK(eval_gencov(k, vec({3.0, 4.0})) == doctest::Approx(-5.0).epsilon(1e-15));
    CHECK(k.cpd_order() == 0);
}

TEST_CASE("matern values") {
    const auto k32 = GeneralizedCovariance::matern(1.0, 1.0, 1.5);
    CHECK(eval_gencov(k32, vec({0.0})) == doctest::Approx(1.0).epsilon(1e-15));
    // (1 + √3 r) exp(−√3 r) at r = 0.7, by hand
    const double r = 0.7;
    const double s3 = std::sqrt(3.0) * r;
    CHECK(k32.radial(r) == doctest::Approx((1 + s3) * std::exp(-s3)).epsilon(1e-14));

    const auto k52 = GeneralizedCovariance::matern(2.0, 0.5, 2.5);
    const double t = std::sqrt(5.0) * 0.3 / 0.5;
    CHECK(k52.radial(0.3) == doctest::Approx(2.0 * (1 + t + t * t / 3) * std::exp(-t)).epsilon(1e-14));

    const auto k12 = GeneralizedCovariance::matern(1.0, 2.0, 0.5);
    CHECK(k12.radial(1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("spectral exponent and orders") {
    CHECK(*GeneralizedCovariance::matern(1, 1, 2.5).spectral_nu(1) == doctest::Approx(3.0));
    CHECK(*GeneralizedCovariance::matern(1, 1, 1.5).spectral_nu(2) == doctest::Approx(2.5));
    CHECK_FALSE(GeneralizedCovariance::power_linear().spectral_nu(1).has_value());
    CHECK(GeneralizedCovariance::cubic().cpd_order() == 1);
    CHECK(GeneralizedCovariance::polynomial({1.0}).cpd_order() == 0);
    CHECK(GeneralizedCovariance::polynomial({1.0, 0.5}).cpd_order() == 1);
    CHECK(GeneralizedCovariance::polynomial({0.0, 2.0, 0.0}).cpd_order() == 1);
}

TEST_CASE("invalid parameters are rejected at construction") {
    CHECK_THROWS_AS(GeneralizedCovariance::matern(0.0, 1.0, 1.5), InvalidArgument);
    CHECK_THROWS_AS(GeneralizedCovariance::matern(1.0, -1.0, 1.5), InvalidArgument);
    CHECK_THROWS_AS(GeneralizedCovariance::matern(1.0, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(GeneralizedCovariance::power_linear(-1.0), InvalidArgument);
    CHECK_THROWS_AS(GeneralizedCovariance::polynomial({}), InvalidArgument);
    CHECK_THROWS_AS(GeneralizedCovariance::polynomial({-1.0}), InvalidArgument);
}

TEST_CASE("family names round trip") {
    for (Family f : {Family::Matern, Family::PowerLinear, Family::Cubic, Family::PolynomialGC})
        CHECK(parse_family(family_name(f)) == f);
    CHECK_THROWS_AS(parse_family("gaussian"), InvalidArgument);
}

TEST_CASE("monomial basis") {
    CHECK(eval_basis(MonomialBasis(1, 1), vec({2.0})) == vec({1.0, 2.0}));
    CHECK(eval_basis(MonomialBasis(2, 1), vec({3.0, 5.0})) == vec({1.0, 3.0, 5.0}));
    CHECK(eval_basis(MonomialBasis(2, 2), vec({1.0, 1.0})) == Eigen::VectorXd::Ones(6));
    // graded lexicographic: 1, x, y, x², xy, y²
    CHECK(eval_basis(MonomialBasis(2, 2), vec({2.0, 3.0})) == vec({1, 2, 3, 4, 6, 9}));
}

TEST_CASE("basis size is binomial(l + d, d)") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2, 2);
    for (std::size_t d = 1; d <= 5; ++d)
        for (std::size_t l = 0; l <= 4; ++l) {
            const MonomialBasis b(d, l);
            Point x(static_cast<Eigen::Index>(d));
            for (auto& c : x) c = u(rng);
            const auto v = b.eval(x);
            CHECK(static_cast<std::size_t>(v.size()) == binomial(l + d, d));
            CHECK(b.size() == binomial(l + d, d));
            CHECK(v[0] == 1.0);
            const auto again = b.eval(x);
            CHECK(std::memcmp(v.data(), again.data(), sizeof(double) * v.size()) == 0);
        }
}

TEST_CASE("symmetry k(h) = k(-h)") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0, 2);
    const std::vector<GeneralizedCovariance> models{
        GeneralizedCovariance::matern(1.3, 0.7, 0.5), GeneralizedCovariance::matern(1, 1, 1.5),
        GeneralizedCovariance::matern(2, 0.3, 2.5), GeneralizedCovariance::power_linear(),
        GeneralizedCovariance::cubic(0.5), GeneralizedCovariance::polynomial({1.0, 0.2})};
    for (const auto& k : models)
        for (int i = 0; i < 1000; ++i) {
            Point h(3);
            for (auto& c : h) c = g(rng);
            CHECK(std::abs(k(h) - k(Point(-h))) <= 1e-12 * k.scale());
        }
}

TEST_CASE("check_cpd passes for every family at its order") {
    struct Case {
        GeneralizedCovariance k;
        std::size_t d;
    };
    const std::vector<Case> cases{{GeneralizedCovariance::matern(1, 1, 1.5), 1},
                                  {GeneralizedCovariance::matern(1, 0.4, 2.5), 2},
                                  {GeneralizedCovariance::matern(1, 1, 0.5), 2},
                                  {GeneralizedCovariance::power_linear(), 1},
                                  {GeneralizedCovariance::power_linear(), 2},
                                  {GeneralizedCovariance::cubic(), 1},
                                  {GeneralizedCovariance::cubic(), 2},
                                  {GeneralizedCovariance::polynomial({1.0, 0.3}), 2}};
    for (const auto& c : cases) {
        const auto rep = check_cpd(c.k, MonomialBasis(c.d, c.k.cpd_order()), 100, 8, 42);
        CHECK(rep.passed);
        CHECK(rep.trials == 100);
        CHECK(rep.min_quadratic_form >= -rep.tolerance);
    }
}

TEST_CASE("projected Gram matrices are positive semidefinite") {
    // Eigenvalue oracle, independent of check_cpd's random coefficients.
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        PointSet pts;
        for (int i = 0; i < 10; ++i) pts.push_back(vec({u(rng)}));
        CHECK(projected_min_eig(GeneralizedCovariance::matern(1, 1, 2.5), MonomialBasis(1, 0), pts) > -1e-9);
        CHECK(projected_min_eig(GeneralizedCovariance::power_linear(), MonomialBasis(1, 0), pts) > -1e-9);
        CHECK(projected_min_eig(GeneralizedCovariance::cubic(), MonomialBasis(1, 1), pts) > -1e-9);
    }
}

TEST_CASE("check_cpd preconditions") {
    CHECK_THROWS_AS(check_cpd(GeneralizedCovariance::cubic(), MonomialBasis(1, 0), 10, 5, 1), OrderMismatch);
    CHECK_THROWS_AS(check_cpd(GeneralizedCovariance::power_linear(), MonomialBasis(1, 0), 10, 1, 1),
                    InvalidArgument);
}
