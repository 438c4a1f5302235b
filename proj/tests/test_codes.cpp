#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bosupp/codes.hpp"

using namespace bosupp;

namespace {

void check_wellformed(const Code& code) {
    CHECK(code.zero.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(code.one.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(code.zero.dot(code.one)) < 1e-10);
    CHECK(leakage_weight(code.zero * code.zero.adjoint(), code.space) <= 1e-8);
    CHECK(leakage_weight(code.one * code.one.adjoint(), code.space) <= 1e-8);
}

}  // namespace

TEST_CASE("two-component cat matches the hyperbolic closed forms") {
    FockSpace sp(40, 8);
    const double alpha = 2.0;
    const Code cat = cat_code(2, alpha, sp);
    check_wellformed(cat);
    CHECK(cat.name == "cat(2,2)");

    // Even/odd cats are a^2 eigenstates, so every moment reduces to tanh.
    const double a2 = alpha * alpha, a4 = a2 * a2;
    const double t = std::tanh(a2);
    const double np = a2 * t, nm = a2 / t;
    const CodeMoments m = moments(cat);
    CHECK(m.n_mean == doctest::Approx(0.5 * (np + nm)).epsilon(1e-10));
    CHECK(m.n2 == doctest::Approx(a4 + 0.5 * (np + nm)).epsilon(1e-10));
    CHECK(std::abs(m.a2 - cplx(a2, 0.0)) < 1e-10);
    CHECK(m.g_n ==
          doctest::Approx(0.5 * a4 * (t * t + 1.0 / (t * t) + 1.0))
              .epsilon(1e-10));
    CHECK(m.g_a2 == doctest::Approx(1.5 * a4).epsilon(1e-10));
    CHECK(m.n2 >= m.n_mean * m.n_mean);

    const ParityClass pc = parity_class(cat);
    CHECK(pc.kind == ParityKind::opposite);
    CHECK(pc.rotation_order == 0);

    CHECK_THROWS_AS(cat_code(3, 2.0, sp), std::invalid_argument);
    CHECK_THROWS_AS(cat_code(2, -1.0, sp), std::invalid_argument);
}

TEST_CASE("cat codewords are discrete rotation eigenvectors") {
    FockSpace sp(60, 12);
    const Code cat = cat_code(6, 1.916, sp);
    check_wellformed(cat);
    const Mat u = phase_rotation(sp, 2.0 * M_PI / 6.0);
    CHECK((u * cat.zero - cat.zero).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((u * cat.one + cat.one).cwiseAbs().maxCoeff() < 1e-12);

    // Fig-3-style moment agreement with the binomial partner code.
    const CodeMoments m = moments(cat);
    CHECK(std::abs(m.n_mean - 4.0) < 0.02 * 4.0);
    CHECK(std::abs(m.n2 - 20.0) < 0.02 * 20.0);
    CHECK(std::abs(m.a2) < 1e-10);
    const ParityClass pc = parity_class(cat);
    CHECK(pc.kind == ParityKind::opposite);
    CHECK(pc.rotation_order == 3);
}

TEST_CASE("cat(8) carries a four-fold rotation symmetry") {
    FockSpace sp(80, 16);
    const Code cat = cat_code(8, 2.0, sp);
    const ParityClass pc = parity_class(cat);
    CHECK(pc.kind == ParityKind::like_even);
    CHECK(pc.rotation_order == 4);
    const Mat par = parity_op(sp);
    CHECK((cat.zero.adjoint() * par * cat.zero)(0, 0).real() ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK((cat.one.adjoint() * par * cat.one)(0, 0).real() ==
          doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("binomial code amplitudes and exact moments") {
    FockSpace sp(40, 8);
    const Code bin = binomial_code(2, 4, sp);
    check_wellformed(bin);
    CHECK(bin.name == "bin(2,4)");
    CHECK(std::abs(bin.zero(0) - cplx(std::sqrt(1.0 / 8.0), 0)) < 1e-14);
    CHECK(std::abs(bin.zero(4) - cplx(std::sqrt(6.0 / 8.0), 0)) < 1e-14);
    CHECK(std::abs(bin.zero(8) - cplx(std::sqrt(1.0 / 8.0), 0)) < 1e-14);
    CHECK(std::abs(bin.one(2) - cplx(std::sqrt(0.5), 0)) < 1e-14);
    CHECK(std::abs(bin.one(6) - cplx(std::sqrt(0.5), 0)) < 1e-14);

    const CodeMoments m = moments(bin);
    CHECK(m.n_mean == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(m.n2 == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(std::abs(m.a2) < 1e-14);
    CHECK(m.g_n == doctest::Approx(24.0).epsilon(1e-12));
    // Exact radical form of g(a^2), worked out from the five amplitudes.
    const double g_a2_exact =
        (155.0 + 6.0 * std::sqrt(10.0) + 24.0 * std::sqrt(7.0)) / 32.0;
    CHECK(m.g_a2 == doctest::Approx(g_a2_exact).epsilon(1e-12));

    const ParityClass pc = parity_class(bin);
    CHECK(pc.kind == ParityKind::like_even);
    CHECK(pc.rotation_order == 2);

    const Code fock01 = binomial_code(1, 1, sp);
    CHECK(std::abs(fock01.zero(0) - cplx(1, 0)) < 1e-14);
    CHECK(std::abs(fock01.one(1) - cplx(1, 0)) < 1e-14);
    CHECK(parity_class(fock01).kind == ParityKind::opposite);
    CHECK(parity_class(fock01).rotation_order == 0);

    CHECK_THROWS_AS(binomial_code(2, 16, sp), std::invalid_argument);
    CHECK_THROWS_AS(binomial_code(0, 4, sp), std::invalid_argument);
}

namespace {

// Exact Fock amplitudes of S(r)|0> for S = exp(r(a^2 - a^+2)/2).
Vec squeezed_vacuum(const FockSpace& sp, double r) {
    Vec v = Vec::Zero(sp.dim);
    double logmag = -0.5 * std::log(std::cosh(r));
    int sign = 1;
    for (int m = 0; 2 * m < sp.dim; ++m) {
        v(2 * m) = sign * std::exp(logmag);
        logmag += std::log(std::tanh(r)) +
                  0.5 * (std::log(2.0 * m + 1.0) + std::log(2.0 * m + 2.0)) -
                  std::log(2.0) - std::log(m + 1.0);
        sign = -sign;
    }
    return v;
}

// The raw (pre-orthogonalization) lattice sums, built densely from the
// analytic squeezed vacuum, displacement matrices, and the damping diagonal.
// Needs generous headroom because the undamped squeezed vacuum is wide.
std::pair<Vec, Vec> gkp_raw_dense(const FockSpace& sp, double delta) {
    const double tau = delta * delta;
    const double r = std::log(2.0 * std::sqrt(2.0) / delta);
    const Mat env = number_function(
        sp, [tau](int n) { return cplx(std::exp(-tau * n), 0.0); });
    const Vec sv = squeezed_vacuum(sp, r);
    int peaks = 0;
    while (std::exp(-2.0 * tau * (M_PI / 2.0) * double(2 * peaks + 1) *
                    double(2 * peaks + 1)) >= 1e-10)
        ++peaks;
    Vec raw[2];
    for (int mu = 0; mu < 2; ++mu) {
        Vec sum = Vec::Zero(sp.dim);
        for (int s = -peaks; s <= peaks; ++s) {
            const double beta = std::sqrt(M_PI / 2.0) * double(2 * s + mu);
            sum += env * (displacement(sp, beta) * sv);
        }
        raw[mu] = sum;
    }
    return {raw[0], raw[1]};
}

}  // namespace

TEST_CASE("gkp matches an independent dense construction") {
    FockSpace sp(300, 60);
    const double delta = 0.5;
    const Code gkp = gkp_code(delta, sp);
    check_wellformed(gkp);

    auto [raw0, raw1] = gkp_raw_dense(sp, delta);
    Eigen::Matrix2cd gram;
    gram << raw0.dot(raw0), raw0.dot(raw1), raw1.dot(raw0), raw1.dot(raw1);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(gram);
    const Eigen::Matrix2cd isq =
        es.eigenvectors() *
        es.eigenvalues().cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
        es.eigenvectors().adjoint();
    const Vec dense_zero = isq(0, 0) * raw0 + isq(1, 0) * raw1;
    const Vec dense_one = isq(0, 1) * raw0 + isq(1, 1) * raw1;
    CHECK((gkp.zero - dense_zero).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((gkp.one - dense_one).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gkp overlap, envelope, and truncation behavior") {
    // Strong damping: the raw zero codeword is vacuum-dominated, and the
    // two raw codewords overlap so much that orthogonalization must mix.
    {
        FockSpace sp(80, 16);
        auto [raw0, raw1] = gkp_raw_dense(sp, 0.9);
        CHECK(std::norm(raw0(0)) / raw0.squaredNorm() > 0.9);
        CHECK(std::abs(raw0.dot(raw1)) / (raw0.norm() * raw1.norm()) > 0.5);
        const Code wide = gkp_code(0.9, sp);
        check_wellformed(wide);
    }

    // Moderate damping: raw codewords already nearly orthogonal.
    {
        FockSpace sp(128, 24);
        auto [raw0, raw1] = gkp_raw_dense(FockSpace(280, 56), 0.3);
        CHECK(std::abs(raw0.dot(raw1)) / (raw0.norm() * raw1.norm()) < 1e-3);
        const Code tall = gkp_code(0.3, sp);
        check_wellformed(tall);
        // The lattice sum runs over an asymmetric peak range for |1_L>, but
        // at this truncation the unpaired edge peak is invisible and both
        // supports are exactly even.
        const ParityClass pc = parity_class(tall);
        CHECK(pc.kind == ParityKind::like_even);
        CHECK(pc.rotation_order == 2);
    }

    // At delta = 0.5 the unpaired edge peak of |1_L> does land inside the
    // truncation, leaving both parities in its support.
    CHECK(parity_class(gkp_code(0.5, FockSpace(100, 20))).kind ==
          ParityKind::none);

    // Delta = 0.3 wants a much taller space; the default one must refuse.
    CHECK_THROWS_AS(gkp_code(0.3, FockSpace(40, 8)), std::runtime_error);
    CHECK_THROWS_AS(gkp_code(1.2, FockSpace(60, 12)), std::invalid_argument);
}

TEST_CASE("squeezed cat reduces to cat at 0 dB and gains photons") {
    // Stretching alpha = 2 by 6 dB quadruples the mean photon number, so
    // this code needs a much taller space than the default one.
    FockSpace sp(128, 24);
    const Code cat = cat_code(2, 2.0, sp);
    const Code flat = squeezed_cat(2, 2.0, 0.0, sp);
    CHECK((flat.zero - cat.zero).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((flat.one - cat.one).cwiseAbs().maxCoeff() < 1e-12);

    const Code sq = squeezed_cat(2, 2.0, 6.0, sp);
    check_wellformed(sq);
    CHECK(sq.name == "sqcat(2,2,6dB)");
    CHECK(moments(sq).n_mean > moments(cat).n_mean);
}

TEST_CASE("codespace identity is the normalized rank-2 projector") {
    FockSpace sp(40, 8);
    const Code bin = binomial_code(2, 4, sp);
    const Mat cl = codespace_identity(bin);
    CHECK(std::abs(cl.trace() - cplx(1.0, 0.0)) < 1e-12);
    CHECK((cl * cl - 0.5 * cl).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("logical states demand normalized coefficients") {
    FockSpace sp(40, 8);
    const Code bin = binomial_code(2, 4, sp);
    const State z = logical_state(bin, 1.0, 0.0);
    CHECK(fidelity(bin.zero, z.rho) == doctest::Approx(1.0).epsilon(1e-12));
    const double s = std::sqrt(0.5);
    const State plus = logical_state(bin, s, s);
    CHECK(fidelity(bin.zero, plus.rho) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(logical_state(bin, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("haar samples are deterministic and reproduce Haar moments") {
    FockSpace sp(30, 6);
    const Code bin = binomial_code(2, 4, sp);
    const State s1 = haar_sample(bin, 42), s1b = haar_sample(bin, 42);
    const State s2 = haar_sample(bin, 43);
    CHECK((s1.rho - s1b.rho).cwiseAbs().maxCoeff() == 0.0);
    CHECK((s1.rho - s2.rho).cwiseAbs().maxCoeff() > 1e-3);
    CHECK(std::abs(s1.rho.trace() - cplx(1, 0)) < 1e-12);
    // Samples live in the codespace.
    CHECK((2.0 * codespace_identity(bin) * s1.rho - s1.rho)
              .cwiseAbs()
              .maxCoeff() < 1e-12);

    // First and second Haar moments against a two-observable Monte Carlo.
    const Mat m1 = bin.zero * bin.zero.adjoint() +
                   0.3 * (bin.zero * bin.one.adjoint() +
                          bin.one * bin.zero.adjoint());
    const Mat m2 = bin.one * bin.one.adjoint() +
                   cplx(0.0, 0.5) * (bin.zero * bin.one.adjoint() -
                                     bin.one * bin.zero.adjoint());
    const int nsamp = 100000;
    double sum1 = 0.0, sumsq1 = 0.0, sum2 = 0.0, sumsq2 = 0.0;
    for (int k = 0; k < nsamp; ++k) {
        const State s = haar_sample(bin, 1000 + k);
        const double e1 =
            m1.cwiseProduct(s.rho.transpose()).sum().real();
        const double e2 =
            m2.cwiseProduct(s.rho.transpose()).sum().real();
        sum1 += e1;
        sumsq1 += e1 * e1;
        sum2 += e1 * e2;
        sumsq2 += e1 * e1 * e2 * e2;
    }
    // Logical-basis traces of the two observables.
    auto ltrace = [&](const Mat& m) {
        return ((bin.zero.adjoint() * m * bin.zero)(0, 0) +
                (bin.one.adjoint() * m * bin.one)(0, 0))
            .real();
    };
    auto lprodtrace = [&](const Mat& ma, const Mat& mb) {
        const Mat p = ma * codespace_identity(bin) * 2.0 * mb;
        return ltrace(p);
    };
    const double mean1 = sum1 / nsamp;
    const double se1 = std::sqrt((sumsq1 / nsamp - mean1 * mean1) / nsamp);
    CHECK(std::abs(mean1 - 0.5 * ltrace(m1)) < 3.0 * se1 + 1e-12);

    const double mean12 = sum2 / nsamp;
    const double se12 =
        std::sqrt((sumsq2 / nsamp - mean12 * mean12) / nsamp);
    const double expect12 =
        (lprodtrace(m1, m2) + ltrace(m1) * ltrace(m2)) / 6.0;
    CHECK(std::abs(mean12 - expect12) < 3.0 * se12 + 1e-12);
}
