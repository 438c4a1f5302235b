#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bosupp/channels.hpp"
#include "bosupp/fock.hpp"
#include "doctest.h"

using namespace bosupp;

namespace {

Vec coherent_vec(const FockSpace& space, cplx beta) {
    Vec v = Vec::Zero(space.dim);
    v(0) = std::exp(-0.5 * std::norm(beta));
    for (int n = 1; n < space.dim; ++n) v(n) = v(n - 1) * beta / std::sqrt(double(n));
    return v;
}

Mat random_density(int dim, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Mat g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = cplx(nd(rng), nd(rng));
    Mat rho = g * g.adjoint();
    rho /= rho.trace().real();
    return rho;
}

Mat pauli(int j) {
    Mat s = Mat::Zero(2, 2);
    const cplx i(0.0, 1.0);
    switch (j) {
        case 0: s(0, 0) = s(1, 1) = 1.0; break;
        case 1: s(0, 1) = s(1, 0) = 1.0; break;
        case 2: s(0, 1) = -i; s(1, 0) = i; break;
        case 3: s(0, 0) = 1.0; s(1, 1) = -1.0; break;
    }
    return s;
}

double mean_photons(const FockSpace& space, const Mat& rho) {
    return (number_op(space) * rho).trace().real();
}

}  // namespace

TEST_CASE("noise parameter bookkeeping") {
    const CvNoiseParams p = cv_params(0.2, 1.25);
    CHECK(p.x() == doctest::Approx(0.64).epsilon(1e-14));
    CHECK(p.y() == doctest::Approx(0.3125).epsilon(1e-14));
    CHECK(p.z() == doctest::Approx(0.2).epsilon(1e-14));

    const CvNoiseParams th = thermal_params(0.05, 0.5);
    CHECK(th.G == doctest::Approx(1.025).epsilon(1e-15));
    CHECK(th.mu == doctest::Approx(0.07317073170731703).epsilon(1e-15));
    // mu*G collapses to eta*(1 + nbar)
    CHECK(std::abs(th.mu * th.G - 0.05 * 1.5) <= 1e-15);

    const CvNoiseParams gd = gdn_params(0.2);
    CHECK(gd.G == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(gd.mu == doctest::Approx(0.2).epsilon(1e-15));
    // noise variance eta/(1-eta)
    CHECK(gd.G - 1.0 == doctest::Approx(0.25).epsilon(1e-14));

    CHECK_THROWS_AS(cv_params(-0.1, 1.2), std::invalid_argument);
    CHECK_THROWS_AS(cv_params(0.5, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(cv_params(0.9, 1.2), std::invalid_argument);  // mu*G = 1.08
    CHECK_THROWS_AS(thermal_params(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(gdn_params(-0.01), std::invalid_argument);
}

TEST_CASE("loss channel matches its operator definition") {
    const FockSpace space(40, 8);
    const double mu = 0.3;
    const KrausChannel ch = loss_channel(mu, space);

    CHECK(ch.deficit <= 1e-10);
    const Mat a = lower(space);
    const Mat damp = number_function(space, [&](int n) { return cplx(std::pow(1.0 - mu, 0.5 * n), 0.0); });
    Mat al = Mat::Identity(space.dim, space.dim);
    for (const auto& op : ch.ops) {
        const int l = op.loss;
        CHECK(op.label == "l=" + std::to_string(l));
        CHECK(op.gain == 0);
        const double scale = std::exp(0.5 * (l * std::log(mu) - std::lgamma(l + 1.0)));
        const Mat ref = scale * damp * al;
        CHECK((op.m - ref).cwiseAbs().maxCoeff() <= 1e-14);
        al = a * al;  // ops arrive ordered in l
    }

    std::set<std::string> labels;
    for (const auto& op : ch.ops) labels.insert(op.label);
    CHECK(labels.size() == ch.ops.size());
}

TEST_CASE("loss channel examples") {
    const FockSpace space(40, 8);

    const KrausChannel id = loss_channel(0.0, space);
    REQUIRE(id.ops.size() == 1);
    CHECK((id.ops[0].m - Mat::Identity(40, 40)).norm() == 0.0);

    const double mu = 0.45;
    const KrausChannel ch = loss_channel(mu, space);
    Mat one = Mat::Zero(40, 40);
    one(1, 1) = 1.0;
    const Mat out = apply_raw(ch, one);
    CHECK(std::abs(out(1, 1).real() - (1.0 - mu)) <= 1e-14);
    CHECK(std::abs(out(0, 0).real() - mu) <= 1e-14);
    CHECK((out.diagonal().tail(38)).cwiseAbs().maxCoeff() <= 1e-14);

    // coherent states stay coherent with a shrunk amplitude
    const cplx beta(1.2, 0.0);
    const Vec in = coherent_vec(space, beta);
    const Mat rho_out = apply_raw(loss_channel(0.3, space), in * in.adjoint());
    CHECK(fidelity(coherent_vec(space, std::sqrt(0.7) * beta), rho_out) >= 1.0 - 1e-10);
    CHECK(std::abs(rho_out.trace().real() - 1.0) <= 1e-10);

    CHECK_THROWS_AS(loss_channel(1.0, space), std::invalid_argument);
    CHECK_THROWS_AS(loss_channel(-0.2, space), std::invalid_argument);
}

TEST_CASE("loss commutes with phase rotations") {
    const FockSpace space(30, 6);
    const Mat rho = random_density(30, 711u);
    const Mat u = phase_rotation(space, 0.7);
    const KrausChannel ch = loss_channel(0.25, space);
    const Mat lhs = apply_raw(ch, u * rho * u.adjoint());
    const Mat rhs = u * apply_raw(ch, rho) * u.adjoint();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("amplifier channel matches its operator definition") {
    const FockSpace space(60, 40);
    const double G = 1.2;
    const KrausChannel ch = amp_channel(G, space);

    CHECK(ch.deficit <= 1e-8);
    const Mat adag = raise(space);
    const Mat shrink = number_function(space, [&](int n) { return cplx(std::pow(G, -0.5 * n), 0.0); });
    Mat ak = Mat::Identity(space.dim, space.dim);
    for (const auto& op : ch.ops) {
        const int k = op.gain;
        CHECK(op.label == "k=" + std::to_string(k));
        CHECK(op.loss == 0);
        const double scale =
            std::exp(0.5 * (k * std::log(1.0 - 1.0 / G) - std::lgamma(k + 1.0) - std::log(G)));
        const Mat ref = scale * ak * shrink;
        CHECK((op.m - ref).cwiseAbs().maxCoeff() <= 1e-13);
        ak = adag * ak;
    }

    // vacuum picks up G - 1 thermal photons
    Mat vac = Mat::Zero(space.dim, space.dim);
    vac(0, 0) = 1.0;
    const Mat out = apply_raw(ch, vac);
    CHECK(std::abs(mean_photons(space, out) - (G - 1.0)) <= 1e-6);
    CHECK(out.trace().real() <= 1.0 + 1e-12);

    const KrausChannel id = amp_channel(1.0, space);
    REQUIRE(id.ops.size() == 1);
    CHECK((id.ops[0].m - Mat::Identity(space.dim, space.dim)).norm() == 0.0);

    CHECK_THROWS_AS(amp_channel(0.99, space), std::invalid_argument);
    // a hot amplifier on a thin guard band cannot meet the deficit gate
    CHECK_THROWS_AS(amp_channel(1.5, FockSpace(40, 2)), std::runtime_error);
}

TEST_CASE("thermal channel composition") {
    const FockSpace space(40, 8);
    const double eta = 0.05, nbar = 0.5;
    const KrausChannel ch = thermal_channel(eta, nbar, space);
    CHECK(ch.deficit <= 1e-6);

    std::set<std::string> labels;
    bool saw_pure_loss = false;
    for (const auto& op : ch.ops) {
        labels.insert(op.label);
        if (op.loss == 1 && op.gain == 0) {
            CHECK(op.label == "k=0,l=1");
            saw_pure_loss = true;
        }
    }
    CHECK(labels.size() == ch.ops.size());
    CHECK(saw_pure_loss);

    // same map as amp-after-loss applied in sequence
    const CvNoiseParams p = thermal_params(eta, nbar);
    const Vec in = coherent_vec(space, cplx(1.0, 0.3));
    const Mat rho = in * in.adjoint();
    const Mat seq = apply_raw(amp_channel(p.G, space), apply_raw(loss_channel(p.mu, space), rho));
    CHECK((apply_raw(ch, rho) - seq).cwiseAbs().maxCoeff() <= 1e-12);

    // vacuum heats to eta*nbar
    Mat vac = Mat::Zero(space.dim, space.dim);
    vac(0, 0) = 1.0;
    CHECK(std::abs(mean_photons(space, apply_raw(ch, vac)) - eta * nbar) <= 1e-6);

    // nbar = 0 collapses to pure loss at mu = eta
    const KrausChannel cold = thermal_channel(eta, 0.0, space);
    const KrausChannel pure = loss_channel(eta, space);
    REQUIRE(cold.ops.size() == pure.ops.size());
    for (size_t j = 0; j < cold.ops.size(); ++j) {
        CHECK(cold.ops[j].loss == pure.ops[j].loss);
        CHECK((cold.ops[j].m - pure.ops[j].m).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("gaussian displacement noise channel") {
    const FockSpace space(80, 60);
    const double eta = 0.2;
    const KrausChannel ch = gdn_channel(eta, space);
    CHECK(ch.deficit <= 1e-8);

    // vacuum mean energy equals the displacement variance eta/(1-eta)
    Mat vac = Mat::Zero(space.dim, space.dim);
    vac(0, 0) = 1.0;
    CHECK(std::abs(mean_photons(space, apply_raw(ch, vac)) - 0.25) <= 1e-6);
}

TEST_CASE("qubit damping families") {
    const double p = 0.36;
    const KrausChannel ad = qubit_damping(p, QubitDampKind::amplitude);
    REQUIRE(ad.ops.size() == 2);
    CHECK(ad.deficit <= 1e-15);
    CHECK(std::abs(ad.ops[0].m(1, 1).real() - 0.8) <= 1e-15);
    CHECK(std::abs(ad.ops[1].m(0, 1).real() - 0.6) <= 1e-15);

    Mat one = Mat::Zero(2, 2);
    one(1, 1) = 1.0;
    const Mat dead = apply_raw(qubit_damping(1.0, QubitDampKind::amplitude), one);
    CHECK(std::abs(dead(0, 0).real() - 1.0) <= 1e-15);

    const KrausChannel pd = qubit_damping(p, QubitDampKind::phase);
    REQUIRE(pd.ops.size() == 2);
    CHECK(std::abs(pd.ops[1].m(1, 1).real() - 0.6) <= 1e-15);

    const KrausChannel both = qubit_damping(p, QubitDampKind::composite);
    CHECK(both.ops.size() == 3);  // the doubly-jumped product vanishes
    CHECK(both.deficit <= 1e-14);

    // phase and amplitude damping commute as maps
    const KrausChannel swapped = compose(qubit_damping(p, QubitDampKind::amplitude),
                                         qubit_damping(p, QubitDampKind::phase));
    for (int j = 0; j < 4; ++j) {
        CHECK((apply_raw(both, pauli(j)) - apply_raw(swapped, pauli(j))).cwiseAbs().maxCoeff() <=
              1e-14);
    }

    Mat plus = Mat::Constant(2, 2, cplx(0.5, 0.0));
    const Mat faded = apply_raw(both, plus);
    CHECK(std::abs(faded(0, 1).real() - 0.5 * (1.0 - p)) <= 1e-15);
    CHECK(std::abs(faded.trace().real() - 1.0) <= 1e-15);
}

TEST_CASE("composite qubit damping matches its single-expression form") {
    // N[rho] = (1/4){c+ rho + c- s3 rho s3
    //               + p [s1 rho s1 + s2 rho s2 + {rho, s3} + i(s2 rho s1 - s1 rho s2)]}
    const double p = 0.27;
    const double s = std::sqrt(1.0 - p), q = 1.0 - 0.5 * p;
    const double cp = (1.0 + s) * (q + s) + (1.0 - s) * (q - s);
    const double cm = (1.0 + s) * (q - s) + (1.0 - s) * (q + s);
    CHECK(std::abs(cp - (4.0 - 3.0 * p)) <= 1e-14);
    CHECK(std::abs(cm - p) <= 1e-14);

    const Mat s1 = pauli(1), s2 = pauli(2), s3 = pauli(3);
    const cplx i(0.0, 1.0);
    const KrausChannel ch = qubit_damping(p, QubitDampKind::composite);
    for (int j = 0; j < 4; ++j) {
        const Mat rho = pauli(j);
        const Mat direct =
            0.25 * (cp * rho + cm * s3 * rho * s3 +
                    p * (s1 * rho * s1 + s2 * rho * s2 + rho * s3 + s3 * rho +
                         i * (s2 * rho * s1 - s1 * rho * s2)));
        CHECK((apply_raw(ch, rho) - direct).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("qutrit damping families") {
    const double p = 0.3;
    const KrausChannel ad = qutrit_damping(p, QutritDampKind::cascaded_ad);
    REQUIRE(ad.ops.size() == 3);
    CHECK(ad.deficit <= 1e-15);

    Mat two = Mat::Zero(3, 3);
    two(2, 2) = 1.0;
    const Mat out = apply_raw(ad, two);
    CHECK(std::abs(out(2, 2).real() - (1.0 - p)) <= 1e-15);
    CHECK(std::abs(out(1, 1).real() - p) <= 1e-15);

    const KrausChannel pd = qutrit_damping(p, QutritDampKind::mid_pd);
    REQUIRE(pd.ops.size() == 2);
    CHECK(pd.deficit <= 1e-15);

    const Mat rho = random_density(3, 42u);
    const Mat pd_ad = apply_raw(pd, apply_raw(ad, rho));
    const Mat ad_pd = apply_raw(ad, apply_raw(pd, rho));
    CHECK((pd_ad - ad_pd).cwiseAbs().maxCoeff() <= 1e-12);

    const KrausChannel both = qutrit_damping(p, QutritDampKind::composite);
    CHECK(both.deficit <= 1e-14);
    CHECK((apply_raw(both, rho) - pd_ad).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("depolarizing channel") {
    const Mat rho = random_density(2, 9u);
    const Mat iso = apply_raw(depolarizing(0.75), rho);
    CHECK((iso - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);

    Mat zero = Mat::Zero(2, 2);
    zero(0, 0) = 1.0;
    const Mat biased = apply_raw(depolarizing(0.3), zero);
    CHECK(std::abs(biased(0, 0).real() - 0.8) <= 1e-15);
    CHECK(std::abs(biased(1, 1).real() - 0.2) <= 1e-15);

    CHECK(depolarizing(0.0).ops.size() == 1);
    CHECK_THROWS_AS(depolarizing(1.5), std::invalid_argument);
}

TEST_CASE("channels on one tensor factor") {
    const FockSpace space(12, 3);
    const std::vector<int> dims{12, 2};
    const Vec f = coherent_vec(space, cplx(0.8, 0.0));
    const Mat rho_f = f * f.adjoint();
    const Mat rho_q = 0.5 * (pauli(0) + 0.6 * pauli(1));
    const Mat joint = kron(rho_f, rho_q);

    const KrausChannel damp = qubit_damping(0.4, QubitDampKind::composite);
    const Mat out = apply_on_factor_raw(damp, joint, dims, 1);
    CHECK((out - kron(rho_f, apply_raw(damp, rho_q))).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((partial_trace(out, dims, {0}) - rho_f).cwiseAbs().maxCoeff() <= 1e-14);

    const KrausChannel lossy = loss_channel(0.2, space);
    const Mat cv = apply_on_factor_raw(lossy, joint, dims, 0);
    CHECK((cv - kron(apply_raw(lossy, rho_f), rho_q)).cwiseAbs().maxCoeff() <= 1e-13);

    CHECK_THROWS_AS(apply_on_factor_raw(damp, joint, dims, 0), std::invalid_argument);
    CHECK_THROWS_AS(apply_on_factor_raw(damp, joint, dims, 2), std::invalid_argument);
}

TEST_CASE("composition bookkeeping") {
    const FockSpace space(40, 8);
    const KrausChannel a = loss_channel(0.1, space);
    const KrausChannel b = loss_channel(0.2, space);
    const KrausChannel ab = compose(b, a);
    CHECK(ab.deficit == doctest::Approx(a.deficit + b.deficit).epsilon(1e-12));

    // two loss stages merge into one with 1-mu multiplying
    const Vec in = coherent_vec(space, cplx(1.0, 0.0));
    const Mat rho = in * in.adjoint();
    const KrausChannel merged = loss_channel(1.0 - 0.9 * 0.8, space);
    CHECK((apply_raw(ab, rho) - apply_raw(merged, rho)).cwiseAbs().maxCoeff() <= 1e-9);

    const State st = apply(merged, make_state(rho));
    CHECK(st.weight == doctest::Approx(st.rho.trace().real()).epsilon(1e-15));

    CHECK_THROWS_AS(compose(qubit_damping(0.1, QubitDampKind::phase), a), std::invalid_argument);
    CHECK_THROWS_AS(apply_raw(a, Mat::Identity(3, 3)), std::invalid_argument);
}
