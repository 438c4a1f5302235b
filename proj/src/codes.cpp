#include "bosupp/codes.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bosupp {

namespace {

// Normalized ket with log-amplitudes logamp(m) on the Fock indices in
// `support`.  Working in logs keeps large-alpha cat states out of trouble.
Vec residue_ket(const FockSpace& space, const std::vector<int>& support,
                const std::function<double(int)>& logamp) {
    if (support.empty())
        throw std::invalid_argument("codeword support does not fit the space");
    double peak = -std::numeric_limits<double>::infinity();
    for (int m : support) peak = std::max(peak, logamp(m));
    if (peak < -650.0)
        throw std::runtime_error("codeword amplitudes underflow");
    Vec psi = Vec::Zero(space.dim);
    for (int m : support) psi(m) = std::exp(logamp(m) - peak);
    return psi / psi.norm();
}

// Symmetric (Loewdin) orthonormalization of a nearly orthogonal pair.
std::pair<Vec, Vec> lowdin_pair(const Vec& u, const Vec& v) {
    Eigen::Matrix2cd s;
    s << u.dot(u), u.dot(v), v.dot(u), v.dot(v);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(s);
    if (es.eigenvalues().minCoeff() <= 1e-14)
        throw std::runtime_error("codewords are numerically dependent");
    const Eigen::Vector2cd d =
        es.eigenvalues().cwiseSqrt().cwiseInverse().cast<cplx>();
    const Eigen::Matrix2cd isq =
        es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
    return {isq(0, 0) * u + isq(1, 0) * v, isq(0, 1) * u + isq(1, 1) * v};
}

void check_codeword(const Vec& psi, const FockSpace& space) {
    check_leakage(psi * psi.adjoint(), space, 1e-8);
}

// One finite-energy GKP peak, e^{-tau n} D(beta) S(r) |0>, built from the
// three-term recurrence of its annihilator (A a + B a^+) v = lambda v.
// Direct matrix exponentials lose the small peaks to cancellation.
Eigen::VectorXd gkp_peak(const FockSpace& space, double tau, double r,
                         double beta) {
    const double A = std::exp(tau) * std::cosh(r);
    const double B = std::exp(-tau) * std::sinh(r);
    const double lambda = beta * std::exp(r);
    const double logv0 = -0.5 * beta * beta * (1.0 + std::tanh(r)) -
                         0.5 * std::log(std::cosh(r));
    Eigen::VectorXd v = Eigen::VectorXd::Zero(space.dim);
    if (logv0 < -650.0) return v;  // below double range, peak is irrelevant
    v(0) = std::exp(logv0);
    v(1) = lambda * v(0) / A;
    for (int n = 1; n + 1 < space.dim; ++n)
        v(n + 1) = (lambda * v(n) - B * std::sqrt(double(n)) * v(n - 1)) /
                   (A * std::sqrt(double(n + 1)));
    return v;
}

}  // namespace

Code cat_code(int n, double alpha, const FockSpace& space) {
    if (n <= 0 || n % 2 != 0)
        throw std::invalid_argument("cat order must be a positive even integer");
    if (alpha <= 0.0)
        throw std::invalid_argument("cat amplitude must be positive");
    auto logamp = [alpha](int m) {
        return m * std::log(alpha) - 0.5 * std::lgamma(double(m) + 1.0);
    };
    auto support = [&](int residue) {
        std::vector<int> s;
        for (int m = residue; m <= space.nmax(); m += n) s.push_back(m);
        return s;
    };
    Code code{space, residue_ket(space, support(0), logamp),
              residue_ket(space, support(n / 2), logamp), ""};
    check_codeword(code.zero, space);
    check_codeword(code.one, space);
    std::ostringstream name;
    name << "cat(" << n << "," << alpha << ")";
    code.name = name.str();
    return code;
}

Code binomial_code(int n, int kappa, const FockSpace& space) {
    if (n < 1 || kappa < 1)
        throw std::invalid_argument("binomial code needs n >= 1 and kappa >= 1");
    if (kappa * n > space.guarded_max())
        throw std::invalid_argument(
            "binomial codeword support exceeds the guarded subspace");
    Vec zero = Vec::Zero(space.dim), one = Vec::Zero(space.dim);
    double binom = 1.0;
    const double norm = std::pow(2.0, kappa - 1);
    for (int j = 0; j <= kappa; ++j) {
        (j % 2 == 0 ? zero : one)(j * n) = std::sqrt(binom / norm);
        binom = binom * double(kappa - j) / double(j + 1);
    }
    std::ostringstream name;
    name << "bin(" << n << "," << kappa << ")";
    return Code{space, zero, one, name.str()};
}

Code gkp_code(double delta, const FockSpace& space) {
    if (delta <= 0.0 || delta >= 1.0)
        throw std::invalid_argument("gkp envelope must lie in (0, 1)");
    const double tau = delta * delta;
    const double r = std::log(2.0 * std::sqrt(2.0) / delta);
    // Keep lattice peaks until the envelope has damped their weight to 1e-10.
    int peaks = 0;
    while (std::exp(-2.0 * tau * (M_PI / 2.0) * double(2 * peaks + 1) *
                    double(2 * peaks + 1)) >= 1e-10)
        ++peaks;
    Vec raw[2];
    for (int mu = 0; mu < 2; ++mu) {
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(space.dim);
        for (int s = -peaks; s <= peaks; ++s)
            sum += gkp_peak(space, tau, r,
                            std::sqrt(M_PI / 2.0) * double(2 * s + mu));
        raw[mu] = sum.cast<cplx>();
    }
    auto [zero, one] = lowdin_pair(raw[0], raw[1]);
    check_codeword(zero, space);
    check_codeword(one, space);
    std::ostringstream name;
    name << "gkp(" << delta << ")";
    return Code{space, zero, one, name.str()};
}

Code squeezed_cat(int n, double alpha, double db, const FockSpace& space) {
    Code cat = cat_code(n, alpha, space);
    const double r = std::log(std::pow(10.0, db / 20.0));
    // Axis phi = pi stretches the codewords along the real axis, where the
    // cat lobes live, which is the photon-adding orientation.
    const Mat s = squeeze(space, r, M_PI);
    // Truncation nudges the squeezed pair off orthonormality, so re-align.
    auto [zero, one] = lowdin_pair(Vec(s * cat.zero), Vec(s * cat.one));
    check_codeword(zero, space);
    check_codeword(one, space);
    std::ostringstream name;
    name << "sqcat(" << n << "," << alpha << "," << db << "dB)";
    return Code{space, zero, one, name.str()};
}

Mat codespace_identity(const Code& code) {
    return 0.5 * (code.zero * code.zero.adjoint() +
                  code.one * code.one.adjoint());
}

CodeMoments moments(const Code& code) {
    const Mat cl2 = codespace_identity(code);
    const Mat a = lower(code.space);
    const Mat n = raise(code.space) * a;
    const Mat a2 = a * a;
    auto g = [&cl2](const Mat& y) {
        return (cl2 * y * cl2 * y.adjoint()).trace().real() +
               std::norm((cl2 * y).trace());
    };
    CodeMoments m;
    m.n_mean = (cl2 * n).trace().real();
    m.n2 = (cl2 * n * n).trace().real();
    m.a2 = (cl2 * a2).trace();
    m.g_n = g(n);
    m.g_a2 = g(a2);
    return m;
}

ParityClass parity_class(const Code& code) {
    auto support = [&](const Vec& psi) {
        std::vector<int> s;
        for (int m = 0; m < psi.size(); ++m)
            if (std::abs(psi(m)) > 1e-10) s.push_back(m);
        return s;
    };
    auto parity_of = [](const std::vector<int>& s) {
        bool even = true, odd = true;
        for (int m : s) (m % 2 == 0 ? odd : even) = false;
        return even ? 0 : odd ? 1 : -1;
    };
    const auto s0 = support(code.zero), s1 = support(code.one);
    const int p0 = parity_of(s0), p1 = parity_of(s1);
    ParityKind kind = ParityKind::none;
    if (p0 == 0 && p1 == 0) kind = ParityKind::like_even;
    else if (p0 == 1 && p1 == 1) kind = ParityKind::like_odd;
    else if (p0 >= 0 && p1 >= 0) kind = ParityKind::opposite;
    int g = 0;
    for (int m : s0) g = std::gcd(g, m);
    for (int m : s1) g = std::gcd(g, m);
    return ParityClass{kind, g > 1 ? g : 0};
}

State logical_state(const Code& code, cplx c0, cplx c1) {
    if (std::abs(std::norm(c0) + std::norm(c1) - 1.0) > 1e-12)
        throw std::invalid_argument("logical coefficients are not normalized");
    return pure_state(c0 * code.zero + c1 * code.one);
}

State haar_sample(const Code& code, unsigned long seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    cplx c0(g(rng), g(rng));
    cplx c1(g(rng), g(rng));
    const double norm = std::sqrt(std::norm(c0) + std::norm(c1));
    return logical_state(code, c0 / norm, c1 / norm);
}

}  // namespace bosupp
