#include "bosupp/analytics.hpp"

#include <cmath>
#include <stdexcept>

#include "bosupp/channels.hpp"

namespace bosupp {

namespace {

std::vector<double> diagonal_weights(const Mat& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0)
        throw std::invalid_argument("analytics: density operator must be square");
    std::vector<double> w(static_cast<size_t>(rho.rows()));
    for (int n = 0; n < rho.rows(); ++n) w[static_cast<size_t>(n)] = rho(n, n).real();
    return w;
}

// tr{rho x^n (1-z)/2^K sum_j (1 + y w^j + z w^-j/(1-z w^-j))^n / (1-z w^-j)}
double psucc_omega_sum(const std::vector<double>& w, const CvNoiseParams& par, int K) {
    const double x = par.x(), y = par.y(), z = par.z();
    const int m = 1 << K;
    const double phi = M_PI / double(1 << (K - 1));
    cplx total = 0.0;
    for (int j = 0; j < m; ++j) {
        const cplx wj = std::polar(1.0, phi * j);
        const cplx wmj = std::conj(wj);
        const cplx denom = 1.0 - z * wmj;
        const cplx base = x * (1.0 + y * wj + z * wmj / denom);
        cplx pw = 1.0;
        cplx branch = 0.0;
        for (double wn : w) {
            branch += wn * pw;
            pw *= base;
        }
        total += branch / denom;
    }
    total *= (1.0 - z) / double(m);
    if (std::abs(total.imag()) > 1e-12)
        throw std::runtime_error("psucc_closed: imaginary residue above 1e-12");
    return total.real();
}

double psucc_single_ancilla(const std::vector<double>& w, double mu, double G) {
    const double lam = (1.0 - 2.0 * mu * G) / (2.0 * G - 1.0);
    double t = 0.0, pw = 1.0;
    for (double wn : w) {
        t += wn * pw;
        pw *= lam;
    }
    return 0.5 + t / (2.0 * (2.0 * G - 1.0));
}

Mat anticomm(const Mat& a, const Mat& b) { return a * b + b * a; }

void require_unit_interval(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

double psucc_closed(const Mat& rho, double mu, double G, int K) {
    if (K < 1) throw std::invalid_argument("psucc_closed: K must be at least 1");
    const CvNoiseParams par = cv_params(mu, G);
    const std::vector<double> w = diagonal_weights(rho);
    const double p = psucc_omega_sum(w, par, K);
    if (K == 1) {
        // the collapsed single-ancilla form must match the root-of-unity sum
        const double p1 = psucc_single_ancilla(w, mu, G);
        if (std::abs(p - p1) > 1e-12)
            throw std::runtime_error("psucc_closed: K=1 forms disagree");
    }
    return p;
}

double psucc_asymptotic(const Mat& rho, double mu, double G) {
    const CvNoiseParams par = cv_params(mu, G);
    (void)par;
    if (1.0 - mu * G <= 0.0)
        throw std::invalid_argument("psucc_asymptotic: needs 1 - mu G > 0");
    const std::vector<double> w = diagonal_weights(rho);
    const double t = (1.0 - mu * (2.0 - G)) / (1.0 - mu * G);
    const double base = 1.0 / G - mu;

    double total = w[0];
    double pn_prev = 1.0;  // P_0
    double pn = t;         // P_1
    double pw = base;
    for (size_t n = 1; n < w.size(); ++n) {
        total += w[n] * pw * pn;
        const double pn_next =
            ((2.0 * double(n) + 1.0) * t * pn - double(n) * pn_prev) / (double(n) + 1.0);
        pn_prev = pn;
        pn = pn_next;
        pw *= base;
    }
    return total / G;
}

DeltaPGap delta_p_bound(const Mat& rho, double mu, double G, int K) {
    if (K < 1) throw std::invalid_argument("delta_p_bound: K must be at least 1");
    const CvNoiseParams par = cv_params(mu, G);
    const std::vector<double> w = diagonal_weights(rho);
    const double y = par.y(), z = par.z();
    const int m = 1 << K;
    const double lgm = std::lgamma(double(m) + 1.0);

    double bound = 0.0;
    double xn = 1.0;
    for (size_t n = 0; n < w.size(); ++n) {
        double jumps = 0.0;
        if (y > 0.0 && int(n) >= m)
            jumps += std::exp(double(m) * std::log(y) + std::lgamma(double(n) + 1.0) -
                              std::lgamma(double(n) - double(m) + 1.0) - lgm);
        if (z > 0.0)
            jumps += std::exp(double(m) * std::log(z) + std::lgamma(double(n) + double(m) + 1.0) -
                              std::lgamma(double(n) + 1.0) - lgm);
        bound += w[n] / G * xn * jumps;
        xn *= par.x();
    }

    DeltaPGap gap;
    gap.bound = bound;
    gap.exact = psucc_closed(rho, mu, G, K) - psucc_asymptotic(rho, mu, G);
    return gap;
}

PerturbativeExpansion perturbative_expansion(const Mat& rho) {
    if (rho.rows() != rho.cols() || rho.rows() == 0)
        throw std::invalid_argument("perturbative_expansion: state must be square");
    if (std::abs(rho.trace().real() - 1.0) > 1e-8)
        throw std::invalid_argument("perturbative_expansion: state must have unit trace");
    if (std::abs((rho * rho).trace().real() - 1.0) > 1e-8)
        throw std::invalid_argument("perturbative_expansion: state must be pure");

    const int d = int(rho.rows());
    Mat a = Mat::Zero(d, d);
    for (int k = 1; k < d; ++k) a(k - 1, k) = std::sqrt(double(k));
    const Mat ad = a.adjoint();
    const Mat num = ad * a;
    const Mat t1 = 0.5 * num;
    const Mat t21 = t1 * t1;
    const Mat t22 = num * (num - 2.0 * Mat::Identity(d, d)) / 8.0;

    PerturbativeExpansion e;
    e.p00 = rho;
    e.p10 = -(rho + anticomm(t1, rho));
    e.p01 = -anticomm(t1, rho);
    e.p11 = anticomm(t1, rho) + anticomm(t21, rho) + 2.0 * t1 * rho * t1 + num * rho * num;
    e.p20 = anticomm(t1, rho) + anticomm(t22, rho) + t1 * rho * t1 + 0.5 * ad * ad * rho * a * a;
    e.p02 = anticomm(t22, rho) + t1 * rho * t1 + 0.5 * a * a * rho * ad * ad;

    e.c00 = e.p00.trace().real();
    e.c10 = e.p10.trace().real();
    e.c01 = e.p01.trace().real();
    e.c11 = e.p11.trace().real();
    e.c20 = e.p20.trace().real();
    e.c02 = e.p02.trace().real();

    const double c0 = e.c00;
    e.q00 = 1.0 / c0;
    e.q10 = -e.c10 / (c0 * c0);
    e.q01 = -e.c01 / (c0 * c0);
    e.q11 = (2.0 * e.c01 * e.c10 - c0 * e.c11) / (c0 * c0 * c0);
    e.q20 = (e.c10 * e.c10 - c0 * e.c20) / (c0 * c0 * c0);
    e.q02 = (e.c01 * e.c01 - c0 * e.c02) / (c0 * c0 * c0);

    e.r00 = e.p00 * e.q00;
    e.r10 = e.p10 * e.q00 + e.p00 * e.q10;
    e.r01 = e.p01 * e.q00 + e.p00 * e.q01;
    e.r11 = e.p11 * e.q00 + e.p00 * e.q11 + e.p10 * e.q01 + e.p01 * e.q10;
    e.r20 = e.p20 * e.q00 + e.p00 * e.q20 + e.p10 * e.q10;
    e.r02 = e.p02 * e.q00 + e.p00 * e.q02 + e.p01 * e.q01;
    return e;
}

State perturbative_state(const Mat& rho, double mu, double z) {
    const PerturbativeExpansion e = perturbative_expansion(rho);
    const Mat out = e.r00 + z * e.r10 + mu * e.r01 + mu * z * e.r11 + z * z * e.r20 +
                    mu * mu * e.r02;
    // truncation can dip an eigenvalue slightly below zero, so skip the
    // usual positivity vetting and keep the polynomial as written
    return State{out, out.trace().real()};
}

double avg_fidelity_suppressed(const CodeMoments& m, double eta, double nbar) {
    const double nb2 = nbar * nbar;
    const double half = nbar + 0.5;
    const double curly = nb2 + 3.0 * half * half * m.n2 + (nb2 - nbar - 0.5) * m.n_mean -
                         (1.0 / 6.0 + 4.0 / 3.0 * (nb2 + nbar)) * m.g_n -
                         (1.0 / 3.0 + 2.0 / 3.0 * (nb2 + nbar)) * m.g_a2;
    return 1.0 - eta * eta * curly;
}

UnsuppMoments unsupp_moments(const Code& code) {
    const Mat cl = codespace_identity(code);
    const Mat a = lower(code.space);
    const Mat ad = raise(code.space);
    UnsuppMoments u;
    u.cross_da = (cl * ad * cl * a).trace().real();
    u.cross_ad = (cl * a * cl * ad).trace().real();
    u.a_abs2 = std::norm((cl * a).trace());
    return u;
}

double avg_fidelity_unsuppressed(const CodeMoments& m, const UnsuppMoments& u, double eta,
                                 double nbar) {
    const double bracket = nbar + (1.0 + 2.0 * nbar) * m.n_mean -
                           2.0 * nbar / 3.0 * (u.cross_da + u.a_abs2) -
                           2.0 * (1.0 + nbar) / 3.0 * (u.cross_ad + u.a_abs2);
    return 1.0 - eta * bracket;
}

cplx haar_moment_trace(int t, const std::vector<Mat>& ms) {
    if (t < 1 || t > 3)
        throw std::invalid_argument("haar_moment_trace: only degrees 1 to 3 are defined");
    if (int(ms.size()) != t)
        throw std::invalid_argument("haar_moment_trace: need one matrix per degree");
    for (const Mat& m : ms)
        if (m.rows() != 2 || m.cols() != 2)
            throw std::invalid_argument("haar_moment_trace: logical matrices must be 2x2");

    switch (t) {
        case 1:
            return 0.5 * ms[0].trace();
        case 2:
            return ((ms[0] * ms[1]).trace() + ms[0].trace() * ms[1].trace()) / 6.0;
        default: {
            // all six permutations of S_3, grouped by cycle type, over d^(3) = 24
            const cplx t0 = ms[0].trace(), t1 = ms[1].trace(), t2 = ms[2].trace();
            const cplx t01 = (ms[0] * ms[1]).trace();
            const cplx t02 = (ms[0] * ms[2]).trace();
            const cplx t12 = (ms[1] * ms[2]).trace();
            const cplx t012 = (ms[0] * ms[1] * ms[2]).trace();
            const cplx t021 = (ms[0] * ms[2] * ms[1]).trace();
            return (t0 * t1 * t2 + t01 * t2 + t02 * t1 + t12 * t0 + t012 + t021) / 24.0;
        }
    }
}

double teleportation_fidelity(double p) {
    require_unit_interval(p, "teleportation_fidelity: p");
    return 1.0 - p + 2.0 * p * p / 3.0;
}

double comm_psucc_closed(const Mat& rho, double mu, double G, double p, CommOutcome outcome) {
    const CvNoiseParams par = cv_params(mu, G);
    (void)par;
    require_unit_interval(p, "comm_psucc_closed: p");
    const std::vector<double> w = diagonal_weights(rho);

    const double d = 2.0 * G - 1.0;
    const double lam = (1.0 - 2.0 * mu * G) / d;
    double tr = 0.0, t_all = 0.0, w_odd = 0.0, w_even = 0.0, t_odd = 0.0, t_even = 0.0;
    double pw = 1.0;
    for (size_t n = 0; n < w.size(); ++n) {
        tr += w[n];
        t_all += w[n] * pw;
        if (n % 2 == 0) {
            w_even += w[n];
            t_even += w[n] * pw;
        } else {
            w_odd += w[n];
            t_odd += w[n] * pw;
        }
        pw *= lam;
    }

    switch (outcome) {
        case CommOutcome::both:
            return 0.5 * tr + (1.0 - 2.0 * p * (1.0 - p)) * t_all / (2.0 * d);
        case CommOutcome::out_00:
            return 0.25 * ((1.0 + p) * tr + (1.0 - p + 2.0 * p * p) * t_all / d -
                           2.0 * p * (w_odd + t_odd / d));
        default:
            return 0.25 * ((1.0 + p) * tr + (1.0 - p + 2.0 * p * p) * t_all / d -
                           2.0 * p * (w_even + t_even / d));
    }
}

}  // namespace bosupp
