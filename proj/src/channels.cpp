#include "bosupp/channels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bosupp {

namespace {

double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

std::string format_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// max|I - sum K^+K| over the top-left block of size `probe`.
double completeness_deficit(const std::vector<KrausOp>& ops, int dim, int probe) {
    Mat acc = Mat::Identity(dim, dim);
    for (const auto& op : ops) acc -= op.m.adjoint() * op.m;
    return acc.topLeftCorner(probe, probe).cwiseAbs().maxCoeff();
}

}  // namespace

CvNoiseParams cv_params(double mu, double G) {
    if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("cv_params: mu must lie in [0, 1)");
    if (!(G >= 1.0)) throw std::invalid_argument("cv_params: G must be >= 1");
    if (mu * G > 1.0) {
        throw std::invalid_argument("cv_params: mu*G = " + format_double(mu * G) +
                                    " exceeds 1, channel is unphysical");
    }
    return CvNoiseParams{mu, G};
}

CvNoiseParams thermal_params(double eta, double nbar) {
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("thermal_params: eta must lie in [0, 1)");
    if (!(nbar >= 0.0)) throw std::invalid_argument("thermal_params: nbar must be >= 0");
    const double G = 1.0 + eta * nbar;
    return cv_params(1.0 - (1.0 - eta) / G, G);
}

CvNoiseParams gdn_params(double eta) {
    if (!(eta >= 0.0 && eta < 1.0)) throw std::invalid_argument("gdn_params: eta must lie in [0, 1)");
    return cv_params(eta, 1.0 / (1.0 - eta));
}

KrausChannel identity_channel(int dim) {
    if (dim < 1) throw std::invalid_argument("identity_channel: dim must be positive");
    KrausChannel ch{dim, {}, 0.0};
    ch.ops.push_back({"id", 0, 0, Mat::Identity(dim, dim)});
    return ch;
}

KrausChannel loss_channel(double mu, const FockSpace& space) {
    if (!(mu >= 0.0 && mu < 1.0)) throw std::invalid_argument("loss_channel: mu must lie in [0, 1)");
    const int dim = space.dim;
    if (mu == 0.0) {
        KrausChannel ch = identity_channel(dim);
        ch.ops[0].label = "l=0";
        return ch;
    }

    // The diagonal of A_l^+A_l is the binomial pmf in l, so the guarded
    // deficit after keeping l <= L is the binomial tail at n = guarded_max.
    const int gmax = space.guarded_max();
    int l_max = 0;
    {
        double pmf = std::pow(1.0 - mu, gmax);
        double tail = 1.0 - pmf;
        while (tail > 1e-10 && l_max < space.nmax()) {
            pmf *= (mu / (1.0 - mu)) * double(gmax - l_max) / double(l_max + 1);
            ++l_max;
            tail -= pmf;
        }
    }

    KrausChannel ch{dim, {}, 0.0};
    const double log_mu = std::log(mu);
    const double log_keep = std::log1p(-mu);
    for (int l = 0; l <= l_max; ++l) {
        Mat m = Mat::Zero(dim, dim);
        for (int n = l; n < dim; ++n) {
            const double logv = 0.5 * (log_choose(n, l) + l * log_mu + (n - l) * log_keep);
            m(n - l, n) = std::exp(logv);
        }
        if (m.norm() < kKrausPruneNorm) continue;
        ch.ops.push_back({"l=" + std::to_string(l), l, 0, std::move(m)});
    }
    ch.deficit = completeness_deficit(ch.ops, dim, gmax + 1);
    return ch;
}

KrausChannel amp_channel(double G, const FockSpace& space) {
    if (!(G >= 1.0)) throw std::invalid_argument("amp_channel: G must be >= 1");
    const int dim = space.dim;
    if (G == 1.0) {
        KrausChannel ch = identity_channel(dim);
        ch.ops[0].label = "k=0";
        return ch;
    }

    // Diagonal of B_k^+B_k is the negative-binomial pmf, but rows raised
    // past the truncation edge are lost, so each level n only ever sees
    // the terms with n + k <= nmax. Grow the depth until the worst
    // guarded level meets the target or nothing more can help.
    const int gmax = space.guarded_max();
    const int nmax = space.nmax();
    const double r = 1.0 - 1.0 / G;
    int k_max = 0;
    double deficit_est = 0.0;
    {
        std::vector<double> pmf(gmax + 1), tail(gmax + 1, 1.0);
        for (int n = 0; n <= gmax; ++n) pmf[n] = std::exp(-(n + 1.0) * std::log(G));
        int k = 0;
        while (true) {
            for (int n = 0; n <= gmax; ++n) {
                if (n + k <= nmax) tail[n] -= pmf[n];
                pmf[n] *= r * double(n + k + 1) / double(k + 1);
            }
            double worst = 0.0;
            for (int n = 0; n <= gmax; ++n) worst = std::max(worst, tail[n]);
            deficit_est = worst;
            if (worst <= 1e-8 || k >= nmax) break;
            ++k;
        }
        k_max = k;
    }
    if (deficit_est > 1e-6) {
        throw std::runtime_error("amp_channel: truncation deficit " + format_double(deficit_est) +
                                 " exceeds 1e-6; enlarge the space or guard band");
    }

    KrausChannel ch{dim, {}, 0.0};
    const double log_r = std::log(r);
    const double log_G = std::log(G);
    for (int k = 0; k <= k_max; ++k) {
        Mat m = Mat::Zero(dim, dim);
        for (int n = 0; n + k < dim; ++n) {
            const double logv = 0.5 * (log_choose(n + k, k) + k * log_r - (n + 1.0) * log_G);
            m(n + k, n) = std::exp(logv);
        }
        if (m.norm() < kKrausPruneNorm) continue;
        ch.ops.push_back({"k=" + std::to_string(k), 0, k, std::move(m)});
    }
    ch.deficit = completeness_deficit(ch.ops, dim, gmax + 1);
    return ch;
}

KrausChannel thermal_channel(double eta, double nbar, const FockSpace& space) {
    const CvNoiseParams p = thermal_params(eta, nbar);
    return compose(amp_channel(p.G, space), loss_channel(p.mu, space));
}

KrausChannel gdn_channel(double eta, const FockSpace& space) {
    const CvNoiseParams p = gdn_params(eta);
    return compose(amp_channel(p.G, space), loss_channel(p.mu, space));
}

KrausChannel qubit_damping(double p, QubitDampKind kind) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("qubit_damping: p must lie in [0, 1]");
    const double keep = std::sqrt(1.0 - p);
    Mat k0 = Mat::Zero(2, 2);
    k0(0, 0) = 1.0;
    k0(1, 1) = keep;
    KrausChannel amp{2, {}, 0.0};
    amp.ops.push_back({"K0", 0, 0, k0});
    {
        Mat k1 = Mat::Zero(2, 2);
        k1(0, 1) = std::sqrt(p);
        amp.ops.push_back({"K1", 0, 0, k1});
    }
    KrausChannel phase{2, {}, 0.0};
    phase.ops.push_back({"K0", 0, 0, k0});
    {
        Mat k1 = Mat::Zero(2, 2);
        k1(1, 1) = std::sqrt(p);
        phase.ops.push_back({"K1", 0, 0, k1});
    }
    amp.deficit = completeness_deficit(amp.ops, 2, 2);
    phase.deficit = completeness_deficit(phase.ops, 2, 2);
    switch (kind) {
        case QubitDampKind::amplitude:
            return amp;
        case QubitDampKind::phase:
            return phase;
        case QubitDampKind::composite:
            return compose(phase, amp);
    }
    throw std::invalid_argument("qubit_damping: unknown kind");
}

KrausChannel qutrit_damping(double p, QutritDampKind kind) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("qutrit_damping: p must lie in [0, 1]");
    const double keep = std::sqrt(1.0 - p);
    const double jump = std::sqrt(p);

    KrausChannel ad{3, {}, 0.0};
    {
        Mat k0 = Mat::Zero(3, 3);
        k0(0, 0) = 1.0;
        k0(1, 1) = keep;
        k0(2, 2) = keep;
        Mat k1 = Mat::Zero(3, 3);
        k1(1, 2) = jump;
        Mat k2 = Mat::Zero(3, 3);
        k2(0, 1) = jump;
        ad.ops.push_back({"K0", 0, 0, k0});
        ad.ops.push_back({"K1", 0, 0, k1});
        ad.ops.push_back({"K2", 0, 0, k2});
    }
    KrausChannel pd{3, {}, 0.0};
    {
        Mat k0 = Mat::Zero(3, 3);
        k0(0, 0) = 1.0;
        k0(1, 1) = keep;
        k0(2, 2) = 1.0;
        Mat k1 = Mat::Zero(3, 3);
        k1(1, 1) = jump;
        pd.ops.push_back({"K0", 0, 0, k0});
        pd.ops.push_back({"K1", 0, 0, k1});
    }
    ad.deficit = completeness_deficit(ad.ops, 3, 3);
    pd.deficit = completeness_deficit(pd.ops, 3, 3);
    switch (kind) {
        case QutritDampKind::cascaded_ad:
            return ad;
        case QutritDampKind::mid_pd:
            return pd;
        case QutritDampKind::composite:
            return compose(pd, ad);
    }
    throw std::invalid_argument("qutrit_damping: unknown kind");
}

KrausChannel depolarizing(double eta_prime) {
    if (!(eta_prime >= 0.0 && eta_prime <= 1.0)) {
        throw std::invalid_argument("depolarizing: eta_prime must lie in [0, 1]");
    }
    const cplx i(0.0, 1.0);
    Mat sx = Mat::Zero(2, 2), sy = Mat::Zero(2, 2), sz = Mat::Zero(2, 2);
    sx(0, 1) = sx(1, 0) = 1.0;
    sy(0, 1) = -i;
    sy(1, 0) = i;
    sz(0, 0) = 1.0;
    sz(1, 1) = -1.0;

    KrausChannel ch{2, {}, 0.0};
    const double w = std::sqrt(eta_prime / 3.0);
    ch.ops.push_back({"I", 0, 0, std::sqrt(1.0 - eta_prime) * Mat::Identity(2, 2)});
    if (w > 0.0) {
        ch.ops.push_back({"X", 0, 0, w * sx});
        ch.ops.push_back({"Y", 0, 0, w * sy});
        ch.ops.push_back({"Z", 0, 0, w * sz});
    }
    ch.deficit = completeness_deficit(ch.ops, 2, 2);
    return ch;
}

KrausChannel compose(const KrausChannel& c2, const KrausChannel& c1) {
    if (c1.dim != c2.dim) throw std::invalid_argument("compose: channel dimensions differ");
    KrausChannel out{c1.dim, {}, c1.deficit + c2.deficit};
    for (const auto& b : c2.ops) {
        for (const auto& a : c1.ops) {
            Mat m = b.m * a.m;
            if (m.norm() < kKrausPruneNorm) continue;
            out.ops.push_back({b.label + "," + a.label, b.loss + a.loss, b.gain + a.gain,
                               std::move(m)});
        }
    }
    return out;
}

Mat apply_raw(const KrausChannel& channel, const Mat& m) {
    if (m.rows() != channel.dim || m.cols() != channel.dim) {
        throw std::invalid_argument("apply_raw: state dimension does not match channel");
    }
    const int d = channel.dim;
    Mat out = Mat::Zero(d, d);
    for (const auto& op : channel.ops) {
        int shift = 0;
        if (d >= 16 && single_diagonal_offset(op.m, shift)) {
            // single-diagonal ladder product: row/column scale plus shift
            const int top = std::max(shift, 0);
            const int bot = std::max(-shift, 0);
            const int nc = d - top - bot;
            if (nc <= 0) continue;
            Vec w(nc);
            for (int k = 0; k < nc; ++k) w(k) = op.m(top + k, bot + k);
            const Vec wc = w.conjugate();
            out.block(top, top, nc, nc) +=
                w.asDiagonal() * m.block(bot, bot, nc, nc) * wc.asDiagonal();
        } else {
            out.noalias() += op.m * m * op.m.adjoint();
        }
    }
    return out;
}

State apply(const KrausChannel& channel, const State& state) {
    State out;
    out.rho = apply_raw(channel, state.rho);
    out.weight = out.rho.trace().real();
    return out;
}

Mat apply_on_factor_raw(const KrausChannel& channel, const Mat& m,
                        const std::vector<int>& dims, int which) {
    if (which < 0 || which >= int(dims.size())) {
        throw std::invalid_argument("apply_on_factor_raw: factor index out of range");
    }
    if (dims[which] != channel.dim) {
        throw std::invalid_argument("apply_on_factor_raw: factor dimension does not match channel");
    }
    Mat out = Mat::Zero(m.rows(), m.cols());
    for (const auto& op : channel.ops) out += sandwich_on_factor(op.m, m, dims, which);
    return out;
}

State apply_on_factor(const KrausChannel& channel, const State& state,
                      const std::vector<int>& dims, int which) {
    State out;
    out.rho = apply_on_factor_raw(channel, state.rho, dims, which);
    out.weight = out.rho.trace().real();
    return out;
}

}  // namespace bosupp
