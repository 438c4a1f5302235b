#ifndef BOSUPP_CHANNELS_HPP
#define BOSUPP_CHANNELS_HPP

#include <string>
#include <vector>

#include "bosupp/fock.hpp"

namespace bosupp {

// Shared Frobenius-norm floor below which Kraus operators are dropped.
// Composition products and the analytic suppressed-channel construction
// must prune identically or their operator sets drift apart.
inline constexpr double kKrausPruneNorm = 1e-8;

// Loss/gain parameter pair with the derived quantities always recomputed.
struct CvNoiseParams {
    double mu;
    double G;

    double x() const { return (1.0 - mu) / G; }
    double y() const { return mu * G / (1.0 - mu); }
    double z() const { return 1.0 - 1.0 / G; }
};

CvNoiseParams cv_params(double mu, double G);
// Thermal-loss parameterization G = 1 + eta*nbar, mu = 1 - (1-eta)/G.
CvNoiseParams thermal_params(double eta, double nbar);
// Gaussian displacement noise of variance eta/(1-eta): G = 1/(1-eta), mu = eta.
CvNoiseParams gdn_params(double eta);

// One Kraus operator with its jump bookkeeping: `loss` counts a-jumps and
// `gain` counts a^+-jumps, so composed operators know their net residue.
struct KrausOp {
    std::string label;
    int loss;
    int gain;
    Mat m;
};

struct KrausChannel {
    int dim;
    std::vector<KrausOp> ops;
    // Completeness deficit max|I - sum K^+K| restricted to the guarded
    // subspace at construction time (whole space for finite DV channels).
    double deficit;
};

// Photon loss A_l = sqrt(mu^l/l!) (1-mu)^{n/2} a^l, depth chosen so the
// guarded-subspace deficit is at most 1e-10.
KrausChannel loss_channel(double mu, const FockSpace& space);

// Quantum-limited amplifier B_k = sqrt((1-1/G)^k/(k!G)) a^{+k} G^{-n/2}.
// The raised rows fall off the truncation, so the deficit has a floor set
// by the guard band; depth grows until 1e-8 or until no term helps, and
// anything above 1e-6 is refused.
KrausChannel amp_channel(double G, const FockSpace& space);

// amp(G) after loss(mu) with the thermal parameterization; Kraus labels
// keep the (l, k) pairing.
KrausChannel thermal_channel(double eta, double nbar, const FockSpace& space);

// Gaussian displacement noise as the same amp-after-loss sandwich.
KrausChannel gdn_channel(double eta, const FockSpace& space);

enum class QubitDampKind { amplitude, phase, composite };
KrausChannel qubit_damping(double p, QubitDampKind kind);

enum class QutritDampKind { cascaded_ad, mid_pd, composite };
KrausChannel qutrit_damping(double p, QutritDampKind kind);

KrausChannel depolarizing(double eta_prime);

KrausChannel identity_channel(int dim);

// c2 after c1; labels pair up, jump counts add, and the reported deficit
// is the linear (upper-bound) sum of the parts.
KrausChannel compose(const KrausChannel& c2, const KrausChannel& c1);

// Plain sum_K K m K^+ without state validation, usable on dyads.
Mat apply_raw(const KrausChannel& channel, const Mat& m);
State apply(const KrausChannel& channel, const State& state);

// Channel on one tensor factor, identities elsewhere.
Mat apply_on_factor_raw(const KrausChannel& channel, const Mat& m,
                        const std::vector<int>& dims, int which);
State apply_on_factor(const KrausChannel& channel, const State& state,
                      const std::vector<int>& dims, int which);

}  // namespace bosupp

#endif
