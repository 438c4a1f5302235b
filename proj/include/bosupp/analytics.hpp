#ifndef BOSUPP_ANALYTICS_HPP
#define BOSUPP_ANALYTICS_HPP

#include <vector>

#include "bosupp/codes.hpp"
#include "bosupp/fock.hpp"

namespace bosupp {

// Success probability of the K-ancilla residue filter, evaluated from the
// closed root-of-unity sum over the diagonal of rho.  For K = 1 the sum
// collapses to 1/2 + tr{rho Lambda^n}/(2(2G-1)) with
// Lambda = (1-2 mu G)/(2G-1); both routes are evaluated and must agree.
double psucc_closed(const Mat& rho, double mu, double G, int K);

// Limit of psucc_closed for infinitely many ancillas.  Only the
// photon-number-conserving jump pairs survive, which resums into a
// Legendre-polynomial series over the number distribution.
double psucc_asymptotic(const Mat& rho, double mu, double G);

// Convergence gap of the K-ancilla success probability.
struct DeltaPGap {
    double bound;  // leading-order estimate from the lowest uncancelled jumps
    double exact;  // psucc_closed(K) - psucc_asymptotic
};
DeltaPGap delta_p_bound(const Mat& rho, double mu, double G, int K);

// Coefficient tables of the heralded state expanded to second order in the
// loss weight mu and the gain weight z.  The unnormalized state is
// sum_{j,k} P_{j,k} z^j mu^k, its trace gives the C series, Q is the series
// inverse of C, and R = P * Q is the normalized-state table.
struct PerturbativeExpansion {
    Mat p00, p10, p01, p11, p20, p02;
    double c00, c10, c01, c11, c20, c02;
    double q00, q10, q01, q11, q20, q02;
    Mat r00, r10, r01, r11, r20, r02;
};
PerturbativeExpansion perturbative_expansion(const Mat& rho);

// Second-order normalized heralded state for a pure input.  The overlap
// tr{rho rho'} carries no linear term in mu or z.
State perturbative_state(const Mat& rho, double mu, double z);

// Haar-averaged fidelity of the heralded single-ancilla protocol under
// thermal noise of rate eta and occupation nbar, truncated at O(eta^2).
double avg_fidelity_suppressed(const CodeMoments& m, double eta, double nbar);

// Codespace moments that only the unsuppressed average needs.
struct UnsuppMoments {
    double cross_da;  // tr{C_L a+ C_L a}
    double cross_ad;  // tr{C_L a C_L a+}
    double a_abs2;    // |tr{C_L a}|^2
};
UnsuppMoments unsupp_moments(const Code& code);

// Haar-averaged fidelity without any filtering, truncated at O(eta).  The
// cross terms vanish for like-parity codes.
double avg_fidelity_unsuppressed(const CodeMoments& m, const UnsuppMoments& u,
                                 double eta, double nbar);

// Haar moment of a degree-t polynomial in a random logical qubit state:
// the symmetric-group cycle sum over 2x2 logical matrices, t in {1, 2, 3}.
cplx haar_moment_trace(int t, const std::vector<Mat>& ms);

// Average fidelity of standard qubit teleportation when both halves of the
// resource pair suffered composite damping of strength p.
double teleportation_fidelity(double p);

// Closed-form success probabilities of the remote protocol with a damped
// Bell resource, per herald outcome.
enum class CommOutcome { out_00, out_11, both };
double comm_psucc_closed(const Mat& rho, double mu, double G, double p,
                         CommOutcome outcome);

}  // namespace bosupp

#endif
