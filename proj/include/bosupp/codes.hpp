#ifndef BOSUPP_CODES_HPP
#define BOSUPP_CODES_HPP

#include <string>

#include "bosupp/fock.hpp"

namespace bosupp {

// Bosonic qubit: two orthonormal codewords in a truncated Fock space.
struct Code {
    FockSpace space;
    Vec zero;
    Vec one;
    std::string name;
};

// Rotation-symmetric cat qubit of order n (n even): |0_L> collects the Fock
// amplitudes of a coherent state on residues 0 mod n, |1_L> on n/2 mod n.
Code cat_code(int n, double alpha, const FockSpace& space);

// Binomial qubit with spacing n and kappa+1 peaks: |0_L> on even binomial
// indices, |1_L> on odd ones.
Code binomial_code(int n, int kappa, const FockSpace& space);

// Square-lattice approximate GKP qubit with envelope parameter delta.
Code gkp_code(double delta, const FockSpace& space);

// Cat qubit squeezed by `db` decibels, re-orthonormalized after truncation.
Code squeezed_cat(int n, double alpha, double db, const FockSpace& space);

// Normalized codespace identity C_L = (|0_L><0_L| + |1_L><1_L|)/2, trace 1.
Mat codespace_identity(const Code& code);

// Moments of C_L that feed the fidelity estimates: first and second number
// moments, the two-photon amplitude, and the dyadic sums
// g(Y) = tr{C_L Y C_L Y^+} + |tr{C_L Y}|^2 for Y = n and Y = a^2.
struct CodeMoments {
    double n_mean;
    double n2;
    cplx a2;
    double g_n;
    double g_a2;
};
CodeMoments moments(const Code& code);

enum class ParityKind { like_even, like_odd, opposite, none };

// Photon-number parity structure of the two codewords plus the largest m
// such that every supported Fock index is a multiple of m (0 when m <= 1).
struct ParityClass {
    ParityKind kind;
    int rotation_order;
};
ParityClass parity_class(const Code& code);

// Pure encoded state c0 |0_L> + c1 |1_L>; the coefficients must already be
// normalized to 1 within 1e-12.
State logical_state(const Code& code, cplx c0, cplx c1);

// Haar-random logical state, deterministic in the seed.
State haar_sample(const Code& code, unsigned long seed);

}  // namespace bosupp

#endif
