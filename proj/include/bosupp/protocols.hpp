#ifndef BOSUPP_PROTOCOLS_HPP
#define BOSUPP_PROTOCOLS_HPP

#include <functional>
#include <vector>

#include "bosupp/channels.hpp"
#include "bosupp/codes.hpp"
#include "bosupp/fock.hpp"

namespace bosupp {

enum class ProtocolVariant { cf_single, cf_multi, pqp_condrot, qutrit, comm, none };

// Interferometer layout: K ancillas, one conditional rotation angle per
// ancilla, a shared Pauli axis, and the two parity-shortcut switches.
struct ProtocolSpec {
    ProtocolVariant variant = ProtocolVariant::cf_multi;
    int K = 1;
    std::vector<double> thetas;
    Eigen::Vector3d axis = Eigen::Vector3d(1.0, 0.0, 0.0);
    // Replace the first conditional rotation by the local rotation
    // e^{i theta_1 n} on the mode (valid for codes of even support).
    bool local_first_rotation = false;
    // Start (and herald) the first ancilla in (axis . sigma)|0> instead of
    // |0> (valid for codes of odd support).
    bool flipped_ancilla_init = false;
};

// Default layout: theta_j = pi/2^j on the x axis.
ProtocolSpec cf_spec(int K);

struct HeraldedResult {
    State unnormalized;
    double p_succ;
    State normalized;
    // Overlap tr(rho_in rho_out) with the (pre-noise) input.
    double fidelity;
};

// Joint unitary e^{i theta n (axis.sigma)} on fock (x) qubit, built per Fock
// level in the axis eigenbasis.
Mat conditional_rotation(double theta, const Eigen::Vector3d& axis, const FockSpace& space);

// Noise attached to each entangling gate rather than to the idle window.
struct GateNoise {
    KrausChannel cv;
    KrausChannel dv;
};

// Full joint simulation: rotations in, CV noise on the mode and DV noise on
// each ancilla, rotations out, every ancilla heralded. `per_gate` optionally
// adds GateNoise after each conditional rotation.
HeraldedResult suppress_cf(const State& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                           const ProtocolSpec& spec, const FockSpace& space,
                           const GateNoise* per_gate = nullptr);
// Same evolution on an arbitrary matrix (dyads allowed), heralded output,
// no state validation.
Mat suppress_cf_raw(const Mat& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                    const ProtocolSpec& spec, const FockSpace& space,
                    const GateNoise* per_gate = nullptr);
// Joint state after the full evolution but before any herald projection.
Mat cf_joint_output(const Mat& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                    const ProtocolSpec& spec, const FockSpace& space);

// Analytic filtration path: sums the suppressed Kraus terms with
// (l - k) = 0 mod 2^K directly, no joint space.
HeraldedResult suppress_analytic(const State& rho_B, double mu, double G, int K,
                                 const FockSpace& space);
Mat suppress_analytic_raw(const Mat& rho_B, double mu, double G, int K, const FockSpace& space);

// Rewrites `spec` with the applicable shortcut for the code's parity class.
ProtocolSpec parity_shortcut(const Code& code, const ProtocolSpec& spec);

// One interferometer layer: conditional displacements along P, Q, P (real,
// imaginary, real amplitudes) followed by a conditional rotation.
struct PqpLayer {
    double b1 = 0.0;
    double q = 0.0;
    double b2 = 0.0;
    double theta = 0.0;
};

HeraldedResult pqp_condrot(const State& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                           const std::vector<PqpLayer>& layers, const FockSpace& space);
Mat pqp_condrot_raw(const Mat& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                    const std::vector<PqpLayer>& layers, const FockSpace& space);

struct PqpOptResult {
    std::vector<PqpLayer> layers;
    double avg_fidelity;
    bool converged;
    int evaluations;
};

// Derivative-free simplex search (5 seeded restarts) maximizing the exact
// Haar-averaged heralded fidelity over the code, noiseless ancillas.
PqpOptResult optimize_pqp(const Code& code, const KrausChannel& cv, int L, unsigned seed);

// Suppression on the mode of a mode (x) X system, heralded on the protocol
// ancillas only; X rides along untouched.
HeraldedResult protect_hybrid(const State& rho_BX, int x_dim, const KrausChannel& cv,
                              const ProtocolSpec& spec, const FockSpace& space);
Mat protect_hybrid_raw(const Mat& rho_BX, int x_dim, const KrausChannel& cv,
                       const ProtocolSpec& spec, const FockSpace& space);

enum class CommHerald { accept_00, accept_00_11 };

// Remote variant with a damped Bell pair as the ancilla resource: sender
// rotation before the channel, receiver inverse after, herald on |00>
// (optionally also |11>).
HeraldedResult comm_protocol(const State& rho_B, const KrausChannel& cv, double bell_p,
                             CommHerald herald, const FockSpace& space);
Mat comm_protocol_raw(const Mat& rho_B, const KrausChannel& cv, double bell_p,
                      CommHerald herald, const FockSpace& space);

// Qutrit-ancilla variant with composite damping of strength p on the
// ancilla; heralds on |j><j|.
HeraldedResult qutrit_protocol(const State& rho_B, const KrausChannel& cv, double p,
                               int herald_j, const FockSpace& space);
// Joint mode (x) qutrit state before the herald projection.
Mat qutrit_joint_output(const Mat& rho_B, const KrausChannel& cv, double p,
                        const FockSpace& space);

// Reference cost model for the gate-count comparison: an ideal identity
// circuit that pays `n_gates` applications of per-gate noise on the mode.
Mat bypass_reference(const Mat& rho_B, const GateNoise& noise, int n_gates,
                     const FockSpace& space);

struct HaarAverages {
    double f_tilde;   // E[<psi| N[psi psi+] |psi>]
    double p;         // E[tr N[psi psi+]]
    double fidelity;  // ratio of the two
};

// Exact Haar average over logical states of `code`, from the three dyad
// evolutions |0><0|, |1><1|, |0><1| under `runner` (an unnormalized
// heralded map on the mode).
HaarAverages haar_averaged_fidelity(const Code& code,
                                    const std::function<Mat(const Mat&)>& runner);

}  // namespace bosupp

#endif
