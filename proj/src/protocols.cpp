#include "bosupp/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace bosupp {

namespace {

constexpr double kHeraldFloor = 1e-12;

void require_unit_axis(const Eigen::Vector3d& axis) {
    if (std::abs(axis.norm() - 1.0) > 1e-12) {
        throw std::invalid_argument("protocol axis must be a unit vector");
    }
}

Mat pauli_dot(const Eigen::Vector3d& a) {
    const cplx i(0.0, 1.0);
    Mat s(2, 2);
    s(0, 0) = a.z();
    s(0, 1) = a.x() - i * a.y();
    s(1, 0) = a.x() + i * a.y();
    s(1, 1) = -a.z();
    return s;
}

// e^{i theta n (axis.sigma)} restricted to the ancilla.
Mat rot2(double theta, int n, const Mat& ns) {
    return std::cos(theta * n) * Mat::Identity(2, 2) +
           cplx(0.0, 1.0) * std::sin(theta * n) * ns;
}

// W m W+ for W block diagonal over the slow (Fock) index.
Mat conjugate_blocks(const Mat& m, const std::vector<Mat>& w) {
    const int nb = int(w.size());
    const int a = int(w[0].rows());
    Mat out(m.rows(), m.cols());
    for (int r = 0; r < nb; ++r) {
        for (int c = 0; c < nb; ++c) {
            out.block(r * a, c * a, a, a) =
                w[r] * m.block(r * a, c * a, a, a) * w[c].adjoint();
        }
    }
    return out;
}

// Multiply block (r, c) by phase^(r - c): conjugation by a Fock-diagonal
// phase operator.
void fock_phase_inplace(Mat& m, int inner, double theta) {
    const int nb = int(m.rows()) / inner;
    for (int r = 0; r < nb; ++r) {
        for (int c = 0; c < nb; ++c) {
            if (r == c) continue;
            m.block(r * inner, c * inner, inner, inner) *=
                std::exp(cplx(0.0, theta * (r - c)));
        }
    }
}

// <h| m |h> over the trailing factor of size h.size().
Mat herald_inner(const Mat& m, const Vec& h) {
    const int d = int(h.size());
    const int keep = int(m.rows()) / d;
    Mat out(keep, keep);
    for (int r = 0; r < keep; ++r) {
        for (int c = 0; c < keep; ++c) {
            out(r, c) = (h.adjoint() * m.block(r * d, c * d, d, d) * h).value();
        }
    }
    return out;
}

void validate_cf_spec(const ProtocolSpec& spec) {
    require_unit_axis(spec.axis);
    if (spec.K < 1) throw std::invalid_argument("suppression needs at least one ancilla");
    if (int(spec.thetas.size()) != spec.K) {
        throw std::invalid_argument("spec.thetas must hold one angle per ancilla");
    }
    if (spec.local_first_rotation && spec.flipped_ancilla_init) {
        throw std::invalid_argument("the two parity shortcuts are mutually exclusive");
    }
}

// Blocks of the conditional rotation on ancilla j (1-based) inside an inner
// space x_dim (x) 2^K, per Fock level.
std::vector<Mat> gate_blocks(int j, int K, int x_dim, double theta, const Mat& ns, int n_fock,
                             bool adjoint) {
    const int left = x_dim * (1 << (j - 1));
    const int right = 1 << (K - j);
    const Mat il = Mat::Identity(left, left);
    const Mat ir = Mat::Identity(right, right);
    std::vector<Mat> w(n_fock);
    for (int n = 0; n < n_fock; ++n) {
        Mat r = rot2(adjoint ? -theta : theta, n, ns);
        w[n] = kron(il, kron(r, ir));
    }
    return w;
}

struct CfLayout {
    std::vector<int> dims;  // {fock, (x), 2 ... 2}
    int x_dim;
    int anc_offset;  // factor index of ancilla 1
};

CfLayout cf_layout(const FockSpace& space, int x_dim, int K) {
    CfLayout lay;
    lay.x_dim = x_dim;
    lay.dims.push_back(space.dim);
    if (x_dim > 1) lay.dims.push_back(x_dim);
    for (int j = 0; j < K; ++j) lay.dims.push_back(2);
    lay.anc_offset = (x_dim > 1) ? 2 : 1;
    return lay;
}

// The common interferometer: rotations in, window noise, rotations out.
// Returns the joint state before any herald projection.
Mat cf_evolve(const Mat& rho_in, int x_dim, const KrausChannel& cv, const KrausChannel& dv,
              const ProtocolSpec& spec, const FockSpace& space, const GateNoise* per_gate) {
    validate_cf_spec(spec);
    const int K = spec.K;
    const CfLayout lay = cf_layout(space, x_dim, K);
    const int inner = x_dim * (1 << K);
    const Mat ns = pauli_dot(spec.axis);

    Vec a0 = Vec::Zero(2);
    a0(0) = 1.0;
    std::vector<Vec> inits(K, a0);
    if (spec.flipped_ancilla_init) inits[0] = ns * a0;
    const Vec anc = tensor_vec(inits);

    Mat joint = kron(rho_in, Mat(anc * anc.adjoint()));

    auto gate_noise = [&](int j) {
        if (!per_gate) return;
        joint = apply_on_factor_raw(per_gate->cv, joint, lay.dims, 0);
        joint = apply_on_factor_raw(per_gate->dv, joint, lay.dims, lay.anc_offset + j - 1);
    };

    for (int j = 1; j <= K; ++j) {
        if (j == 1 && spec.local_first_rotation) {
            // substituted local rotation on the mode, not an entangling gate
            fock_phase_inplace(joint, inner, spec.thetas[0]);
            continue;
        }
        joint = conjugate_blocks(joint, gate_blocks(j, K, x_dim, spec.thetas[j - 1], ns,
                                                    space.dim, false));
        gate_noise(j);
    }

    joint = apply_on_factor_raw(cv, joint, lay.dims, 0);
    for (int j = 1; j <= K; ++j) {
        joint = apply_on_factor_raw(dv, joint, lay.dims, lay.anc_offset + j - 1);
    }

    for (int j = K; j >= 1; --j) {
        joint = conjugate_blocks(joint, gate_blocks(j, K, x_dim, spec.thetas[j - 1], ns,
                                                    space.dim, true));
        gate_noise(j);
    }
    return joint;
}

Vec cf_herald_vector(const ProtocolSpec& spec) {
    const Mat ns = pauli_dot(spec.axis);
    Vec a0 = Vec::Zero(2);
    a0(0) = 1.0;
    std::vector<Vec> hs(spec.K, a0);
    if (spec.flipped_ancilla_init) hs[0] = ns * a0;
    return tensor_vec(hs);
}

double herald_weight(const Mat& out) {
    const cplx tr = out.trace();
    if (std::abs(tr.imag()) > 1e-12 * std::max(1.0, std::abs(tr.real()))) {
        throw std::runtime_error("herald weight has a non-real trace");
    }
    return tr.real();
}

// Package an unnormalized heralded output; `marginal_dims` describes the
// output factors for the guard-band check ({dim} when it is the bare mode).
HeraldedResult finalize(const Mat& rho_in, const Mat& out, const FockSpace& space,
                        const std::vector<int>& marginal_dims) {
    const double p = herald_weight(out);
    if (p < kHeraldFloor) {
        throw std::runtime_error("herald starved: success probability below 1e-12");
    }
    HeraldedResult res;
    res.unnormalized = State{out, p};
    res.p_succ = p;
    res.normalized = State{out / p, 1.0};
    Mat fock_part = res.normalized.rho;
    if (marginal_dims.size() > 1) fock_part = partial_trace(fock_part, marginal_dims, {0});
    check_leakage(fock_part, space);
    res.fidelity = (rho_in * res.normalized.rho).trace().real();
    return res;
}

void validate_input_state(const State& s, const FockSpace& space,
                          const std::vector<int>& marginal_dims) {
    if (std::abs(s.rho.trace().real() - 1.0) > 1e-8) {
        throw std::invalid_argument("input state must have unit trace");
    }
    Mat fock_part = s.rho;
    if (marginal_dims.size() > 1) fock_part = partial_trace(fock_part, marginal_dims, {0});
    check_leakage(fock_part, space);
}

Mat qutrit_us_block(int n) {
    const double s = 1.0 / std::sqrt(2.0);
    const double ph = (n % 2 == 0) ? 1.0 : -1.0;  // e^{-i pi n}
    Mat u = Mat::Zero(3, 3);
    u(0, 0) = s;
    u(0, 1) = s;
    u(1, 2) = ph;
    u(2, 0) = ph * s;
    u(2, 1) = -ph * s;
    return u;
}

// Conditional displacement exp((axis.sigma) (x) (beta a+ - beta* a)).
Mat conditional_displacement(cplx beta, const Eigen::Vector3d& axis, const FockSpace& space) {
    const Mat ns = pauli_dot(axis);
    const Mat pp = 0.5 * (Mat::Identity(2, 2) + ns);
    const Mat pm = 0.5 * (Mat::Identity(2, 2) - ns);
    return kron(displacement(space, beta), pp) + kron(displacement(space, -beta), pm);
}

Mat pqp_unitary(const std::vector<PqpLayer>& layers, const Eigen::Vector3d& axis,
                const FockSpace& space) {
    const int total = 2 * space.dim;
    Mat u = Mat::Identity(total, total);
    for (const auto& layer : layers) {
        Mat step = conditional_displacement(cplx(layer.b1, 0.0), axis, space);
        step = conditional_displacement(cplx(0.0, layer.q), axis, space) * step;
        step = conditional_displacement(cplx(layer.b2, 0.0), axis, space) * step;
        step = conditional_rotation(layer.theta, axis, space) * step;
        u = step * u;
    }
    return u;
}

// Simplex minimizer (reflection 1.0, contraction 0.5, expansion 2.0).
struct SimplexOutcome {
    std::vector<double> x;
    double value;
    bool converged;
    int evaluations;
};

SimplexOutcome nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                           const std::vector<double>& start, double step, int max_iter,
                           double ftol) {
    const double alpha = 1.0, beta = 0.5, gamma = 2.0;
    const int n = int(start.size());
    std::vector<std::vector<double>> pts(n + 1, start);
    std::vector<double> vals(n + 1);
    int evals = 0;
    for (int i = 1; i <= n; ++i) pts[i][i - 1] += step;
    for (int i = 0; i <= n; ++i) {
        vals[i] = f(pts[i]);
        ++evals;
    }

    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        int lo = 0, hi = 0;
        for (int i = 1; i <= n; ++i) {
            if (vals[i] < vals[lo]) lo = i;
            if (vals[i] > vals[hi]) hi = i;
        }
        if (std::abs(vals[hi] - vals[lo]) <= ftol * (std::abs(vals[lo]) + ftol)) {
            converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (int i = 0; i <= n; ++i) {
            if (i == hi) continue;
            for (int d = 0; d < n; ++d) centroid[d] += pts[i][d];
        }
        for (int d = 0; d < n; ++d) centroid[d] /= n;

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (int d = 0; d < n; ++d) x[d] = centroid[d] + t * (pts[hi][d] - centroid[d]);
            return x;
        };

        std::vector<double> refl = blend(-alpha);
        double frefl = f(refl);
        ++evals;
        if (frefl < vals[lo]) {
            std::vector<double> expa = blend(-gamma);
            double fexpa = f(expa);
            ++evals;
            if (fexpa < frefl) {
                pts[hi] = expa;
                vals[hi] = fexpa;
            } else {
                pts[hi] = refl;
                vals[hi] = frefl;
            }
        } else if (frefl < vals[hi]) {
            pts[hi] = refl;
            vals[hi] = frefl;
        } else {
            std::vector<double> contr = blend(beta);
            double fcontr = f(contr);
            ++evals;
            if (fcontr < vals[hi]) {
                pts[hi] = contr;
                vals[hi] = fcontr;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == lo) continue;
                    for (int d = 0; d < n; ++d) pts[i][d] = 0.5 * (pts[i][d] + pts[lo][d]);
                    vals[i] = f(pts[i]);
                    ++evals;
                }
            }
        }
    }

    int lo = 0;
    for (int i = 1; i <= n; ++i) {
        if (vals[i] < vals[lo]) lo = i;
    }
    return {pts[lo], vals[lo], converged, evals};
}

}  // namespace

ProtocolSpec cf_spec(int K) {
    if (K < 1) throw std::invalid_argument("cf_spec: K must be >= 1");
    ProtocolSpec spec;
    spec.variant = (K == 1) ? ProtocolVariant::cf_single : ProtocolVariant::cf_multi;
    spec.K = K;
    spec.thetas.resize(K);
    for (int j = 1; j <= K; ++j) spec.thetas[j - 1] = M_PI / double(1 << j);
    return spec;
}

Mat conditional_rotation(double theta, const Eigen::Vector3d& axis, const FockSpace& space) {
    require_unit_axis(axis);
    const Mat ns = pauli_dot(axis);
    Mat u = Mat::Zero(2 * space.dim, 2 * space.dim);
    for (int n = 0; n < space.dim; ++n) u.block(2 * n, 2 * n, 2, 2) = rot2(theta, n, ns);
    return u;
}

Mat cf_joint_output(const Mat& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                    const ProtocolSpec& spec, const FockSpace& space) {
    return cf_evolve(rho_B, 1, cv, dv, spec, space, nullptr);
}

Mat suppress_cf_raw(const Mat& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                    const ProtocolSpec& spec, const FockSpace& space,
                    const GateNoise* per_gate) {
    const Mat joint = cf_evolve(rho_B, 1, cv, dv, spec, space, per_gate);
    return herald_inner(joint, cf_herald_vector(spec));
}

HeraldedResult suppress_cf(const State& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                           const ProtocolSpec& spec, const FockSpace& space,
                           const GateNoise* per_gate) {
    validate_input_state(rho_B, space, {space.dim});
    const Mat out = suppress_cf_raw(rho_B.rho, cv, dv, spec, space, per_gate);
    return finalize(rho_B.rho, out, space, {space.dim});
}

Mat suppress_analytic_raw(const Mat& rho_B, double mu, double G, int K, const FockSpace& space) {
    const CvNoiseParams par = cv_params(mu, G);
    if (K < 1) throw std::invalid_argument("suppress_analytic: K must be >= 1");
    const int dim = space.dim;
    const int residue = 1 << K;

    // Jump depths come from the channel factories so that both simulation
    // routes truncate and prune identically.
    int l_max = 0, k_max = 0;
    for (const auto& op : loss_channel(mu, space).ops) l_max = std::max(l_max, op.loss);
    for (const auto& op : amp_channel(G, space).ops) k_max = std::max(k_max, op.gain);

    const double x = par.x();
    const double log_x = std::log(x);
    const double log_gain = (G > 1.0) ? std::log((G - 1.0) / (1.0 - mu)) : 0.0;
    const double log_mu = (mu > 0.0) ? std::log(mu) : 0.0;

    Mat out = Mat::Zero(dim, dim);
    for (int l = 0; l <= l_max; ++l) {
        if (l > 0 && mu == 0.0) break;
        for (int k = 0; k <= k_max; ++k) {
            if (k > 0 && G == 1.0) break;
            if (((l - k) % residue + residue) % residue != 0) continue;
            const double log_c = 0.5 * (k * log_gain + l * log_mu - std::lgamma(k + 1.0) -
                                        std::lgamma(l + 1.0) - std::log(G));
            Mat op = Mat::Zero(dim, dim);
            for (int n = l; n < dim; ++n) {
                const int m = n - l + k;
                if (m >= dim) continue;
                const double logv =
                    log_c + 0.5 * (m * log_x + std::lgamma(m + 1.0) -
                                   2.0 * std::lgamma(n - l + 1.0) + std::lgamma(n + 1.0));
                op(m, n) = std::exp(logv);
            }
            if (op.norm() < kKrausPruneNorm) continue;
            out.noalias() += op * rho_B * op.adjoint();
        }
    }
    return out;
}

HeraldedResult suppress_analytic(const State& rho_B, double mu, double G, int K,
                                 const FockSpace& space) {
    validate_input_state(rho_B, space, {space.dim});
    const Mat out = suppress_analytic_raw(rho_B.rho, mu, G, K, space);
    return finalize(rho_B.rho, out, space, {space.dim});
}

ProtocolSpec parity_shortcut(const Code& code, const ProtocolSpec& spec) {
    const ParityClass pc = parity_class(code);
    ProtocolSpec out = spec;
    switch (pc.kind) {
        case ParityKind::like_even:
            out.local_first_rotation = true;
            return out;
        case ParityKind::like_odd:
            out.flipped_ancilla_init = true;
            return out;
        default:
            throw std::invalid_argument(
                "parity_shortcut: codewords must share a definite photon-number parity");
    }
}

Mat pqp_condrot_raw(const Mat& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                    const std::vector<PqpLayer>& layers, const FockSpace& space) {
    if (layers.empty()) {
        return suppress_cf_raw(rho_B, cv, dv, cf_spec(1), space);
    }
    const Eigen::Vector3d axis(1.0, 0.0, 0.0);
    const Mat u = pqp_unitary(layers, axis, space);
    Vec a0 = Vec::Zero(2);
    a0(0) = 1.0;
    Mat joint = kron(rho_B, Mat(a0 * a0.adjoint()));
    joint = u * joint * u.adjoint();
    const std::vector<int> dims{space.dim, 2};
    joint = apply_on_factor_raw(cv, joint, dims, 0);
    joint = apply_on_factor_raw(dv, joint, dims, 1);
    joint = u.adjoint() * joint * u;
    return herald_inner(joint, a0);
}

HeraldedResult pqp_condrot(const State& rho_B, const KrausChannel& cv, const KrausChannel& dv,
                           const std::vector<PqpLayer>& layers, const FockSpace& space) {
    validate_input_state(rho_B, space, {space.dim});
    const Mat out = pqp_condrot_raw(rho_B.rho, cv, dv, layers, space);
    return finalize(rho_B.rho, out, space, {space.dim});
}

PqpOptResult optimize_pqp(const Code& code, const KrausChannel& cv, int L, unsigned seed) {
    if (L < 0) throw std::invalid_argument("optimize_pqp: L must be >= 0");
    const FockSpace& space = code.space;
    const Eigen::Vector3d axis(1.0, 0.0, 0.0);

    // Channel lifted to the joint space once; the objective then works with
    // plain dense products.
    std::vector<Mat> lifted;
    const Mat i2 = Mat::Identity(2, 2);
    for (const auto& op : cv.ops) lifted.push_back(kron(op.m, i2));

    Vec a0 = Vec::Zero(2);
    a0(0) = 1.0;
    const Mat anc = a0 * a0.adjoint();
    const Mat d00 = code.zero * code.zero.adjoint();
    const Mat d11 = code.one * code.one.adjoint();
    const Mat d01 = code.zero * code.one.adjoint();

    int total_evals = 0;
    auto run_dyad = [&](const Mat& u, const Mat& dyad) {
        Mat joint = kron(dyad, anc);
        joint = u * joint * u.adjoint();
        Mat noisy = Mat::Zero(joint.rows(), joint.cols());
        for (const auto& k : lifted) noisy.noalias() += k * joint * k.adjoint();
        noisy = u.adjoint() * noisy * u;
        return herald_inner(noisy, a0);
    };
    auto haar_fidelity = [&](const std::vector<PqpLayer>& layers) {
        const Mat u = pqp_unitary(layers, axis, space);
        const Mat e00 = run_dyad(u, d00), e11 = run_dyad(u, d11), e01 = run_dyad(u, d01);
        auto ip = [&](const Vec& a, const Mat& m, const Vec& b) {
            return (a.adjoint() * m * b).value();
        };
        const cplx like =
            ip(code.zero, e00, code.zero) + ip(code.one, e00, code.one) +
            ip(code.zero, e11, code.zero) + ip(code.one, e11, code.one);
        const cplx cross = ip(code.zero, e00, code.zero) + ip(code.one, e11, code.one) +
                           ip(code.zero, e01, code.one) + std::conj(ip(code.zero, e01, code.one));
        const double f = (like + cross).real() / 6.0;
        const double p = (e00.trace() + e11.trace()).real() / 2.0;
        return f / p;
    };

    auto clamp_params = [&](std::vector<double> x) {
        for (int layer = 0; layer < L; ++layer) {
            for (int d = 0; d < 3; ++d) {
                x[4 * layer + d] = std::clamp(x[4 * layer + d], -2.0, 2.0);
            }
            x[4 * layer + 3] = std::clamp(x[4 * layer + 3], 0.0, M_PI);
        }
        return x;
    };
    auto to_layers = [&](const std::vector<double>& x) {
        std::vector<PqpLayer> layers(L);
        for (int layer = 0; layer < L; ++layer) {
            layers[layer] = {x[4 * layer], x[4 * layer + 1], x[4 * layer + 2], x[4 * layer + 3]};
        }
        return layers;
    };
    auto objective = [&](const std::vector<double>& x) {
        ++total_evals;
        return -haar_fidelity(to_layers(clamp_params(x)));
    };

    if (L == 0) {
        std::vector<PqpLayer> none;
        PqpOptResult res;
        res.layers = none;
        // CF limit: theta = pi/2 single rotation, evaluated once for the record
        res.avg_fidelity = haar_fidelity({PqpLayer{0.0, 0.0, 0.0, M_PI / 2.0}});
        res.converged = true;
        res.evaluations = 1;
        return res;
    }

    // Restart 0 starts from the plain conditional-rotation point so the
    // optimum can never fall below the CF protocol.
    std::vector<double> cf_point(4 * L, 0.0);
    cf_point[3] = M_PI / 2.0;

    PqpOptResult best;
    best.avg_fidelity = -1.0;
    best.converged = false;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), ang(0.0, M_PI);
    for (int restart = 0; restart < 5; ++restart) {
        std::vector<double> start = cf_point;
        double step = 0.1;
        if (restart > 0) {
            for (int layer = 0; layer < L; ++layer) {
                start[4 * layer] = amp(rng);
                start[4 * layer + 1] = amp(rng);
                start[4 * layer + 2] = amp(rng);
                start[4 * layer + 3] = ang(rng);
            }
            step = 0.3;
        }
        const SimplexOutcome sol = nelder_mead(objective, start, step, 200, 1e-10);
        if (-sol.value > best.avg_fidelity) {
            best.avg_fidelity = -sol.value;
            best.layers = to_layers(clamp_params(sol.x));
        }
        best.converged = best.converged || sol.converged;
    }
    best.evaluations = total_evals;
    return best;
}

Mat protect_hybrid_raw(const Mat& rho_BX, int x_dim, const KrausChannel& cv,
                       const ProtocolSpec& spec, const FockSpace& space) {
    if (x_dim < 2) throw std::invalid_argument("protect_hybrid: companion system needs dim >= 2");
    const KrausChannel quiet = identity_channel(2);
    const Mat joint = cf_evolve(rho_BX, x_dim, cv, quiet, spec, space, nullptr);
    return herald_inner(joint, cf_herald_vector(spec));
}

HeraldedResult protect_hybrid(const State& rho_BX, int x_dim, const KrausChannel& cv,
                              const ProtocolSpec& spec, const FockSpace& space) {
    const std::vector<int> marginal{space.dim, x_dim};
    validate_input_state(rho_BX, space, marginal);
    const Mat out = protect_hybrid_raw(rho_BX.rho, x_dim, cv, spec, space);
    return finalize(rho_BX.rho, out, space, marginal);
}

Mat comm_protocol_raw(const Mat& rho_B, const KrausChannel& cv, double bell_p,
                      CommHerald herald, const FockSpace& space) {
    if (!(bell_p >= 0.0 && bell_p <= 1.0)) {
        throw std::invalid_argument("comm_protocol: bell_p must lie in [0, 1]");
    }
    const double p = bell_p;
    Mat bell = Mat::Zero(4, 4);
    bell(0, 0) = 1.0 + p * p;
    bell(3, 3) = (1.0 - p) * (1.0 - p);
    bell(1, 1) = bell(2, 2) = p * (1.0 - p);
    bell(0, 3) = bell(3, 0) = (1.0 - p) * (1.0 - p);
    bell *= 0.5;

    const Eigen::Vector3d axis(1.0, 0.0, 0.0);
    const Mat ns = pauli_dot(axis);
    const Mat i2 = Mat::Identity(2, 2);
    const int n_fock = space.dim;

    Mat joint = kron(rho_B, bell);
    std::vector<Mat> sender(n_fock), receiver(n_fock);
    for (int n = 0; n < n_fock; ++n) {
        sender[n] = kron(rot2(M_PI / 2.0, n, ns), i2);
        receiver[n] = kron(i2, rot2(-M_PI / 2.0, n, ns));
    }
    joint = conjugate_blocks(joint, sender);
    joint = apply_on_factor_raw(cv, joint, {n_fock, 2, 2}, 0);
    joint = conjugate_blocks(joint, receiver);

    Vec h00 = Vec::Zero(4), h11 = Vec::Zero(4);
    h00(0) = 1.0;
    h11(3) = 1.0;
    Mat out = herald_inner(joint, h00);
    if (herald == CommHerald::accept_00_11) out += herald_inner(joint, h11);
    return out;
}

HeraldedResult comm_protocol(const State& rho_B, const KrausChannel& cv, double bell_p,
                             CommHerald herald, const FockSpace& space) {
    validate_input_state(rho_B, space, {space.dim});
    const Mat out = comm_protocol_raw(rho_B.rho, cv, bell_p, herald, space);
    return finalize(rho_B.rho, out, space, {space.dim});
}

Mat qutrit_joint_output(const Mat& rho_B, const KrausChannel& cv, double p,
                        const FockSpace& space) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("qutrit_protocol: p must lie in [0, 1]");
    const int n_fock = space.dim;
    Vec q0 = Vec::Zero(3);
    q0(0) = 1.0;
    Mat joint = kron(rho_B, Mat(q0 * q0.adjoint()));

    std::vector<Mat> pre(n_fock), post(n_fock);
    for (int n = 0; n < n_fock; ++n) {
        pre[n] = qutrit_us_block(n);
        post[n] = pre[n].adjoint();
    }
    joint = conjugate_blocks(joint, pre);
    joint = apply_on_factor_raw(cv, joint, {n_fock, 3}, 0);
    joint = apply_on_factor_raw(qutrit_damping(p, QutritDampKind::composite), joint,
                                {n_fock, 3}, 1);
    joint = conjugate_blocks(joint, post);
    return joint;
}

HeraldedResult qutrit_protocol(const State& rho_B, const KrausChannel& cv, double p,
                               int herald_j, const FockSpace& space) {
    if (herald_j < 0 || herald_j > 2) {
        throw std::invalid_argument("qutrit_protocol: herald outcome must be 0, 1 or 2");
    }
    validate_input_state(rho_B, space, {space.dim});
    const Mat joint = qutrit_joint_output(rho_B.rho, cv, p, space);
    Vec h = Vec::Zero(3);
    h(herald_j) = 1.0;
    return finalize(rho_B.rho, herald_inner(joint, h), space, {space.dim});
}

Mat bypass_reference(const Mat& rho_B, const GateNoise& noise, int n_gates,
                     const FockSpace& space) {
    if (n_gates < 0) throw std::invalid_argument("bypass_reference: gate count must be >= 0");
    if (noise.cv.dim != space.dim) {
        throw std::invalid_argument("bypass_reference: gate noise dimension mismatch");
    }
    // The reference circuit's ideal action is the identity and its ancillas
    // never entangle with the mode, so only the per-gate mode noise lands.
    Mat out = rho_B;
    for (int g = 0; g < n_gates; ++g) out = apply_raw(noise.cv, out);
    return out;
}

HaarAverages haar_averaged_fidelity(const Code& code,
                                    const std::function<Mat(const Mat&)>& runner) {
    const Vec& z = code.zero;
    const Vec& o = code.one;
    const Mat e00 = runner(Mat(z * z.adjoint()));
    const Mat e11 = runner(Mat(o * o.adjoint()));
    const Mat e01 = runner(Mat(z * o.adjoint()));
    auto ip = [](const Vec& a, const Mat& m, const Vec& b) {
        return (a.adjoint() * m * b).value();
    };
    const cplx like = ip(z, e00, z) + ip(o, e00, o) + ip(z, e11, z) + ip(o, e11, o);
    const cplx cross =
        ip(z, e00, z) + ip(o, e11, o) + ip(z, e01, o) + std::conj(ip(z, e01, o));
    HaarAverages avg;
    avg.f_tilde = (like + cross).real() / 6.0;
    avg.p = (e00.trace() + e11.trace()).real() / 2.0;
    avg.fidelity = avg.f_tilde / avg.p;
    return avg;
}

}  // namespace bosupp
