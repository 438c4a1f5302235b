#include "bosupp/fock.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace bosupp {

FockSpace::FockSpace(int dim_, int guard_) : dim(dim_), guard(guard_) {
    if (dim < 2) throw std::invalid_argument("fock dim must be at least 2");
    if (guard < 0 || guard >= dim)
        throw std::invalid_argument("guard must lie in [0, dim)");
}

int CompositeSpace::ancilla_total() const {
    int p = 1;
    for (int d : ancillas) p *= d;
    return p;
}

int CompositeSpace::total() const { return fock.dim * ancilla_total(); }

std::vector<int> CompositeSpace::dims() const {
    std::vector<int> d{fock.dim};
    d.insert(d.end(), ancillas.begin(), ancillas.end());
    return d;
}

Mat State::normalized() const {
    if (weight <= 0.0)
        throw std::runtime_error("cannot normalize a zero-weight state");
    return rho / weight;
}

State make_state(const Mat& rho) {
    if (rho.rows() != rho.cols())
        throw std::invalid_argument("density matrix must be square");
    const cplx tr = rho.trace();
    const double scale = std::max(1.0, std::abs(tr));
    if (std::abs(tr.imag()) > 1e-12 * scale)
        throw std::invalid_argument("density matrix trace is not real");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("density matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        throw std::invalid_argument("density matrix has a negative eigenvalue");
    return State{rho, tr.real()};
}

State pure_state(const Vec& psi) {
    const double w = psi.squaredNorm();
    if (w <= 0.0) throw std::invalid_argument("pure state vector is zero");
    return State{psi * psi.adjoint(), w};
}

Mat lower(const FockSpace& space) {
    Mat a = Mat::Zero(space.dim, space.dim);
    for (int n = 1; n < space.dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

Mat raise(const FockSpace& space) { return lower(space).adjoint(); }

Mat number_op(const FockSpace& space) {
    return number_function(space, [](int n) { return cplx(double(n), 0.0); });
}

Mat number_function(const FockSpace& space,
                    const std::function<cplx(int)>& f) {
    Mat m = Mat::Zero(space.dim, space.dim);
    for (int n = 0; n < space.dim; ++n) m(n, n) = f(n);
    return m;
}

Mat phase_rotation(const FockSpace& space, double theta) {
    return number_function(
        space, [theta](int n) { return std::polar(1.0, theta * n); });
}

Mat parity_op(const FockSpace& space) {
    return number_function(
        space, [](int n) { return cplx(n % 2 == 0 ? 1.0 : -1.0, 0.0); });
}

Mat expm_antihermitian(const Mat& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("expm needs a square matrix");
    if ((m + m.adjoint()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("expm argument is not anti-Hermitian");
    // m = -iH with H Hermitian, so exp(m) = V exp(-i lambda) V^dagger.
    Eigen::SelfAdjointEigenSolver<Mat> es(cplx(0.0, 1.0) * m);
    Vec phases(es.eigenvalues().size());
    for (Eigen::Index k = 0; k < phases.size(); ++k)
        phases(k) = std::polar(1.0, -es.eigenvalues()(k));
    return es.eigenvectors() * phases.asDiagonal() *
           es.eigenvectors().adjoint();
}

Mat displacement(const FockSpace& space, cplx beta) {
    const Mat a = lower(space);
    return expm_antihermitian(beta * a.adjoint() - std::conj(beta) * a);
}

Mat squeeze(const FockSpace& space, double r, double phi) {
    const Mat a = lower(space);
    const cplx xi = std::polar(r, phi);
    const Mat a2 = a * a;
    return expm_antihermitian(0.5 * (std::conj(xi) * a2 -
                                     xi * a2.adjoint()));
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

Mat tensor(const std::vector<Mat>& ops) {
    if (ops.empty()) throw std::invalid_argument("tensor of nothing");
    Mat out = ops.front();
    for (std::size_t i = 1; i < ops.size(); ++i) out = kron(out, ops[i]);
    return out;
}

Vec kron_vec(const Vec& a, const Vec& b) {
    Vec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i)
        out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

Vec tensor_vec(const std::vector<Vec>& states) {
    if (states.empty()) throw std::invalid_argument("tensor of nothing");
    Vec out = states.front();
    for (std::size_t i = 1; i < states.size(); ++i)
        out = kron_vec(out, states[i]);
    return out;
}

Mat partial_trace(const Mat& rho, const std::vector<int>& dims,
                  const std::vector<int>& keep) {
    const int nf = int(dims.size());
    std::vector<long> stride(nf);
    long total = 1;
    for (int i = nf - 1; i >= 0; --i) {
        stride[i] = total;
        total *= dims[i];
    }
    if (rho.rows() != total || rho.cols() != total)
        throw std::invalid_argument("partial_trace: dims do not match matrix");
    std::vector<char> is_kept(nf, 0);
    int prev = -1;
    for (int k : keep) {
        if (k < 0 || k >= nf || k <= prev)
            throw std::invalid_argument(
                "partial_trace: keep list must be ascending factor indices");
        is_kept[k] = 1;
        prev = k;
    }
    std::vector<int> traced;
    for (int i = 0; i < nf; ++i)
        if (!is_kept[i]) traced.push_back(i);

    auto offsets = [&](const std::vector<int>& factors) {
        long n = 1;
        for (int f : factors) n *= dims[f];
        std::vector<long> off(n);
        for (long idx = 0; idx < n; ++idx) {
            long rem = idx, o = 0;
            for (int j = int(factors.size()) - 1; j >= 0; --j) {
                const int d = dims[factors[j]];
                o += (rem % d) * stride[factors[j]];
                rem /= d;
            }
            off[idx] = o;
        }
        return off;
    };
    const std::vector<long> koff = offsets(keep);
    const std::vector<long> toff = offsets(traced);

    Mat out = Mat::Zero(long(koff.size()), long(koff.size()));
    for (long t : toff)
        for (std::size_t c = 0; c < koff.size(); ++c)
            for (std::size_t r = 0; r < koff.size(); ++r)
                out(r, c) += rho(koff[r] + t, koff[c] + t);
    return out;
}

double fidelity(const Vec& reference, const Mat& rho) {
    if (rho.rows() != reference.size() || rho.cols() != reference.size())
        throw std::invalid_argument("fidelity: size mismatch");
    return (reference.adjoint() * rho * reference)(0, 0).real();
}

double trace_distance(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("trace_distance: size mismatch");
    Eigen::JacobiSVD<Mat> svd(a - b);
    return 0.5 * svd.singularValues().sum();
}

double leakage_weight(const Mat& rho, const FockSpace& space) {
    if (rho.rows() != space.dim)
        throw std::invalid_argument("leakage_weight: wrong matrix size");
    double w = 0.0;
    for (int n = space.guarded_max() + 1; n < space.dim; ++n)
        w += rho(n, n).real();
    return w;
}

void check_leakage(const Mat& rho, const FockSpace& space, double tol) {
    const double w = leakage_weight(rho, space);
    if (w > tol) {
        std::ostringstream msg;
        msg << "guard band holds weight " << w
            << ", truncated space is too small";
        throw std::runtime_error(msg.str());
    }
}

Mat ordered_power_identity(double lambda, Ordering ordering,
                           const FockSpace& space) {
    if (ordering == Ordering::antinormal && std::abs(lambda) >= 1.0)
        throw std::invalid_argument(
            "antinormal ordered sum diverges for |lambda| >= 1");
    return number_function(space, [=](int n) {
        if (ordering == Ordering::normal)
            return cplx(std::pow(1.0 + lambda, n), 0.0);
        return cplx(std::pow(1.0 - lambda, -(n + 1)), 0.0);
    });
}

bool single_diagonal_offset(const Mat& op, int& offset) {
    bool found = false;
    int s = 0;
    for (Eigen::Index c = 0; c < op.cols(); ++c) {
        for (Eigen::Index r = 0; r < op.rows(); ++r) {
            if (op(r, c) == cplx(0.0, 0.0)) continue;
            if (!found) {
                s = int(r - c);
                found = true;
            } else if (int(r - c) != s) {
                return false;
            }
        }
    }
    offset = s;
    return true;
}

Mat apply_left_on_factor(const Mat& op, const Mat& m,
                         const std::vector<int>& dims, int which) {
    if (which < 0 || which >= int(dims.size()))
        throw std::invalid_argument("factor index out of range");
    long outer = 1, inner = 1;
    for (int i = 0; i < which; ++i) outer *= dims[i];
    for (std::size_t i = which + 1; i < dims.size(); ++i) inner *= dims[i];
    const int d = dims[which];
    if (op.rows() != d || op.cols() != d)
        throw std::invalid_argument("operator does not match factor dim");
    if (m.rows() != outer * d * inner)
        throw std::invalid_argument("matrix does not match factor layout");

    const long block = long(d) * inner;

    // Ladder-product operators carry a single nonzero diagonal; applying one
    // reduces to a scaled column shift, which matters at large Fock cutoffs.
    int shift = 0;
    if (d >= 16 && single_diagonal_offset(op, shift)) {
        const int top = std::max(shift, 0);
        const int bot = std::max(-shift, 0);
        const int nc = d - top - bot;
        Vec w(std::max(nc, 0));
        for (int k = 0; k < nc; ++k) w(k) = op(top + k, bot + k);
        Mat out = Mat::Zero(m.rows(), m.cols());
        if (nc > 0) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const cplx* src = m.data() + c * m.rows();
                cplx* dst = out.data() + c * m.rows();
                for (long o = 0; o < outer; ++o) {
                    Eigen::Map<const Mat> vin(src + o * block, inner, d);
                    Eigen::Map<Mat> vout(dst + o * block, inner, d);
                    vout.middleCols(top, nc).noalias() =
                        vin.middleCols(bot, nc) * w.asDiagonal();
                }
            }
        }
        return out;
    }

    // Column-major layout: within one column, the factor index j strides by
    // `inner`, so the slice for fixed outer index o is an inner-by-d map and
    // left multiplication by op becomes a right multiplication by op^T.
    const Mat op_t = op.transpose();
    Mat out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const cplx* src = m.data() + c * m.rows();
        cplx* dst = out.data() + c * m.rows();
        for (long o = 0; o < outer; ++o) {
            Eigen::Map<const Mat> vin(src + o * block, inner, d);
            Eigen::Map<Mat> vout(dst + o * block, inner, d);
            vout.noalias() = vin * op_t;
        }
    }
    return out;
}

Mat sandwich_on_factor(const Mat& op, const Mat& m,
                       const std::vector<int>& dims, int which) {
    const Mat half = apply_left_on_factor(op, m, dims, which);
    return apply_left_on_factor(op, half.adjoint(), dims, which).adjoint();
}

}  // namespace bosupp
