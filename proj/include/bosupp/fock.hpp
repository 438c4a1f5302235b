#ifndef BOSUPP_FOCK_HPP
#define BOSUPP_FOCK_HPP

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace bosupp {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Truncated single-mode Fock space.  The top `guard` levels act as a buffer:
// physical content is supposed to live at n <= guarded_max(), and anything
// that accumulates above that line is counted as leakage.
struct FockSpace {
    int dim;
    int guard;

    explicit FockSpace(int dim = 40, int guard = 8);

    int nmax() const { return dim - 1; }
    int guarded_max() const { return dim - 1 - guard; }
};

// One bosonic mode followed by zero or more finite ancilla factors.
// Flat basis index of |n, i_1, ..., i_K> is ((n*d_1 + i_1)*d_2 + ...)*...,
// i.e. the mode is the slowest index.
struct CompositeSpace {
    FockSpace fock;
    std::vector<int> ancillas;

    int ancilla_total() const;
    int total() const;
    std::vector<int> dims() const;  // {fock.dim, d_1, ..., d_K}
};

// Density operator together with the trace it was born with.  Heralded
// branches keep rho unnormalized so that probabilities can be read off;
// normalized() divides the weight back out.
struct State {
    Mat rho;
    double weight;

    Mat normalized() const;
};

State make_state(const Mat& rho);
State pure_state(const Vec& psi);

Mat lower(const FockSpace& space);
Mat raise(const FockSpace& space);
Mat number_op(const FockSpace& space);

// Diagonal operator f(n) in the number basis.
Mat number_function(const FockSpace& space, const std::function<cplx(int)>& f);
Mat phase_rotation(const FockSpace& space, double theta);  // e^{i theta n}
Mat parity_op(const FockSpace& space);

Mat displacement(const FockSpace& space, cplx beta);
Mat squeeze(const FockSpace& space, double r, double phi = 0.0);

// exp(M) for anti-Hermitian M, via the eigendecomposition of iM.
Mat expm_antihermitian(const Mat& m);

Mat kron(const Mat& a, const Mat& b);
Mat tensor(const std::vector<Mat>& ops);
Vec kron_vec(const Vec& a, const Vec& b);
Vec tensor_vec(const std::vector<Vec>& states);

// Trace out every factor not listed in `keep` (indices into `dims`,
// ascending).  Kept factors stay in their original order.
Mat partial_trace(const Mat& rho, const std::vector<int>& dims,
                  const std::vector<int>& keep);

// <psi| rho |psi> for a pure reference.
double fidelity(const Vec& reference, const Mat& rho);

// (1/2) ||a - b||_1 via singular values.
double trace_distance(const Mat& a, const Mat& b);

// Population sitting above the guard line, sum of rho_nn for n > guarded_max.
double leakage_weight(const Mat& rho, const FockSpace& space);
void check_leakage(const Mat& rho, const FockSpace& space, double tol = 1e-6);

enum class Ordering { normal, antinormal };

// Closed form of the ordered exponential sum_M lambda^M/M! (a+)^M a^M (normal)
// or a^M (a+)^M (antinormal) as a diagonal operator: (1+lambda)^n for normal
// ordering, (1-lambda)^{-(n+1)} for antinormal (requires |lambda| < 1).
Mat ordered_power_identity(double lambda, Ordering ordering,
                           const FockSpace& space);

// True when every nonzero entry of op sits on the single diagonal
// row - col == offset. Ladder-operator products (loss/gain Kraus terms) all
// have this shape, which admits an O(d^2) application path.
bool single_diagonal_offset(const Mat& op, int& offset);

// out = (I_outer ⊗ op ⊗ I_inner) * m where the factor layout of the row
// index is given by `dims` and op acts on factor `which`.
Mat apply_left_on_factor(const Mat& op, const Mat& m,
                         const std::vector<int>& dims, int which);

// op * m * op^dagger with op acting on one factor only.
Mat sandwich_on_factor(const Mat& op, const Mat& m,
                       const std::vector<int>& dims, int which);

}  // namespace bosupp

#endif
