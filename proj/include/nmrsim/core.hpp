/**
 * Copyright 2026 The nmrsim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dense complex linear algebra for small spin registers: kets, density
// matrices, Pauli-string expansions, Bloch vectors and state fidelities.
//
// Qubit 0 is the leftmost tensor factor and the most significant bit of a
// basis index, so |q0 q1 ... q(n-1)> has index q0*2^(n-1) + ... + q(n-1).

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "nmrsim/errors.hpp"

namespace nmrsim {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr cplx kI{0.0, 1.0};

/// Largest register handled densely.
inline constexpr int kMaxQubits = 6;

inline constexpr double kStateTolerance = 1e-10;
inline constexpr double kEigenvalueFloor = -1e-9;
inline constexpr double kPurityTolerance = 1e-9;

namespace detail {

inline int qubits_for_dimension(Eigen::Index dim) {
    if (dim < 2 || (dim & (dim - 1)) != 0) {
        throw ValidationError("dimension " + std::to_string(dim) + " is not a power of two >= 2");
    }
    const int n = std::countr_zero(static_cast<std::uint64_t>(dim));
    if (n > kMaxQubits) {
        throw ValidationError("register of " + std::to_string(n) + " qubits exceeds the dense limit of " +
                              std::to_string(kMaxQubits));
    }
    return n;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline bool is_hermitian(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return max_abs(m - m.adjoint()) <= tol;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

class Ket {
public:
    explicit Ket(Vector amplitudes) : amps_(std::move(amplitudes)) {
        n_ = detail::qubits_for_dimension(amps_.size());
        if (std::abs(amps_.squaredNorm() - 1.0) > kStateTolerance) {
            throw ValidationError("ket is not normalized (norm^2 = " + std::to_string(amps_.squaredNorm()) + ")");
        }
    }

    static Ket basis(int n, std::size_t index) {
        Vector v = Vector::Zero(Eigen::Index{1} << n);
        if (index >= static_cast<std::size_t>(v.size())) {
            throw ValidationError("basis index " + std::to_string(index) + " out of range");
        }
        v(static_cast<Eigen::Index>(index)) = 1.0;
        return Ket(std::move(v));
    }

    /// Computational basis state from a bit label such as "01".
    static Ket from_bits(std::string_view bits) {
        std::size_t index = 0;
        for (char c : bits) {
            if (c != '0' && c != '1') throw ValidationError("bad basis label '" + std::string(bits) + "'");
            index = (index << 1) | static_cast<std::size_t>(c - '0');
        }
        return basis(static_cast<int>(bits.size()), index);
    }

    int n() const { return n_; }
    Eigen::Index dim() const { return amps_.size(); }
    const Vector& amplitudes() const { return amps_; }
    cplx operator()(Eigen::Index i) const { return amps_(i); }

private:
    Vector amps_;
    int n_ = 0;
};

class DensityMatrix {
public:
    struct Unchecked {};

    /// Validates Hermiticity, unit trace and positivity.
    explicit DensityMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw ValidationError("density matrix must be square");
        n_ = detail::qubits_for_dimension(m_.rows());
        if (!detail::is_hermitian(m_, kStateTolerance)) throw ValidationError("density matrix is not Hermitian");
        const cplx tr = m_.trace();
        if (std::abs(tr - cplx{1.0, 0.0}) > kStateTolerance) {
            throw ValidationError("density matrix trace is " + std::to_string(tr.real()) + ", expected 1");
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(m_, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < kEigenvalueFloor) {
            throw ValidationError("density matrix has negative eigenvalue " +
                                  std::to_string(es.eigenvalues().minCoeff()));
        }
    }

    /// For results of trace- and positivity-preserving maps applied to a
    /// state that was already valid.
    DensityMatrix(Matrix m, Unchecked) : m_(std::move(m)) { n_ = detail::qubits_for_dimension(m_.rows()); }

    static DensityMatrix from_ket(const Ket& k) {
        return DensityMatrix(k.amplitudes() * k.amplitudes().adjoint(), Unchecked{});
    }

    static DensityMatrix maximally_mixed(int n) {
        const Eigen::Index d = Eigen::Index{1} << n;
        return DensityMatrix(Matrix::Identity(d, d) / static_cast<double>(d), Unchecked{});
    }

    int n() const { return n_; }
    Eigen::Index dim() const { return m_.rows(); }
    const Matrix& matrix() const { return m_; }
    cplx operator()(Eigen::Index r, Eigen::Index c) const { return m_(r, c); }

    double purity() const { return (m_ * m_).trace().real(); }
    bool is_pure() const { return std::abs(purity() - 1.0) <= kPurityTolerance; }

    /// Populations of the computational basis states.
    Eigen::VectorXd probabilities() const { return m_.diagonal().real(); }

    DensityMatrix evolved(const Matrix& u) const { return DensityMatrix(u * m_ * u.adjoint(), Unchecked{}); }

private:
    Matrix m_;
    int n_ = 0;
};

inline std::string basis_label(std::size_t index, int n) {
    std::string s(static_cast<std::size_t>(n), '0');
    for (int q = 0; q < n; ++q) {
        if ((index >> (n - 1 - q)) & 1U) s[static_cast<std::size_t>(q)] = '1';
    }
    return s;
}

// ---------------------------------------------------------------------------
// Tensor products and partial trace
// ---------------------------------------------------------------------------

/// Kronecker product; the first argument is the leftmost factor. Operands must
/// both be square matrices or both be column vectors.
inline Matrix tensor(const Matrix& a, const Matrix& b) {
    auto kind = [](const Matrix& m) {
        if (m.rows() == 1 && m.cols() == 1) return 0;  // scalar, combines with either
        if (m.cols() == 1) return 1;
        if (m.rows() == m.cols()) return 2;
        return -1;
    };
    const int ka = kind(a);
    const int kb = kind(b);
    if (ka < 0 || kb < 0 || (ka > 0 && kb > 0 && ka != kb)) {
        throw ValidationError("tensor: operands must both be square matrices or both be vectors");
    }
    return Eigen::kroneckerProduct(a, b).eval();
}

inline Ket tensor(const Ket& a, const Ket& b) {
    return Ket(Eigen::kroneckerProduct(a.amplitudes(), b.amplitudes()).eval());
}

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
    return DensityMatrix(Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval(), DensityMatrix::Unchecked{});
}

/// Reduced state on the qubits in `keep` (0-based, any order; the output keeps
/// them in ascending order).
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::vector<int> keep) {
    const int n = rho.n();
    if (keep.empty()) throw ValidationError("partial_trace: keep set is empty");
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    for (int q : keep) {
        if (q < 0 || q >= n) throw ValidationError("partial_trace: qubit " + std::to_string(q) + " out of range");
    }
    std::vector<int> traced;
    for (int q = 0; q < n; ++q) {
        if (!std::binary_search(keep.begin(), keep.end(), q)) traced.push_back(q);
    }
    const int nk = static_cast<int>(keep.size());
    const int nt = static_cast<int>(traced.size());
    auto compose = [n](const std::vector<int>& qubits, std::size_t bits, std::size_t base) {
        const int m = static_cast<int>(qubits.size());
        for (int i = 0; i < m; ++i) {
            if ((bits >> (m - 1 - i)) & 1U) base |= std::size_t{1} << (n - 1 - qubits[static_cast<std::size_t>(i)]);
        }
        return base;
    };
    const std::size_t dk = std::size_t{1} << nk;
    const std::size_t dt = std::size_t{1} << nt;
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dk), static_cast<Eigen::Index>(dk));
    for (std::size_t r = 0; r < dk; ++r) {
        for (std::size_t c = 0; c < dk; ++c) {
            cplx acc = 0.0;
            for (std::size_t t = 0; t < dt; ++t) {
                const std::size_t row = compose(keep, r, compose(traced, t, 0));
                const std::size_t col = compose(keep, c, compose(traced, t, 0));
                acc += rho.matrix()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
            }
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
        }
    }
    return DensityMatrix(std::move(out), DensityMatrix::Unchecked{});
}

// ---------------------------------------------------------------------------
// Pauli algebra
// ---------------------------------------------------------------------------

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline Matrix pauli_matrix(Pauli p) {
    Matrix m(2, 2);
    switch (p) {
        case Pauli::I: m << 1, 0, 0, 1; break;
        case Pauli::X: m << 0, 1, 1, 0; break;
        case Pauli::Y: m << 0, -kI, kI, 0; break;
        case Pauli::Z: m << 1, 0, 0, -1; break;
    }
    return m;
}

inline Matrix sigma_x() { return pauli_matrix(Pauli::X); }
inline Matrix sigma_y() { return pauli_matrix(Pauli::Y); }
inline Matrix sigma_z() { return pauli_matrix(Pauli::Z); }

/// Tensor product of single-qubit Pauli factors, one per qubit.
class PauliString {
public:
    PauliString() = default;
    explicit PauliString(std::vector<Pauli> factors) : factors_(std::move(factors)) {}

    /// Parses labels like "XZ" or "IIY" (also accepts '0'/'1' for I).
    static PauliString parse(std::string_view label) {
        std::vector<Pauli> f;
        f.reserve(label.size());
        for (char c : label) {
            switch (c) {
                case 'I': case 'i': case '0': f.push_back(Pauli::I); break;
                case 'X': case 'x': f.push_back(Pauli::X); break;
                case 'Y': case 'y': f.push_back(Pauli::Y); break;
                case 'Z': case 'z': f.push_back(Pauli::Z); break;
                default: throw ValidationError("bad Pauli label '" + std::string(label) + "'");
            }
        }
        return PauliString(std::move(f));
    }

    /// Inverse of index(): base-4 digits with qubit 0 most significant.
    static PauliString from_index(std::size_t index, int n) {
        std::vector<Pauli> f(static_cast<std::size_t>(n));
        for (int q = n - 1; q >= 0; --q) {
            f[static_cast<std::size_t>(q)] = static_cast<Pauli>(index & 3U);
            index >>= 2;
        }
        return PauliString(std::move(f));
    }

    static PauliString single(int n, int qubit, Pauli p) {
        std::vector<Pauli> f(static_cast<std::size_t>(n), Pauli::I);
        f.at(static_cast<std::size_t>(qubit)) = p;
        return PauliString(std::move(f));
    }

    int n() const { return static_cast<int>(factors_.size()); }
    Pauli operator[](int q) const { return factors_[static_cast<std::size_t>(q)]; }
    const std::vector<Pauli>& factors() const { return factors_; }

    std::size_t index() const {
        std::size_t idx = 0;
        for (Pauli p : factors_) idx = (idx << 2) | static_cast<std::size_t>(p);
        return idx;
    }

    std::string label() const {
        static constexpr std::array<char, 4> names{'I', 'X', 'Y', 'Z'};
        std::string s;
        for (Pauli p : factors_) s.push_back(names[static_cast<std::size_t>(p)]);
        return s;
    }

    /// Number of X or Y factors.
    int transverse_weight() const {
        return static_cast<int>(
            std::count_if(factors_.begin(), factors_.end(), [](Pauli p) { return p == Pauli::X || p == Pauli::Y; }));
    }

    int weight() const {
        return static_cast<int>(std::count_if(factors_.begin(), factors_.end(), [](Pauli p) { return p != Pauli::I; }));
    }

    std::size_t x_mask() const { return mask([](Pauli p) { return p == Pauli::X || p == Pauli::Y; }); }
    std::size_t z_mask() const { return mask([](Pauli p) { return p == Pauli::Z || p == Pauli::Y; }); }

    /// i^(#Y), the phase in P|j> = phase * (-1)^popcount(j & z_mask) |j ^ x_mask>.
    cplx y_phase() const {
        static const std::array<cplx, 4> powers{cplx{1, 0}, kI, cplx{-1, 0}, -kI};
        const auto ny = std::count(factors_.begin(), factors_.end(), Pauli::Y);
        return powers[static_cast<std::size_t>(ny % 4)];
    }

    Matrix matrix() const {
        Matrix m = Matrix::Identity(1, 1);
        for (Pauli p : factors_) m = Eigen::kroneckerProduct(m, pauli_matrix(p)).eval();
        return m;
    }

    bool operator==(const PauliString&) const = default;
    auto operator<=>(const PauliString& o) const { return index() <=> o.index(); }

private:
    template <typename Pred>
    std::size_t mask(Pred pred) const {
        std::size_t m = 0;
        const int n = this->n();
        for (int q = 0; q < n; ++q) {
            if (pred(factors_[static_cast<std::size_t>(q)])) m |= std::size_t{1} << (n - 1 - q);
        }
        return m;
    }

    std::vector<Pauli> factors_;
};

/// Real coefficients c_P = Tr(rho P) for all 4^n Pauli strings; the
/// all-identity coefficient is the trace.
class PauliCoefficients {
public:
    explicit PauliCoefficients(int n) : n_(n), values_(std::size_t{1} << (2 * n), 0.0) {
        if (n < 1 || n > kMaxQubits) throw ValidationError("PauliCoefficients: bad qubit count");
        values_[0] = 1.0;
    }

    int n() const { return n_; }
    std::size_t size() const { return values_.size(); }

    double operator[](const PauliString& p) const { return values_.at(checked(p)); }
    double& operator[](const PauliString& p) { return values_.at(checked(p)); }
    double at(std::string_view label) const { return (*this)[PauliString::parse(label)]; }
    void set(std::string_view label, double v) { (*this)[PauliString::parse(label)] = v; }

    double by_index(std::size_t i) const { return values_.at(i); }
    double& by_index(std::size_t i) { return values_.at(i); }
    const std::vector<double>& values() const { return values_; }

    double identity() const { return values_[0]; }

    double max_abs_difference(const PauliCoefficients& o) const {
        if (o.n_ != n_) throw ValidationError("PauliCoefficients: size mismatch");
        double d = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) d = std::max(d, std::abs(values_[i] - o.values_[i]));
        return d;
    }

private:
    std::size_t checked(const PauliString& p) const {
        if (p.n() != n_) throw ValidationError("Pauli string length does not match register size");
        return p.index();
    }

    int n_;
    std::vector<double> values_;
};

/// Tr(m P) for an arbitrary square operator m, in O(2^n).
inline cplx pauli_trace(const Matrix& m, const PauliString& p) {
    const std::size_t x = p.x_mask();
    const std::size_t z = p.z_mask();
    const cplx phase = p.y_phase();
    cplx acc = 0.0;
    const auto d = static_cast<std::size_t>(m.rows());
    for (std::size_t j = 0; j < d; ++j) {
        const double sign = (std::popcount(j & z) & 1) ? -1.0 : 1.0;
        acc += m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j ^ x)) * sign;
    }
    return acc * phase;
}

/// Coefficients of any Hermitian operator in the Pauli basis (no trace
/// constraint); used for deviation matrices.
inline PauliCoefficients pauli_expand_operator(const Matrix& m) {
    const int n = detail::qubits_for_dimension(m.rows());
    PauliCoefficients c(n);
    for (std::size_t i = 0; i < c.size(); ++i) {
        c.by_index(i) = pauli_trace(m, PauliString::from_index(i, n)).real();
    }
    return c;
}

inline PauliCoefficients pauli_expand(const DensityMatrix& rho) { return pauli_expand_operator(rho.matrix()); }

/// (1/2^n) * sum_P c_P P without any validity checks.
inline Matrix pauli_operator(const PauliCoefficients& c) {
    const int n = c.n();
    const auto d = std::size_t{1} << n;
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double v = c.by_index(i);
        if (v == 0.0) continue;
        const PauliString p = PauliString::from_index(i, n);
        const std::size_t x = p.x_mask();
        const std::size_t z = p.z_mask();
        const cplx phase = p.y_phase() * v;
        for (std::size_t j = 0; j < d; ++j) {
            const double sign = (std::popcount(j & z) & 1) ? -1.0 : 1.0;
            m(static_cast<Eigen::Index>(j ^ x), static_cast<Eigen::Index>(j)) += phase * sign;
        }
    }
    return m / static_cast<double>(d);
}

inline DensityMatrix pauli_reconstruct(const PauliCoefficients& c) {
    if (std::abs(c.identity() - 1.0) > kStateTolerance) {
        throw ValidationError("pauli_reconstruct: identity coefficient must be 1 (trace 1)");
    }
    return DensityMatrix(pauli_operator(c));
}

// ---------------------------------------------------------------------------
// Bloch vectors, expectations, fidelities
// ---------------------------------------------------------------------------

struct BlochVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

inline BlochVector bloch_vector(const DensityMatrix& rho) {
    if (rho.n() != 1) throw ValidationError("bloch_vector requires a single-qubit state");
    const Matrix& m = rho.matrix();
    return {2.0 * m(0, 1).real(), -2.0 * m(0, 1).imag(), (m(0, 0) - m(1, 1)).real()};
}

inline double expectation(const DensityMatrix& rho, const Matrix& op) {
    if (op.rows() != rho.dim() || op.cols() != rho.dim()) throw ValidationError("expectation: dimension mismatch");
    return (rho.matrix() * op).trace().real();
}

namespace detail {

/// Eigenvalues below the roundoff floor of a unit-trace matrix count as zero.
inline constexpr double kSpectrumFloor = 1e-13;

inline Eigen::VectorXd floored_sqrt(const Eigen::VectorXd& ev) {
    return ev.unaryExpr([](double x) { return x > kSpectrumFloor ? std::sqrt(x) : 0.0; });
}

inline Matrix hermitian_sqrt(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const Eigen::VectorXd s = floored_sqrt(es.eigenvalues());
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

inline double clamp_unit(double f) { return std::clamp(f, 0.0, 1.0); }

}  // namespace detail

inline double state_fidelity(const Ket& a, const Ket& b) {
    if (a.dim() != b.dim()) throw ValidationError("state_fidelity: dimension mismatch");
    return detail::clamp_unit(std::norm(a.amplitudes().dot(b.amplitudes())));
}

/// <a|rho|a>.
inline double state_fidelity(const Ket& a, const DensityMatrix& rho) {
    if (a.dim() != rho.dim()) throw ValidationError("state_fidelity: dimension mismatch");
    return detail::clamp_unit((a.amplitudes().adjoint() * rho.matrix() * a.amplitudes())(0, 0).real());
}

inline double state_fidelity(const DensityMatrix& rho, const Ket& a) { return state_fidelity(a, rho); }

/// (Tr sqrt(sqrt(s) r sqrt(s)))^2, symmetric in its arguments. A pure
/// argument is reduced to its ket, which avoids square roots of a
/// rank-deficient matrix.
inline double state_fidelity(const DensityMatrix& s, const DensityMatrix& r) {
    if (s.dim() != r.dim()) throw ValidationError("state_fidelity: dimension mismatch");
    for (const DensityMatrix* p : {&s, &r}) {
        if (!p->is_pure()) continue;
        Eigen::SelfAdjointEigenSolver<Matrix> es(p->matrix());
        const Ket k(es.eigenvectors().col(es.eigenvalues().size() - 1));
        return state_fidelity(k, p == &s ? r : s);
    }
    const Matrix root = detail::hermitian_sqrt(s.matrix());
    Matrix inner = root * r.matrix() * root;
    inner = 0.5 * (inner + inner.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(inner, Eigen::EigenvaluesOnly);
    const double tr = detail::floored_sqrt(es.eigenvalues()).sum();
    return detail::clamp_unit(tr * tr);
}

// ---------------------------------------------------------------------------
// Seeded random generators
// ---------------------------------------------------------------------------

inline Vector random_gaussian_vector(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = cplx{g(rng), g(rng)};
    return v;
}

inline Ket random_ket(int n, Rng& rng) {
    Vector v = random_gaussian_vector(Eigen::Index{1} << n, rng);
    return Ket(v / v.norm());
}

/// Random mixed state of the given rank (Ginibre construction); rank 0 means
/// full rank.
inline DensityMatrix random_density(int n, Rng& rng, int rank = 0) {
    const Eigen::Index d = Eigen::Index{1} << n;
    const Eigen::Index k = rank <= 0 ? d : std::min<Eigen::Index>(rank, d);
    Matrix g(d, k);
    for (Eigen::Index c = 0; c < k; ++c) g.col(c) = random_gaussian_vector(d, rng);
    Matrix m = g * g.adjoint();
    m /= m.trace().real();
    m = 0.5 * (m + m.adjoint());
    return DensityMatrix(std::move(m), DensityMatrix::Unchecked{});
}

/// Haar-random unitary of dimension d.
inline Matrix random_unitary(Eigen::Index d, Rng& rng) {
    Matrix g(d, d);
    for (Eigen::Index c = 0; c < d; ++c) g.col(c) = random_gaussian_vector(d, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(d, d);
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < d; ++i) {
        const cplx diag = r(i, i);
        const double mag = std::abs(diag);
        if (mag > 0.0) q.col(i) *= diag / mag;
    }
    return q;
}

inline bool is_unitary(const Matrix& u, double tol = 1e-10) {
    if (u.rows() != u.cols()) return false;
    return detail::max_abs(u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())) <= tol;
}

// ---------------------------------------------------------------------------
// JSON: {"n": int, "re": [[...]], "im": [[...]]}, row-major
// ---------------------------------------------------------------------------

inline nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json rr = nlohmann::json::array();
        nlohmann::json ri = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            rr.push_back(m(r, c).real());
            ri.push_back(m(r, c).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ri));
    }
    return {{"re", std::move(re)}, {"im", std::move(im)}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("re")) throw ValidationError("matrix JSON needs a 're' field");
    const auto& re = j.at("re");
    const bool has_im = j.contains("im");
    const auto rows = static_cast<Eigen::Index>(re.size());
    if (rows == 0) throw ValidationError("matrix JSON is empty");
    const auto cols = static_cast<Eigen::Index>(re.at(0).size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = re.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(row.size()) != cols) throw ValidationError("matrix JSON rows are ragged");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double a = row.at(static_cast<std::size_t>(c)).get<double>();
            const double b = has_im ? j.at("im").at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>() : 0.0;
            m(r, c) = cplx{a, b};
        }
    }
    return m;
}

inline nlohmann::json to_json(const DensityMatrix& rho) {
    nlohmann::json j = matrix_to_json(rho.matrix());
    j["n"] = rho.n();
    return j;
}

inline DensityMatrix density_from_json(const nlohmann::json& j) {
    try {
        Matrix m = matrix_from_json(j);
        DensityMatrix rho(std::move(m));
        if (j.contains("n") && j.at("n").get<int>() != rho.n()) {
            throw ValidationError("density JSON: field 'n' does not match matrix size");
        }
        return rho;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("density JSON: ") + e.what());
    }
}

}  // namespace nmrsim
