#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qzeno/errors.hpp"

namespace qzeno {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// ---- elementary matrices ----

inline Matrix pauli_x() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(1, 0), Complex(1, 0), Complex(0, 0);
    return m;
}

inline Matrix pauli_y() {
    Matrix m(2, 2);
    m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
    return m;
}

inline Matrix pauli_z() {
    Matrix m(2, 2);
    m << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(-1, 0);
    return m;
}

inline Matrix identity_matrix(Eigen::Index dim) {
    return Matrix::Identity(dim, dim);
}

// ---- structure checks ----

// Hermiticity relative to the largest entry: max|M - M^dag| <= tol * max(1, max|M|).
inline bool is_hermitian(const Matrix& m, double tol = 1e-12) {
    if (m.rows() != m.cols()) return false;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline bool is_normalized(const Vector& psi, double tol = 1e-12) {
    return std::abs(psi.norm() - 1.0) <= tol;
}

// ---- tensor products ----

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Left-to-right product: factors[0] acts on the most significant qubit.
inline Matrix kron_chain(const std::vector<Matrix>& factors) {
    if (factors.empty()) throw ArgumentError("kron_chain requires at least one factor");
    Matrix out = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) out = kron(out, factors[i]);
    return out;
}

// ---- spectral decomposition and evolution ----

struct SpectralDecomposition {
    RealVector eigenvalues;  // ascending
    Matrix eigenvectors;     // column k pairs with eigenvalues[k]

    // exp(-i H mu) psi synthesized from the eigenbasis.
    Vector evolve(double mu, const Vector& psi) const {
        Vector amps = eigenvectors.adjoint() * psi;
        for (Eigen::Index k = 0; k < amps.size(); ++k) {
            amps[k] *= std::polar(1.0, -eigenvalues[k] * mu);
        }
        return eigenvectors * amps;
    }

    Matrix reconstruct() const {
        return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.adjoint();
    }
};

inline SpectralDecomposition eig_hermitian(const Matrix& h, double tol = 1e-12) {
    if (h.rows() != h.cols()) throw ArgumentError("eig_hermitian requires a square matrix");
    if (!is_hermitian(h, tol)) throw ArgumentError("eig_hermitian requires a Hermitian matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw EvaluationError("Hermitian eigendecomposition failed to converge");
    }
    return {solver.eigenvalues(), solver.eigenvectors()};
}

// One-shot evolution; decomposes h on every call. Cache a
// SpectralDecomposition when evolving repeatedly.
inline Vector evolve(const Matrix& h, double mu, const Vector& psi) {
    if (psi.size() != h.rows()) throw ArgumentError("state dimension does not match Hamiltonian");
    return eig_hermitian(h).evolve(mu, psi);
}

// ---- projectors ----

struct ZenoSubspace {
    Matrix projector;
    Eigen::Index rank = 0;

    static ZenoSubspace from_state(const Vector& psi) {
        if (!is_normalized(psi)) throw ArgumentError("projector state must be normalized");
        ZenoSubspace s;
        s.projector = psi * psi.adjoint();
        s.rank = 1;
        return s;
    }

    static ZenoSubspace from_basis_states(Eigen::Index dim, const std::vector<Eigen::Index>& indices) {
        if (indices.empty()) throw ArgumentError("projector needs at least one basis state");
        ZenoSubspace s;
        s.projector = Matrix::Zero(dim, dim);
        for (auto i : indices) {
            if (i < 0 || i >= dim) throw ArgumentError("basis index out of range");
            if (s.projector(i, i).real() != 0.0) throw ArgumentError("duplicate basis index");
            s.projector(i, i) = Complex(1, 0);
        }
        s.rank = static_cast<Eigen::Index>(indices.size());
        return s;
    }

    bool is_rank_one() const { return rank == 1; }

    // Idempotency and hermiticity residual, for validation.
    double defect() const {
        return std::max((projector * projector - projector).cwiseAbs().maxCoeff(),
                        (projector - projector.adjoint()).cwiseAbs().maxCoeff());
    }
};

} // namespace qzeno
