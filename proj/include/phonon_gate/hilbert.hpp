#pragma once

// Truncated atom (x) ion (x) phonon Hilbert space.
//
// Basis ordering is atom-major: flat = (atom * 2 + ion) * cutoff + phonon,
// with atom levels (|0>, |1>, |r>) -> (0, 1, 2), ion levels (|0>, |1>) and
// phonon Fock numbers 0..cutoff-1.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <string>

namespace phonon_gate {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline constexpr int kAtomDim = 3;
inline constexpr int kIonDim = 2;

enum class Subsystem { Atom, Ion, Phonon };

namespace atom {
inline constexpr int kGround0 = 0;
inline constexpr int kGround1 = 1;
inline constexpr int kRydberg = 2;
}  // namespace atom

constexpr std::size_t full_dimension(int cutoff) {
  return static_cast<std::size_t>(kAtomDim * kIonDim * cutoff);
}

int subsystem_dimension(Subsystem s, int cutoff);

struct BasisIndex {
  int atom_level = 0;
  int ion_level = 0;
  int phonon_number = 0;

  /// Throws DimensionError when any component is out of range.
  std::size_t flatten(int cutoff) const;
  static BasisIndex unflatten(std::size_t flat, int cutoff);

  /// Ket label in the "a,i ph" form, e.g. "r,01" for |r>_a |0>_i |1>_ph.
  std::string label() const;

  bool operator==(const BasisIndex&) const = default;
};

/// Dense complex square matrix. Hermiticity and unitarity are measured from
/// the entries at construction time, never taken on trust.
class OperatorMatrix {
 public:
  static constexpr double kHermitianTolerance = 1e-12;
  static constexpr double kUnitaryTolerance = 1e-10;

  OperatorMatrix() = default;
  explicit OperatorMatrix(Matrix entries);

  static OperatorMatrix identity(Eigen::Index dim);
  static OperatorMatrix zero(Eigen::Index dim);

  const Matrix& entries() const noexcept { return entries_; }
  Eigen::Index dimension() const noexcept { return entries_.rows(); }
  bool is_hermitian() const noexcept { return hermitian_; }
  bool is_unitary() const noexcept { return unitary_; }

  Complex operator()(Eigen::Index r, Eigen::Index c) const { return entries_(r, c); }
  OperatorMatrix adjoint() const;

  friend OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
  friend OperatorMatrix operator*(Complex s, const OperatorMatrix& a);

 private:
  Matrix entries_;
  bool hermitian_ = false;
  bool unitary_ = false;
};

/// Max-norm deviation from Hermiticity, relative to max(1, max|A_ij|).
double hermiticity_error(const Matrix& m);
/// max|A^dagger A - I|.
double unitarity_error(const Matrix& m);

class StateVector {
 public:
  static constexpr double kNormTolerance = 1e-10;

  /// Requires length 6 * cutoff and unit norm within kNormTolerance.
  StateVector(Vector amplitudes, int cutoff);

  /// For truncated or projected states whose norm is intentionally < 1.
  static StateVector unnormalized(Vector amplitudes, int cutoff);

  const Vector& amplitudes() const noexcept { return amplitudes_; }
  int cutoff() const noexcept { return cutoff_; }
  Eigen::Index dimension() const noexcept { return amplitudes_.size(); }
  double norm() const { return amplitudes_.norm(); }

  Complex amplitude(const BasisIndex& idx) const { return amplitudes_(static_cast<Eigen::Index>(idx.flatten(cutoff_))); }
  double population(const BasisIndex& idx) const { return std::norm(amplitude(idx)); }

  /// Total population with the given atom level.
  double atom_population(int atom_level) const;
  /// Population of the highest retained Fock state |cutoff-1>.
  double top_fock_population() const;

  StateVector apply(const OperatorMatrix& op) const;

 private:
  struct Unchecked {};
  StateVector(Vector amplitudes, int cutoff, Unchecked);

  Vector amplitudes_;
  int cutoff_ = 0;
};

/// Phonon annihilation operator on the truncated Fock space; a^dagger|N-1> = 0.
OperatorMatrix annihilation(int cutoff);
OperatorMatrix creation(int cutoff);
OperatorMatrix number_operator(int cutoff);

struct QubitOps {
  OperatorMatrix sigma_plus;   // |1><0|
  OperatorMatrix sigma_minus;  // |0><1|
  OperatorMatrix sigma_z;      // |1><1| - |0><0|
  OperatorMatrix sigma_x;
};
QubitOps qubit_ops();

struct AtomOps {
  OperatorMatrix rydberg_projector;  // |r><r|
  OperatorMatrix rydberg_raise;      // |r><0|
  OperatorMatrix rydberg_lower;      // |0><r|
  OperatorMatrix one_projector;      // |1><1|
};
AtomOps atom_ops();

/// Kronecker product a (x) b.
Matrix kron(const Matrix& a, const Matrix& b);

/// Extend a single-factor operator to the full atom (x) ion (x) phonon space.
OperatorMatrix embed(const OperatorMatrix& op, Subsystem subsystem, int cutoff);

StateVector basis_state(int atom_level, int ion_level, int phonon_number, int cutoff);

/// <psi|phi>, conjugating the first argument.
Complex overlap(const StateVector& psi, const StateVector& phi);

}  // namespace phonon_gate
