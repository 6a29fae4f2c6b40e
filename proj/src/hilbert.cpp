#include "phonon_gate/hilbert.hpp"

#include "phonon_gate/errors.hpp"

#include <cmath>

namespace phonon_gate {

int subsystem_dimension(Subsystem s, int cutoff) {
  switch (s) {
    case Subsystem::Atom:
      return kAtomDim;
    case Subsystem::Ion:
      return kIonDim;
    case Subsystem::Phonon:
      return cutoff;
  }
  return 0;
}

std::size_t BasisIndex::flatten(int cutoff) const {
  if (cutoff < 1) throw DimensionError("phonon cutoff must be positive");
  if (atom_level < 0 || atom_level >= kAtomDim) throw DimensionError("atom level out of range: " + std::to_string(atom_level));
  if (ion_level < 0 || ion_level >= kIonDim) throw DimensionError("ion level out of range: " + std::to_string(ion_level));
  if (phonon_number < 0 || phonon_number >= cutoff) {
    throw DimensionError("phonon number " + std::to_string(phonon_number) + " outside cutoff " + std::to_string(cutoff));
  }
  return static_cast<std::size_t>((atom_level * kIonDim + ion_level) * cutoff + phonon_number);
}

BasisIndex BasisIndex::unflatten(std::size_t flat, int cutoff) {
  if (cutoff < 1) throw DimensionError("phonon cutoff must be positive");
  if (flat >= full_dimension(cutoff)) throw DimensionError("flat index out of range");
  const auto n = static_cast<std::size_t>(cutoff);
  const auto phonon = static_cast<int>(flat % n);
  const auto pair = flat / n;
  return {static_cast<int>(pair / kIonDim), static_cast<int>(pair % kIonDim), phonon};
}

std::string BasisIndex::label() const {
  static constexpr char kAtomNames[] = {'0', '1', 'r'};
  std::string out;
  out += kAtomNames[atom_level];
  out += ',';
  out += std::to_string(ion_level);
  out += std::to_string(phonon_number);
  return out;
}

double hermiticity_error(const Matrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  if (m.size() == 0) return 0.0;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

double unitarity_error(const Matrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  if (m.size() == 0) return 0.0;
  return (m.adjoint() * m - Matrix::Identity(m.rows(), m.cols())).cwiseAbs().maxCoeff();
}

OperatorMatrix::OperatorMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) throw DimensionError("operator matrix must be square");
  hermitian_ = hermiticity_error(entries_) < kHermitianTolerance;
  unitary_ = unitarity_error(entries_) < kUnitaryTolerance;
}

OperatorMatrix OperatorMatrix::identity(Eigen::Index dim) { return OperatorMatrix(Matrix::Identity(dim, dim)); }

OperatorMatrix OperatorMatrix::zero(Eigen::Index dim) { return OperatorMatrix(Matrix::Zero(dim, dim)); }

OperatorMatrix OperatorMatrix::adjoint() const { return OperatorMatrix(entries_.adjoint()); }

namespace {
void require_same_dim(const OperatorMatrix& a, const OperatorMatrix& b) {
  if (a.dimension() != b.dimension()) {
    throw DimensionError("operator dimensions differ: " + std::to_string(a.dimension()) + " vs " +
                         std::to_string(b.dimension()));
  }
}
}  // namespace

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b);
  return OperatorMatrix(a.entries_ * b.entries_);
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b);
  return OperatorMatrix(a.entries_ + b.entries_);
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_dim(a, b);
  return OperatorMatrix(a.entries_ - b.entries_);
}

OperatorMatrix operator*(Complex s, const OperatorMatrix& a) { return OperatorMatrix(s * a.entries_); }

StateVector::StateVector(Vector amplitudes, int cutoff, Unchecked)
    : amplitudes_(std::move(amplitudes)), cutoff_(cutoff) {
  if (cutoff_ < 1 || static_cast<std::size_t>(amplitudes_.size()) != full_dimension(cutoff_)) {
    throw DimensionError("state length " + std::to_string(amplitudes_.size()) + " does not match 6 * cutoff");
  }
}

StateVector::StateVector(Vector amplitudes, int cutoff) : StateVector(std::move(amplitudes), cutoff, Unchecked{}) {
  const double n = amplitudes_.norm();
  if (!(std::abs(n - 1.0) < kNormTolerance)) {
    throw DimensionError("state is not normalized (norm = " + std::to_string(n) + ")");
  }
}

StateVector StateVector::unnormalized(Vector amplitudes, int cutoff) {
  return StateVector(std::move(amplitudes), cutoff, Unchecked{});
}

double StateVector::atom_population(int atom_level) const {
  if (atom_level < 0 || atom_level >= kAtomDim) throw DimensionError("atom level out of range");
  const Eigen::Index block = kIonDim * cutoff_;
  return amplitudes_.segment(atom_level * block, block).squaredNorm();
}

double StateVector::top_fock_population() const {
  double p = 0.0;
  for (int a = 0; a < kAtomDim; ++a) {
    for (int i = 0; i < kIonDim; ++i) p += population({a, i, cutoff_ - 1});
  }
  return p;
}

StateVector StateVector::apply(const OperatorMatrix& op) const {
  if (op.dimension() != dimension()) throw DimensionError("operator does not act on this state space");
  return StateVector(op.entries() * amplitudes_, cutoff_, Unchecked{});
}

OperatorMatrix annihilation(int cutoff) {
  if (cutoff < 2) throw DimensionError("phonon cutoff must be at least 2, got " + std::to_string(cutoff));
  Matrix a = Matrix::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return OperatorMatrix(std::move(a));
}

OperatorMatrix creation(int cutoff) { return annihilation(cutoff).adjoint(); }

OperatorMatrix number_operator(int cutoff) {
  const auto a = annihilation(cutoff);
  return a.adjoint() * a;
}

QubitOps qubit_ops() {
  Matrix plus = Matrix::Zero(2, 2);
  plus(1, 0) = 1.0;
  Matrix z = Matrix::Zero(2, 2);
  z(0, 0) = -1.0;
  z(1, 1) = 1.0;
  return {OperatorMatrix(plus), OperatorMatrix(plus.adjoint()), OperatorMatrix(z),
          OperatorMatrix(plus + plus.adjoint())};
}

AtomOps atom_ops() {
  auto unit = [](int r, int c) {
    Matrix m = Matrix::Zero(kAtomDim, kAtomDim);
    m(r, c) = 1.0;
    return OperatorMatrix(std::move(m));
  };
  return {unit(atom::kRydberg, atom::kRydberg), unit(atom::kRydberg, atom::kGround0),
          unit(atom::kGround0, atom::kRydberg), unit(atom::kGround1, atom::kGround1)};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

OperatorMatrix embed(const OperatorMatrix& op, Subsystem subsystem, int cutoff) {
  if (cutoff < 1) throw DimensionError("phonon cutoff must be positive");
  const int dim = subsystem_dimension(subsystem, cutoff);
  if (op.dimension() != dim) {
    throw DimensionError("operator dimension " + std::to_string(op.dimension()) + " does not match subsystem dimension " +
                         std::to_string(dim));
  }
  const Matrix id_atom = Matrix::Identity(kAtomDim, kAtomDim);
  const Matrix id_ion = Matrix::Identity(kIonDim, kIonDim);
  const Matrix id_ph = Matrix::Identity(cutoff, cutoff);
  switch (subsystem) {
    case Subsystem::Atom:
      return OperatorMatrix(kron(op.entries(), kron(id_ion, id_ph)));
    case Subsystem::Ion:
      return OperatorMatrix(kron(id_atom, kron(op.entries(), id_ph)));
    case Subsystem::Phonon:
      return OperatorMatrix(kron(id_atom, kron(id_ion, op.entries())));
  }
  throw DimensionError("unknown subsystem");
}

StateVector basis_state(int atom_level, int ion_level, int phonon_number, int cutoff) {
  const auto flat = BasisIndex{atom_level, ion_level, phonon_number}.flatten(cutoff);
  Vector v = Vector::Zero(static_cast<Eigen::Index>(full_dimension(cutoff)));
  v(static_cast<Eigen::Index>(flat)) = 1.0;
  return StateVector(std::move(v), cutoff);
}

Complex overlap(const StateVector& psi, const StateVector& phi) {
  if (psi.dimension() != phi.dimension()) throw DimensionError("overlap of states with different dimensions");
  return psi.amplitudes().dot(phi.amplitudes());
}

}  // namespace phonon_gate
