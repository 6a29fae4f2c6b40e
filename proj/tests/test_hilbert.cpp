#include "oracles.hpp"

#include "phonon_gate/errors.hpp"
#include "phonon_gate/hilbert.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <random>

using namespace phonon_gate;
using Catch::Matchers::WithinAbs;

namespace {

Matrix random_matrix(int dim, std::mt19937& rng) {
  std::normal_distribution<double> g;
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) m(r, c) = Complex(g(rng), g(rng));
  return m;
}

Matrix random_hermitian(int dim, std::mt19937& rng) {
  const Matrix m = random_matrix(dim, rng);
  return 0.5 * (m + m.adjoint());
}

Matrix random_unitary(int dim, std::mt19937& rng) {
  return oracle::expm(random_hermitian(dim, rng), 1.0);
}

}  // namespace

TEST_CASE("flatten matches nested-loop enumeration and round-trips", "[hilbert]") {
  for (int n = 1; n <= 16; ++n) {
    for (std::size_t flat = 0; flat < full_dimension(n); ++flat) {
      const auto b = BasisIndex::unflatten(flat, n);
      REQUIRE(b.flatten(n) == flat);
      REQUIRE(oracle::flat_index(b.atom_level, b.ion_level, b.phonon_number, n) == static_cast<int>(flat));
    }
  }
  CHECK(BasisIndex{2, 0, 0}.flatten(5) == 20);
  CHECK(BasisIndex{1, 1, 3}.flatten(5) == (1 * 2 + 1) * 5 + 3);
}

TEST_CASE("out-of-range basis indices are rejected", "[hilbert]") {
  CHECK_THROWS_AS((BasisIndex{3, 0, 0}.flatten(4)), DimensionError);
  CHECK_THROWS_AS((BasisIndex{0, 2, 0}.flatten(4)), DimensionError);
  CHECK_THROWS_AS((BasisIndex{0, 0, 4}.flatten(4)), DimensionError);
  CHECK_THROWS_AS((BasisIndex{0, 0, -1}.flatten(4)), DimensionError);
  CHECK_THROWS_AS(BasisIndex::unflatten(24, 4), DimensionError);
  CHECK_THROWS_AS(basis_state(0, 0, 5, 5), DimensionError);
}

TEST_CASE("basis labels", "[hilbert]") {
  CHECK(BasisIndex{2, 0, 1}.label() == "r,01");
  CHECK(BasisIndex{1, 1, 0}.label() == "1,10");
  CHECK(BasisIndex{0, 0, 12}.label() == "0,012");
}

TEST_CASE("annihilation operator", "[hilbert]") {
  SECTION("cutoff 2") {
    const Matrix a = annihilation(2).entries();
    Matrix expected(2, 2);
    expected << 0, 1, 0, 0;
    CHECK(a.isApprox(expected, 0.0));
  }
  SECTION("cutoff 3 ladder element") {
    const Matrix a = annihilation(3).entries();
    CHECK(a(1, 2) == Complex(std::sqrt(2.0), 0.0));
    CHECK(a(0, 1) == Complex(1.0, 0.0));
    CHECK(a.cwiseAbs().sum() == Catch::Approx(1.0 + std::sqrt(2.0)));
  }
  SECTION("matches the element-wise oracle") {
    for (int n = 2; n <= 12; ++n) CHECK((annihilation(n).entries() - oracle::lowering(n)).norm() == 0.0);
  }
  SECTION("commutator is the identity below the top level") {
    const int n = 9;
    const Matrix a = annihilation(n).entries();
    const Matrix ad = creation(n).entries();
    const Matrix comm = a * ad - ad * a;
    for (int k = 0; k < n - 1; ++k) {
      for (int j = 0; j < n - 1; ++j) CHECK_THAT(std::abs(comm(k, j) - (k == j ? 1.0 : 0.0)), WithinAbs(0.0, 1e-14));
    }
    // Truncation: a^dagger |N-1> = 0.
    CHECK(ad.col(n - 1).norm() == 0.0);
  }
  SECTION("number operator is diag(0..N-1)") {
    const Matrix num = number_operator(7).entries();
    for (int k = 0; k < 7; ++k) CHECK_THAT(num(k, k).real(), WithinAbs(k, 1e-14));
    CHECK((num - Matrix(num.diagonal().asDiagonal())).norm() == 0.0);
  }
  CHECK_THROWS_AS(annihilation(1), DimensionError);
  CHECK_THROWS_AS(annihilation(0), DimensionError);
}

TEST_CASE("qubit operators", "[hilbert]") {
  const auto q = qubit_ops();
  const Matrix sp = q.sigma_plus.entries(), sm = q.sigma_minus.entries();
  Eigen::Vector2cd ground(1, 0), excited(0, 1);
  CHECK((sp * ground - excited).norm() == 0.0);
  CHECK((sp * sp).norm() == 0.0);
  CHECK(((sp * sm - sm * sp) - q.sigma_z.entries()).norm() == 0.0);
  CHECK(q.sigma_z.entries()(1, 1) == Complex(1.0));
  CHECK(q.sigma_z.entries()(0, 0) == Complex(-1.0));
  CHECK((q.sigma_x.entries() - (sp + sm)).norm() == 0.0);
  CHECK(q.sigma_z.is_hermitian());
  CHECK(q.sigma_x.is_unitary());
  CHECK_FALSE(q.sigma_plus.is_hermitian());
}

TEST_CASE("atom operators", "[hilbert]") {
  const auto a = atom_ops();
  const Matrix proj = a.rydberg_projector.entries();
  CHECK(proj(2, 2) == Complex(1.0));
  CHECK(proj.cwiseAbs().sum() == 1.0);
  Eigen::Vector3cd zero(1, 0, 0), one(0, 1, 0), ryd(0, 0, 1);
  CHECK(((a.rydberg_raise.entries() + a.rydberg_lower.entries()) * zero - ryd).norm() == 0.0);
  CHECK((proj * one).norm() == 0.0);
  CHECK((a.one_projector.entries() * one - one).norm() == 0.0);
}

TEST_CASE("embed", "[hilbert]") {
  const int n = 4;
  SECTION("identity embeds to identity") {
    for (auto s : {Subsystem::Atom, Subsystem::Ion, Subsystem::Phonon}) {
      const auto id = OperatorMatrix::identity(subsystem_dimension(s, n));
      CHECK(embed(id, s, n).entries().isIdentity(0.0));
      CHECK(embed(id, s, n).dimension() == 6 * n);
    }
  }
  SECTION("sigma_plus acts only on the ion") {
    const auto psi = basis_state(0, 0, 1, n);
    const auto out = psi.apply(embed(qubit_ops().sigma_plus, Subsystem::Ion, n));
    CHECK(out.population({0, 1, 1}) == 1.0);
  }
  SECTION("matches the element-wise construction") {
    const Matrix a = oracle::lowering(n);
    const Matrix expected = oracle::from_elements(n, [&](int ra, int ri, int rn, int ca, int ci, int cn) {
      return (ra == ca && ri == ci) ? a(rn, cn) : Complex(0.0);
    });
    CHECK((embed(annihilation(n), Subsystem::Phonon, n).entries() - expected).norm() == 0.0);
  }
  SECTION("disjoint-factor embeddings commute") {
    std::mt19937 rng(7);
    const OperatorMatrix A(random_matrix(3, rng)), B(random_matrix(n, rng));
    const Matrix ab = (embed(A, Subsystem::Atom, n) * embed(B, Subsystem::Phonon, n)).entries();
    const Matrix ba = (embed(B, Subsystem::Phonon, n) * embed(A, Subsystem::Atom, n)).entries();
    CHECK((ab - ba).cwiseAbs().maxCoeff() < 1e-13);
  }
  SECTION("hermiticity and unitarity survive embedding") {
    std::mt19937 rng(11);
    const OperatorMatrix h(random_hermitian(2, rng));
    const OperatorMatrix u(random_unitary(n, rng));
    REQUIRE(h.is_hermitian());
    REQUIRE(u.is_unitary());
    CHECK(embed(h, Subsystem::Ion, n).is_hermitian());
    CHECK(embed(u, Subsystem::Phonon, n).is_unitary());
  }
  CHECK_THROWS_AS(embed(OperatorMatrix::identity(2), Subsystem::Atom, n), DimensionError);
  CHECK_THROWS_AS(embed(OperatorMatrix::identity(5), Subsystem::Phonon, n), DimensionError);
}

TEST_CASE("operator flags are measured from the entries", "[hilbert]") {
  Matrix m(2, 2);
  m << 1, Complex(0, 1), Complex(0, -1), 2;
  CHECK(OperatorMatrix(m).is_hermitian());
  m(0, 1) += 1e-9;
  CHECK_FALSE(OperatorMatrix(m).is_hermitian());
  CHECK(hermiticity_error(m) > 1e-10);
  Matrix u = Matrix::Identity(3, 3);
  CHECK(OperatorMatrix(u).is_unitary());
  u(0, 0) = 1.0 + 1e-8;
  CHECK_FALSE(OperatorMatrix(u).is_unitary());
  CHECK_THROWS_AS(OperatorMatrix(Matrix::Zero(2, 3)), DimensionError);
  CHECK_THROWS_AS(OperatorMatrix::identity(2) * OperatorMatrix::identity(3), DimensionError);
}

TEST_CASE("basis states and overlaps", "[hilbert]") {
  const auto s0 = basis_state(0, 0, 0, 5);
  CHECK(s0.amplitudes()(0) == Complex(1.0));
  const auto sr = basis_state(atom::kRydberg, 0, 0, 5);
  CHECK(sr.amplitudes()(20) == Complex(1.0));
  for (std::size_t f = 0; f < full_dimension(3); ++f) {
    const auto b = BasisIndex::unflatten(f, 3);
    CHECK(basis_state(b.atom_level, b.ion_level, b.phonon_number, 3).norm() == 1.0);
  }
  CHECK(overlap(s0, s0) == Complex(1.0));
  CHECK(overlap(s0, sr) == Complex(0.0));

  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  Vector x(30), y(30);
  for (int k = 0; k < 30; ++k) {
    x(k) = Complex(g(rng), g(rng));
    y(k) = Complex(g(rng), g(rng));
  }
  const StateVector psi(x.normalized(), 5), phi(y.normalized(), 5);
  CHECK_THAT(std::abs(overlap(psi, psi) - 1.0), WithinAbs(0.0, 1e-14));
  // Conjugation on the first argument.
  const Complex expected = (x.normalized().conjugate().cwiseProduct(y.normalized())).sum();
  CHECK(std::abs(overlap(psi, phi) - expected) < 1e-14);
  const Complex phase = std::polar(1.0, 0.73);
  const StateVector psi2(phase * x.normalized(), 5), phi2(phase * y.normalized(), 5);
  CHECK_THAT(std::norm(overlap(psi2, phi2)), WithinAbs(std::norm(overlap(psi, phi)), 1e-14));
  CHECK_THROWS_AS(overlap(psi, basis_state(0, 0, 0, 4)), DimensionError);
}

TEST_CASE("state vectors validate norm and dimension", "[hilbert]") {
  Vector v = Vector::Zero(12);
  v(0) = 1.0 + 1e-8;
  CHECK_THROWS_AS(StateVector(v, 2), DimensionError);
  v(0) = 1.0;
  CHECK_NOTHROW(StateVector(v, 2));
  CHECK_THROWS_AS(StateVector(v, 3), DimensionError);
  v(0) = 0.5;
  CHECK_NOTHROW(StateVector::unnormalized(v, 2));
  const auto s = basis_state(2, 1, 2, 3);
  CHECK(s.atom_population(atom::kRydberg) == 1.0);
  CHECK(s.atom_population(atom::kGround0) == 0.0);
  CHECK(s.top_fock_population() == 1.0);
}

TEST_CASE("operator construction is deterministic", "[hilbert]") {
  const Matrix a1 = embed(annihilation(9), Subsystem::Phonon, 9).entries();
  const Matrix a2 = embed(annihilation(9), Subsystem::Phonon, 9).entries();
  CHECK(std::memcmp(a1.data(), a2.data(), sizeof(Complex) * a1.size()) == 0);
}
