#pragma once

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qgwnd {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

class CouplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when A + ikB is singular, i.e. k^2 is a spectral point of the star.
class SpectralPointError : public CouplingError {
 public:
  using CouplingError::CouplingError;
};

struct SelfAdjointReport {
  bool pass = false;
  int rank = 0;
  double hermiticity_residual = 0.0;
};

/// Numerical rank of (A|B) at 1e-10 times the largest singular value, and the
/// hermiticity defect of AB^dagger.
SelfAdjointReport check_self_adjoint(const CMatrix& A, const CMatrix& B);

/// Orthogonal decomposition of the vertex conditions A F + B F' = 0 into
///   P_D F = 0,  P_N F' = 0,  P_R F' = Lambda P_R F.
/// F' is the derivative pointing into each edge. Lambda is stored as an n x n
/// hermitian matrix supported on range(P_R).
struct ProjectorDecomposition {
  CMatrix P_D;
  CMatrix P_N;
  CMatrix P_R;
  CMatrix Lambda;
};

/// Computes the decomposition from any self-adjoint pair. With V = range(B^dagger)
/// the admissible vertex values, P_D = I - P_V and the induced operator
/// L = -P_V A^dagger (B^dagger)^+ P_V is hermitian on V; its kernel is the
/// Neumann part and its nonzero spectrum the Robin part.
ProjectorDecomposition projector_decomposition(const CMatrix& A, const CMatrix& B);

enum class CouplingKind { kirchhoff, dirichlet, delta, delta_prime, custom };

std::string to_string(CouplingKind kind);
CouplingKind coupling_kind_from_string(const std::string& name);

/// Self-adjoint vertex coupling with derived projector data.
///
/// The input pair is kept verbatim; `canonical_A()`/`canonical_B()` return the
/// unique representative A = P_D - Lambda, B = P_N + P_R of its equivalence
/// class under left multiplication by invertible matrices.
class VertexCoupling {
 public:
  VertexCoupling(CMatrix A, CMatrix B, CouplingKind kind = CouplingKind::custom, double parameter = 0.0);

  const CMatrix& A() const { return A_; }
  const CMatrix& B() const { return B_; }
  int degree() const { return static_cast<int>(A_.rows()); }
  CouplingKind kind() const { return kind_; }
  double parameter() const { return parameter_; }

  const ProjectorDecomposition& projectors() const { return proj_; }
  CMatrix canonical_A() const { return proj_.P_D - proj_.Lambda; }
  CMatrix canonical_B() const { return proj_.P_N + proj_.P_R; }

  bool has_robin_part() const;
  bool is_real() const;

  /// When the coupling is a delta condition (continuity plus a Robin part
  /// Lambda = alpha/n on the constants), returns alpha; otherwise nullopt.
  std::optional<double> delta_strength() const;

 private:
  CMatrix A_;
  CMatrix B_;
  CouplingKind kind_;
  double parameter_;
  ProjectorDecomposition proj_;
};

/// Textbook coupling matrices of the standard kinds. Conditions encoded:
///   kirchhoff      f_1 = ... = f_n,  sum f_j' = 0
///   dirichlet      f_j = 0
///   delta(a)       f_1 = ... = f_n,  sum f_j' = a f_1
///   delta_prime(b) f_1' = ... = f_n', sum f_j = b f_1'
VertexCoupling standard_coupling(CouplingKind kind, int degree, double parameter = 0.0);

/// G(k) = -(A + ikB)^{-1}(A - ikB). Throws SpectralPointError when A + ikB is
/// singular.
CMatrix scattering_matrix(cd k, const CMatrix& A, const CMatrix& B);

/// G(k) = -P_D + P_N - (Lambda - ik)^{-1}(Lambda + ik) P_R.
CMatrix scattering_matrix_projector(cd k, const ProjectorDecomposition& proj);

/// Number of eigenvalues of the hermitian matrix AB^dagger above
/// 1e-10 |A| |B| (Frobenius norms); equals the number of negative eigenvalues of the star
/// Hamiltonian with these conditions.
int count_negative_eigs_predicted(const CMatrix& A, const CMatrix& B);

}  // namespace qgwnd
