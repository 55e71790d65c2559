#include "qgwnd/coupling.hpp"

#include <algorithm>
#include <cmath>

namespace qgwnd {

namespace {

constexpr double kRankTol = 1e-10;

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

SelfAdjointReport check_self_adjoint(const CMatrix& A, const CMatrix& B) {
  if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
    throw CouplingError("coupling matrices must be square and of equal size");
  const auto n = A.rows();
  CMatrix AB(n, 2 * n);
  AB << A, B;
  Eigen::JacobiSVD<CMatrix> svd(AB);
  const auto& s = svd.singularValues();
  SelfAdjointReport report;
  const double smax = s.size() ? s(0) : 0.0;
  report.rank = smax > 0.0 ? static_cast<int>((s.array() > kRankTol * smax).count()) : 0;
  const CMatrix H = A * B.adjoint();
  report.hermiticity_residual = (H - H.adjoint()).norm();
  report.pass = report.rank == n && report.hermiticity_residual <= kRankTol * (1.0 + H.norm());
  return report;
}

ProjectorDecomposition projector_decomposition(const CMatrix& A, const CMatrix& B) {
  const auto report = check_self_adjoint(A, B);
  if (!report.pass)
    throw CouplingError("coupling (A,B) is not self-adjoint (rank " + std::to_string(report.rank) + ")");
  const auto n = A.rows();
  CMatrix AB(n, 2 * n);
  AB << A, B;
  const double scale = spectral_norm(AB);

  const CMatrix Bd = B.adjoint();
  Eigen::JacobiSVD<CMatrix> svd(Bd, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const auto r = static_cast<Eigen::Index>((s.array() > kRankTol * scale).count());
  const CMatrix Ur = svd.matrixU().leftCols(r);
  const CMatrix Vr = svd.matrixV().leftCols(r);

  ProjectorDecomposition out;
  const CMatrix I = CMatrix::Identity(n, n);
  out.P_D = I - Ur * Ur.adjoint();
  out.P_N = CMatrix::Zero(n, n);
  out.P_R = CMatrix::Zero(n, n);
  out.Lambda = CMatrix::Zero(n, n);
  if (r == 0) return out;

  // Values F = B^dagger x and inward derivatives F' = -A^dagger x solve the
  // conditions; restricted to V the derivative's V-component is L F.
  const Eigen::VectorXd inv_s = s.head(r).cwiseInverse();
  CMatrix Lr = -(Ur.adjoint() * A.adjoint() * Vr) * inv_s.asDiagonal();
  Lr = hermitian_part(Lr);
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(Lr);
  const Eigen::VectorXd& mu = eig.eigenvalues();
  const double mu_tol = kRankTol * (1.0 + mu.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < r; ++j) {
    const Eigen::VectorXcd w = Ur * eig.eigenvectors().col(j);
    const CMatrix proj = w * w.adjoint();
    if (std::abs(mu(j)) <= mu_tol) {
      out.P_N += proj;
    } else {
      out.P_R += proj;
      out.Lambda += mu(j) * proj;
    }
  }
  return out;
}

std::string to_string(CouplingKind kind) {
  switch (kind) {
    case CouplingKind::kirchhoff: return "kirchhoff";
    case CouplingKind::dirichlet: return "dirichlet";
    case CouplingKind::delta: return "delta";
    case CouplingKind::delta_prime: return "delta_prime";
    case CouplingKind::custom: return "custom";
  }
  return "custom";
}

CouplingKind coupling_kind_from_string(const std::string& name) {
  if (name == "kirchhoff") return CouplingKind::kirchhoff;
  if (name == "dirichlet") return CouplingKind::dirichlet;
  if (name == "delta") return CouplingKind::delta;
  if (name == "delta_prime") return CouplingKind::delta_prime;
  if (name == "custom") return CouplingKind::custom;
  throw CouplingError("unknown coupling kind '" + name + "'");
}

VertexCoupling::VertexCoupling(CMatrix A, CMatrix B, CouplingKind kind, double parameter)
    : A_(std::move(A)), B_(std::move(B)), kind_(kind), parameter_(parameter), proj_(projector_decomposition(A_, B_)) {}

bool VertexCoupling::has_robin_part() const { return proj_.P_R.norm() > 1e-10; }

bool VertexCoupling::is_real() const {
  return proj_.P_D.imag().norm() < 1e-13 && proj_.Lambda.imag().norm() < 1e-13 * (1.0 + proj_.Lambda.norm());
}

std::optional<double> VertexCoupling::delta_strength() const {
  const auto n = A_.rows();
  const CMatrix J = CMatrix::Constant(n, n, cd(1.0 / static_cast<double>(n), 0.0));
  const CMatrix I = CMatrix::Identity(n, n);
  if ((proj_.P_D - (I - J)).norm() > 1e-9) return std::nullopt;
  if (!has_robin_part()) return 0.0;
  if ((proj_.P_R - J).norm() > 1e-9) return std::nullopt;
  return static_cast<double>(n) * proj_.Lambda.trace().real();
}

VertexCoupling standard_coupling(CouplingKind kind, int degree, double parameter) {
  if (degree < 1) throw CouplingError("vertex degree must be at least 1");
  const Eigen::Index n = degree;
  CMatrix A = CMatrix::Zero(n, n);
  CMatrix B = CMatrix::Zero(n, n);
  switch (kind) {
    case CouplingKind::kirchhoff:
    case CouplingKind::delta: {
      const double alpha = kind == CouplingKind::delta ? parameter : 0.0;
      for (Eigen::Index i = 0; i + 1 < n; ++i) {
        A(i, i) = 1.0;
        A(i, i + 1) = -1.0;
      }
      A(n - 1, 0) = -alpha;
      B.row(n - 1).setOnes();
      return VertexCoupling(A, B, kind, alpha);
    }
    case CouplingKind::dirichlet:
      A.setIdentity();
      return VertexCoupling(A, B, kind, 0.0);
    case CouplingKind::delta_prime:
      for (Eigen::Index i = 0; i + 1 < n; ++i) {
        B(i, i) = 1.0;
        B(i, i + 1) = -1.0;
      }
      A.row(n - 1).setOnes();
      B(n - 1, 0) = -parameter;
      return VertexCoupling(A, B, kind, parameter);
    case CouplingKind::custom:
      break;
  }
  throw CouplingError("standard_coupling: kind '" + to_string(kind) + "' has no canonical matrices");
}

CMatrix scattering_matrix(cd k, const CMatrix& A, const CMatrix& B) {
  const cd ik = cd(0.0, 1.0) * k;
  const CMatrix plus = A + ik * B;
  Eigen::JacobiSVD<CMatrix> svd(plus);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0 || s(s.size() - 1) < 1e-12 * s(0))
    throw SpectralPointError("A + ikB is singular: k^2 is a spectral point");
  return -plus.partialPivLu().solve(A - ik * B);
}

CMatrix scattering_matrix_projector(cd k, const ProjectorDecomposition& proj) {
  CMatrix G = -proj.P_D + proj.P_N;
  if (proj.P_R.norm() == 0.0) return G;
  const cd ik = cd(0.0, 1.0) * k;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(proj.Lambda));
  const double tol = 1e-10 * (1.0 + eig.eigenvalues().cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < eig.eigenvalues().size(); ++j) {
    const double mu = eig.eigenvalues()(j);
    if (std::abs(mu) <= tol) continue;
    const cd denom = mu - ik;
    if (std::abs(denom) < 1e-14 * (1.0 + std::abs(mu))) throw SpectralPointError("Lambda - ik is singular");
    const Eigen::VectorXcd w = eig.eigenvectors().col(j);
    G -= ((mu + ik) / denom) * (w * w.adjoint());
  }
  return G;
}

int count_negative_eigs_predicted(const CMatrix& A, const CMatrix& B) {
  const CMatrix H = hermitian_part(A * B.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(H, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  if (ev.size() == 0) return 0;
  // Relative to |A| |B| rather than |AB^dagger|, which is pure rounding noise
  // when the coupling has no Robin part.
  const double scale = A.norm() * B.norm();
  if (scale == 0.0) return 0;
  return static_cast<int>((ev.array() > 1e-10 * scale).count());
}

}  // namespace qgwnd
