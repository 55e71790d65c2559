#include "qgwnd/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/cuthill_mckee_ordering.hpp>

#include "qgwnd/format.hpp"

namespace qgwnd {

namespace {

using BandGraph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS,
                                        boost::property<boost::vertex_color_t, boost::default_color_type,
                                                        boost::property<boost::vertex_degree_t, int>>>;

/// Reverse Cuthill-McKee permutation: perm[old] = new.
std::vector<Eigen::Index> rcm_permutation(const SparseC& A) {
  const auto n = A.rows();
  BandGraph g(static_cast<std::size_t>(n));
  for (Eigen::Index col = 0; col < A.outerSize(); ++col)
    for (SparseC::InnerIterator it(A, col); it; ++it)
      if (it.row() < col) boost::add_edge(static_cast<std::size_t>(it.row()), static_cast<std::size_t>(col), g);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  boost::cuthill_mckee_ordering(g, order.rbegin(), boost::get(boost::vertex_color, g), boost::make_degree_map(g));
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) perm[order[i]] = static_cast<Eigen::Index>(i);
  return perm;
}

Eigen::Index bandwidth(const SparseC& A, const std::vector<Eigen::Index>& perm) {
  Eigen::Index kd = 0;
  for (Eigen::Index col = 0; col < A.outerSize(); ++col)
    for (SparseC::InnerIterator it(A, col); it; ++it)
      kd = std::max(kd, std::abs(perm[static_cast<std::size_t>(it.row())] - perm[static_cast<std::size_t>(col)]));
  return kd;
}

void check_info(lapack_int info, const char* routine) {
  if (info != 0) throw SpectralError(std::string(routine) + " failed with info " + std::to_string(info));
}

Eigen::VectorXd banded_values(const SparseC& A, bool real, const std::vector<Eigen::Index>& perm, Eigen::Index kd) {
  const auto n = A.rows();
  const auto ldab = kd + 1;
  Eigen::VectorXd w(n);
  if (real) {
    std::vector<double> ab(static_cast<std::size_t>(ldab * n), 0.0);
    for (Eigen::Index col = 0; col < A.outerSize(); ++col)
      for (SparseC::InnerIterator it(A, col); it; ++it) {
        const auto i = perm[static_cast<std::size_t>(it.row())];
        const auto j = perm[static_cast<std::size_t>(col)];
        if (i <= j) ab[static_cast<std::size_t>(kd + i - j + j * ldab)] = it.value().real();
      }
    double dummy = 0.0;
    check_info(LAPACKE_dsbevd(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(n), static_cast<lapack_int>(kd),
                              ab.data(), static_cast<lapack_int>(ldab), w.data(), &dummy, 1),
               "dsbevd");
  } else {
    std::vector<cd> ab(static_cast<std::size_t>(ldab * n), cd(0.0));
    for (Eigen::Index col = 0; col < A.outerSize(); ++col)
      for (SparseC::InnerIterator it(A, col); it; ++it) {
        const auto i = perm[static_cast<std::size_t>(it.row())];
        const auto j = perm[static_cast<std::size_t>(col)];
        if (i <= j) ab[static_cast<std::size_t>(kd + i - j + j * ldab)] = it.value();
      }
    cd dummy(0.0);
    check_info(LAPACKE_zhbevd(LAPACK_COL_MAJOR, 'N', 'U', static_cast<lapack_int>(n), static_cast<lapack_int>(kd),
                              ab.data(), static_cast<lapack_int>(ldab), w.data(), &dummy, 1),
               "zhbevd");
  }
  return w;
}

}  // namespace

SpectralDecomposition eigendecompose(const DiscreteOperator& op, const EigenOptions& options) {
  SpectralDecomposition sd;
  sd.mesh = op.mesh_ptr();
  sd.point_threshold = options.point_threshold;
  sd.split_exact = op.mesh().graph().is_star();
  const SparseC& A = op.A();
  const auto n = A.rows();
  const bool real = op.is_real();

  bool done = false;
  if (!options.vectors) {
    const auto perm = rcm_permutation(A);
    const auto kd = bandwidth(A, perm);
    if (static_cast<double>(kd) <= options.banded_fraction * static_cast<double>(n)) {
      sd.eigenvalues = banded_values(A, real, perm, kd);
      done = true;
    }
  }
  if (!done) {
    const char jobz = options.vectors ? 'V' : 'N';
    sd.eigenvalues.resize(n);
    if (real) {
      Eigen::MatrixXd dense = Eigen::MatrixXd(A.real());
      check_info(LAPACKE_dsyevd(LAPACK_COL_MAJOR, jobz, 'U', static_cast<lapack_int>(n), dense.data(),
                                static_cast<lapack_int>(n), sd.eigenvalues.data()),
                 "dsyevd");
      if (options.vectors) {
        const Eigen::SparseMatrix<double> QS = (op.Q() * op.S()).real();
        sd.basis_re = QS * dense;
      }
    } else {
      Eigen::MatrixXcd dense = Eigen::MatrixXcd(A);
      check_info(LAPACKE_zheevd(LAPACK_COL_MAJOR, jobz, 'U', static_cast<lapack_int>(n), dense.data(),
                                static_cast<lapack_int>(n), sd.eigenvalues.data()),
                 "zheevd");
      if (options.vectors) {
        const Eigen::MatrixXcd basis = SparseC(op.Q() * op.S()) * dense;
        sd.basis_re = basis.real();
        sd.basis_im = basis.imag();
      }
    }
  }
  for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k)
    if (sd.eigenvalues(k) < options.point_threshold) sd.point.push_back(k);
  sd.M_shift = 1.0 + std::max(0.0, -sd.eigenvalues.minCoeff());
  return sd;
}

Eigen::VectorXcd SpectralDecomposition::coefficients(const GridFunction& f) const {
  return coefficients(Eigen::MatrixXcd(f.values)).col(0);
}

Eigen::MatrixXcd SpectralDecomposition::coefficients(const Eigen::MatrixXcd& values) const {
  if (!has_vectors()) throw SpectralError("decomposition was computed without eigenvectors");
  const Eigen::MatrixXcd g = mesh->weights().asDiagonal() * values;
  const Eigen::MatrixXd gr = g.real();
  const Eigen::MatrixXd gi = g.imag();
  Eigen::MatrixXd ar = basis_re.transpose() * gr;
  Eigen::MatrixXd ai = basis_re.transpose() * gi;
  if (!is_real()) {
    ar.noalias() += basis_im.transpose() * gi;
    ai.noalias() -= basis_im.transpose() * gr;
  }
  Eigen::MatrixXcd a(ar.rows(), ar.cols());
  a.real() = ar;
  a.imag() = ai;
  return a;
}

GridFunction SpectralDecomposition::synthesize(const Eigen::VectorXcd& a) const {
  return {mesh, synthesize(Eigen::MatrixXcd(a)).col(0)};
}

Eigen::MatrixXcd SpectralDecomposition::synthesize(const Eigen::MatrixXcd& a) const {
  if (!has_vectors()) throw SpectralError("decomposition was computed without eigenvectors");
  const Eigen::MatrixXd ar = a.real();
  const Eigen::MatrixXd ai = a.imag();
  Eigen::MatrixXd fr = basis_re * ar;
  Eigen::MatrixXd fi = basis_re * ai;
  if (!is_real()) {
    fr.noalias() -= basis_im * ai;
    fi.noalias() += basis_im * ar;
  }
  Eigen::MatrixXcd f(fr.rows(), fr.cols());
  f.real() = fr;
  f.imag() = fi;
  return f;
}

GridFunction SpectralDecomposition::mode(Eigen::Index k) const {
  if (!has_vectors()) throw SpectralError("decomposition was computed without eigenvectors");
  Eigen::VectorXcd v(basis_re.rows());
  v.real() = basis_re.col(k);
  if (is_real())
    v.imag().setZero();
  else
    v.imag() = basis_im.col(k);
  return {mesh, v};
}

GridFunction project_continuous(const SpectralDecomposition& sd, const GridFunction& f) {
  if (sd.point.empty()) return f;
  GridFunction out = f;
  const Eigen::VectorXcd wf = sd.mesh->weights().cast<cd>().cwiseProduct(f.values);
  for (const auto k : sd.point) {
    const GridFunction phi = sd.mode(k);
    out.values -= phi.values.dot(wf) * phi.values;
  }
  return out;
}

double form_norm(const SpectralDecomposition& sd, const DiscreteOperator& op, const GridFunction& f) {
  const double l2 = lp_norm(f, 2.0);
  const double radicand = sd.M_shift * l2 * l2 + op.energy(f);
  if (radicand < -1e-12 * (1.0 + sd.M_shift * l2 * l2))
    throw SpectralError("negative form-norm radicand: M_shift too small for this operator");
  return std::sqrt(std::max(0.0, radicand));
}

double rayleigh_quotient(const DiscreteOperator& op, const GridFunction& f) {
  const double l2 = lp_norm(f, 2.0);
  if (l2 == 0.0) throw SpectralError("Rayleigh quotient of the zero function");
  return op.energy(f) / (l2 * l2);
}

void write_spectrum_csv(std::ostream& out, const SpectralDecomposition& sd) {
  out << "index,lambda,is_point\n";
  std::vector<bool> is_point(static_cast<std::size_t>(sd.eigenvalues.size()), false);
  for (auto k : sd.point) is_point[static_cast<std::size_t>(k)] = true;
  for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k)
    out << k << ',' << format_double(sd.eigenvalues(k)) << ',' << (is_point[static_cast<std::size_t>(k)] ? 1 : 0) << '\n';
}

void write_eigenvectors_csv(std::ostream& out, const SpectralDecomposition& sd) {
  out << "mode,edge,node,x,re,im\n";
  const Mesh& mesh = *sd.mesh;
  for (Eigen::Index k = 0; k < sd.modes(); ++k) {
    for (std::size_t e = 0; e < mesh.edges().size(); ++e) {
      const EdgeGrid& g = mesh.edge(e);
      for (std::size_t i = 0; i < g.nodes; ++i) {
        const auto raw = static_cast<Eigen::Index>(g.offset + i);
        const double im = sd.is_real() ? 0.0 : sd.basis_im(raw, k);
        out << k << ',' << e << ',' << i << ',' << format_double(g.x(i)) << ',' << format_double(sd.basis_re(raw, k))
            << ',' << format_double(im) << '\n';
      }
    }
  }
}

}  // namespace qgwnd
