#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "qgwnd/discrete_operator.hpp"
#include "qgwnd/spectral.hpp"

using namespace qgwnd;

namespace {

std::shared_ptr<const Mesh> star_mesh(int n, double h, double L, FarEnd far = FarEnd::dirichlet) {
  MeshOptions o;
  o.h = h;
  o.L_trunc = L;
  o.far_end = far;
  return discretize(std::make_shared<const MetricGraph>(make_star(n)), o);
}

std::shared_ptr<const Mesh> unit_edge(double h) {
  MeshOptions o;
  o.h = h;
  return discretize(std::make_shared<const MetricGraph>(
                        build_graph({{"vertices", {0, 1}}, {"edges", {{{"from", 0}, {"to", 1}, {"length", 1.0}}}}})),
                    o);
}

std::vector<VertexCoupling> uniform(int vertices, CouplingKind kind, int degree, double a = 0.0) {
  return std::vector<VertexCoupling>(static_cast<std::size_t>(vertices), standard_coupling(kind, degree, a));
}

Eigen::MatrixXcd dense(const SparseC& m) { return Eigen::MatrixXcd(m); }

}  // namespace

TEST_SUITE("operator_spectral") {
  TEST_CASE("Dirichlet edge matrices") {
    const auto op = assemble(unit_edge(0.25), uniform(2, CouplingKind::dirichlet, 1));
    REQUIRE(op->size() == 3);
    Eigen::MatrixXcd K(3, 3);
    K << 2, -1, 0, -1, 2, -1, 0, -1, 2;
    K *= 4.0;
    CHECK((dense(op->K()) - K).norm() < 1e-12);
    CHECK((dense(op->M()) - 0.25 * Eigen::MatrixXcd::Identity(3, 3)).norm() < 1e-12);
  }

  TEST_CASE("K and M are hermitian, M positive definite") {
    testing::Rng rng(8);
    const auto rc = testing::random_coupling(rng, 3);
    const auto op = assemble(star_mesh(3, 0.25, 5.0), {VertexCoupling(rc.A, rc.B)});
    const Eigen::MatrixXcd K = dense(op->K()), M = dense(op->M());
    CHECK((K - K.adjoint()).norm() <= 1e-10 * K.norm());
    CHECK((M - M.adjoint()).norm() <= 1e-10 * M.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(M).eigenvalues().minCoeff() > 0.0);
  }

  TEST_CASE("coupling size mismatch") {
    CHECK_THROWS_AS(assemble(star_mesh(3, 0.5, 10.0), uniform(1, CouplingKind::kirchhoff, 2)), AssemblyError);
    CHECK_THROWS_AS(assemble(star_mesh(3, 0.5, 10.0), uniform(2, CouplingKind::kirchhoff, 3)), AssemblyError);
  }

  TEST_CASE("Dirichlet edge eigenvalues converge at second order") {
    std::vector<double> err;
    for (double h : {0.02, 0.01, 0.005}) {
      const auto sd = eigendecompose(*assemble(unit_edge(h), uniform(2, CouplingKind::dirichlet, 1)));
      double e = 0.0;
      for (int j = 1; j <= 3; ++j) e = std::max(e, std::abs(sd.eigenvalues(j - 1) - std::pow(j * M_PI, 2)));
      err.push_back(e);
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.02));
    CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.02));
  }

  TEST_CASE("form value of exponential profile") {
    const double alpha = 1.7;
    for (double a : {0.0, alpha, -alpha}) {
      const auto mesh = star_mesh(3, 0.01, 20.0);
      const auto op = assemble(mesh, uniform(1, CouplingKind::delta, 3, a));
      const GridFunction f = GridFunction::sample(mesh, [](std::size_t, double x) { return cd(std::exp(-x)); });
      CHECK(op->energy(op->project_domain(f)) == doctest::Approx(1.5 + a).epsilon(1e-4));
    }
  }

  TEST_CASE("Kirchhoff form value converges at second order") {
    std::vector<double> err;
    for (double h : {0.04, 0.02, 0.01}) {
      const auto mesh = star_mesh(3, h, 20.0);
      const auto op = assemble(mesh, uniform(1, CouplingKind::kirchhoff, 3));
      const GridFunction f = GridFunction::sample(mesh, [](std::size_t, double x) { return cd(std::exp(-x)); });
      err.push_back(std::abs(op->energy(f) - 1.5));
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
    CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.05));
  }

  TEST_CASE("delta(-1) bound state") {
    const auto op = assemble(star_mesh(3, 0.02, 40.0), uniform(1, CouplingKind::delta, 3, -1.0));
    const auto sd = eigendecompose(*op);
    REQUIRE(sd.point.size() == 1);
    CHECK(std::abs(sd.eigenvalues(0) + 1.0 / 9.0) <= 5e-3);
    CHECK(sd.eigenvalues(1) > 0.0);
    CHECK(sd.split_exact);
  }

  TEST_CASE("Kirchhoff star has no negative eigenvalues and near-zero ground state") {
    std::vector<double> lowest;
    for (double L : {10.0, 20.0}) {
      EigenOptions o;
      o.vectors = false;
      const auto sd = eigendecompose(*assemble(star_mesh(3, 0.1, L), uniform(1, CouplingKind::kirchhoff, 3)), o);
      CHECK(sd.point.empty());
      lowest.push_back(sd.eigenvalues(0));
    }
    CHECK(lowest[1] < lowest[0]);
    CHECK(lowest[1] < 0.01);
  }

  TEST_CASE("orthonormality and residual") {
    testing::Rng rng(12);
    for (int trial = 0; trial < 3; ++trial) {
      const auto rc = testing::random_coupling(rng, 3);
      const auto mesh = star_mesh(3, 0.1, 5.0);
      const auto op = assemble(mesh, {VertexCoupling(rc.A, rc.B)});
      const auto sd = eigendecompose(*op);
      Eigen::MatrixXcd Phi(mesh->size(), sd.modes());
      for (Eigen::Index k = 0; k < sd.modes(); ++k) Phi.col(k) = sd.mode(k).values;
      const Eigen::MatrixXcd gram = Phi.adjoint() * mesh->weights().cast<cd>().asDiagonal() * Phi;
      CHECK((gram - Eigen::MatrixXcd::Identity(sd.modes(), sd.modes())).cwiseAbs().maxCoeff() <= 1e-8);
      double worst = 0.0;
      for (Eigen::Index k = 0; k < sd.modes(); ++k) {
        const Eigen::VectorXcd c = op->restrict(sd.mode(k));
        const double res = (op->K() * c - sd.eigenvalues(k) * (op->M() * c)).norm();
        worst = std::max(worst, res / (1.0 + std::abs(sd.eigenvalues(k))));
      }
      CHECK(worst <= 1e-8);
      for (Eigen::Index k = 1; k < sd.modes(); ++k) CHECK(sd.eigenvalues(k) >= sd.eigenvalues(k - 1));
    }
  }

  TEST_CASE("banded and dense eigenvalues agree") {
    testing::Rng rng(31);
    const auto rc = testing::random_coupling(rng, 3);
    const auto op = assemble(star_mesh(3, 0.1, 20.0), {VertexCoupling(rc.A, rc.B)});
    EigenOptions values_only;
    values_only.vectors = false;
    const auto a = eigendecompose(*op, values_only);
    const auto b = eigendecompose(*op);
    CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + b.eigenvalues.cwiseAbs().maxCoeff()));
  }

  TEST_CASE("negative count matches prediction") {
    EigenOptions o;
    o.vectors = false;
    auto discrete_count = [&](const VertexCoupling& c) {
      const auto sd = eigendecompose(*assemble(star_mesh(3, 0.02, 40.0), {c}), o);
      return static_cast<int>(sd.point.size());
    };
    for (const auto& c : {standard_coupling(CouplingKind::delta, 3, -1.0), standard_coupling(CouplingKind::dirichlet, 3),
                          standard_coupling(CouplingKind::kirchhoff, 3)})
      CHECK(discrete_count(c) == count_negative_eigs_predicted(c.A(), c.B()));
    testing::Rng rng(77);
    for (int trial = 0; trial < 20; ++trial) {
      const auto rc = testing::random_coupling(rng, 3, 0.5, 3.0);
      CAPTURE(trial);
      CHECK(discrete_count(VertexCoupling(rc.A, rc.B)) == count_negative_eigs_predicted(rc.A, rc.B));
    }
  }

  TEST_CASE("project_continuous") {
    const auto op = assemble(star_mesh(3, 0.05, 20.0), uniform(1, CouplingKind::delta, 3, -3.0));
    const auto sd = eigendecompose(*op);
    REQUIRE(sd.point.size() == 1);
    const GridFunction phi = sd.mode(sd.point[0]);
    CHECK(lp_norm(project_continuous(sd, phi), 2.0) <= 1e-8);
    testing::Rng rng(4);
    const GridFunction f = op->project_domain(testing::random_smooth_function(rng, op->mesh_ptr()));
    const GridFunction once = project_continuous(sd, f);
    CHECK(lp_norm(project_continuous(sd, once) - once, 2.0) <= 1e-12 * lp_norm(f, 2.0));

    const auto kop = assemble(star_mesh(3, 0.1, 10.0), uniform(1, CouplingKind::kirchhoff, 3));
    const auto ksd = eigendecompose(*kop);
    const GridFunction g = kop->project_domain(testing::random_smooth_function(rng, kop->mesh_ptr()));
    CHECK(lp_norm(project_continuous(ksd, g) - g, 2.0) == 0.0);
  }

  TEST_CASE("form norm examples") {
    const auto mesh = star_mesh(3, 0.1, 10.0, FarEnd::neumann);
    const auto op = assemble(mesh, uniform(1, CouplingKind::kirchhoff, 3));
    const auto sd = eigendecompose(*op);
    CHECK(form_norm(sd, *op, GridFunction(mesh)) == 0.0);
    const double c = 2.5;
    const GridFunction f = GridFunction::sample(mesh, [&](std::size_t, double) { return cd(c); });
    CHECK(form_norm(sd, *op, f) == doctest::Approx(c * std::sqrt(sd.M_shift * 30.0)).epsilon(1e-10));
    CHECK(sd.M_shift >= 1.0);
  }

  TEST_CASE("Rayleigh quotient bound and W12 comparability") {
    testing::Rng rng(21);
    const double C = 10.0;
    const auto mesh = star_mesh(3, 0.1, 10.0);
    for (double a : {-2.0, 0.0, 2.0}) {
      const auto op = assemble(mesh, uniform(1, CouplingKind::delta, 3, a));
      const auto sd = eigendecompose(*op);
      for (int trial = 0; trial < 34; ++trial) {
        const GridFunction f = op->project_domain(testing::random_smooth_function(rng, mesh));
        CHECK(rayleigh_quotient(*op, f) >= sd.eigenvalues(0) - 1e-8);
        const double ratio = form_norm(sd, *op, f) / sobolev_norm(f);
        CHECK(ratio >= 1.0 / C);
        CHECK(ratio <= C);
      }
    }
  }
}
