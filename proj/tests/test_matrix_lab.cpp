#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "mpedge/deformed_mp.hpp"
#include "mpedge/errors.hpp"
#include "mpedge/matrix_io.hpp"
#include "mpedge/matrix_lab.hpp"

using namespace mpedge;
using Eigen::MatrixXd;

namespace {

CovarianceModel two_atom(std::size_t M, std::size_t N) {
  const Atom atoms[] = {{1.0, 0.5}, {4.0, 0.5}};
  return CovarianceModel(PopulationSpectrum::from_atoms(atoms, M), AspectRatio(N, M));
}

MatrixXd q1(const CovarianceModel& m, const SampleMatrix& X) {
  const MatrixXd y = m.apply(X);
  return y * y.transpose();
}

std::vector<cplx> random_z(int n, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<cplx> out;
  for (int i = 0; i < n; ++i) out.emplace_back(-1.0 + 8.0 * rng.uniform(), std::pow(10.0, -2.0 + 3.0 * rng.uniform()));
  return out;
}

}  // namespace

TEST_CASE("eigens: trivial and planted cases") {
  const auto model = CovarianceModel::null(3, 4);
  const auto zero = eigens(model, wrap_matrix(MatrixXd::Zero(3, 4)));
  CHECK(zero.eigenvalues.size() == 3);
  for (double v : zero.eigenvalues) CHECK(v == 0.0);

  MatrixXd x(2, 2);
  x << 1, 0, 0, 2;
  x /= std::sqrt(2.0);
  const auto ev = eigens(CovarianceModel::null(2, 2), wrap_matrix(x));
  REQUIRE(ev.eigenvalues.size() == 2);
  CHECK(ev.eigenvalues[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(ev.eigenvalues[1] == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(eigens(model, wrap_matrix(MatrixXd::Zero(4, 3))), ValidationError);
}

TEST_CASE("full and top-k eigensolvers agree") {
  const auto model = CovarianceModel::null(200, 200);
  const auto X = sample_entries(EntryDistribution::gaussian(), 200, 200, 11);
  const auto full = eigens(model, X, EigenMethod::full());
  const auto top = eigens(model, X, EigenMethod::topk(5));
  REQUIRE(top.eigenvalues.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(full.eigenvalues[i] - top.eigenvalues[i]) <= 1e-8);

  // non-square, deformed, both orientations of the Gram matrix
  for (auto [M, N] : {std::pair<std::size_t, std::size_t>{60, 150}, {150, 60}}) {
    const auto m = two_atom(M, N);
    const auto Y = sample_entries(EntryDistribution::rademacher(), M, N, 4);
    const auto f = eigens(m, Y);
    const auto t = eigens(m, Y, EigenMethod::topk(8));
    for (int i = 0; i < 8; ++i) CHECK(std::abs(f.eigenvalues[i] - t.eigenvalues[i]) <= 1e-8);
  }
  CHECK_THROWS_AS(eigens(model, X, EigenMethod::topk(33)), ValidationError);
}

TEST_CASE("full spectrum at sizes where blocked LAPACK paths kick in") {
  for (std::size_t n : {257, 400}) {
    const auto X = sample_entries(EntryDistribution::gaussian(), n, n + 37, 13);
    const auto full = eigens(CovarianceModel::null(n, n + 37), X).eigenvalues;
    Eigen::JacobiSVD<MatrixXd> svd(X.x);
    const auto& sv = svd.singularValues();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(full[i] - sv(i) * sv(i)));
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("Q1 and Q2 share the nonzero spectrum") {
  const auto model = two_atom(40, 70);
  const auto X = sample_entries(EntryDistribution::gaussian(), 40, 70, 8);
  const MatrixXd y = model.apply(X);
  Eigen::SelfAdjointEigenSolver<MatrixXd> e1(y * y.transpose()), e2(y.transpose() * y);
  const auto& a = e1.eigenvalues();
  const auto& b = e2.eigenvalues();
  for (int i = 0; i < 40; ++i) CHECK(std::abs(a(39 - i) - b(69 - i)) <= 1e-10);
  for (int i = 0; i < 30; ++i) CHECK(std::abs(b(i)) <= 1e-10);
  const auto ev = eigens(model, X);
  for (int i = 0; i < 40; ++i) CHECK(std::abs(ev.eigenvalues[i] - a(39 - i)) <= 1e-10);
}

TEST_CASE("linearization spectrum") {
  const auto model = CovarianceModel::null(50, 80);
  const auto X = sample_entries(EntryDistribution::gaussian(), 50, 80, 2);
  const MatrixXd H = linearized_H(model, X);
  REQUIRE(H.rows() == 130);
  CHECK((H - H.transpose()).norm() == 0.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eh(H, Eigen::EigenvaluesOnly);
  const auto ev = eigens(model, X);
  std::vector<double> expect;
  for (double l : ev.eigenvalues) {
    expect.push_back(std::sqrt(l));
    expect.push_back(-std::sqrt(l));
  }
  for (int i = 0; i < 30; ++i) expect.push_back(0.0);
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < 130; ++i) CHECK(std::abs(eh.eigenvalues()(i) - expect[i]) <= 1e-10);

  // operator norm
  Eigen::JacobiSVD<MatrixXd> svd(H);
  CHECK(svd.singularValues()(0) == doctest::Approx(std::sqrt(ev.eigenvalues[0])).epsilon(1e-12));

  CHECK(linearized_H(model, wrap_matrix(MatrixXd::Zero(50, 80))).norm() == 0.0);
}

TEST_CASE("Green function: Ward identities") {
  for (auto [M, N] : {std::pair<std::size_t, std::size_t>{20, 30}, {30, 20}}) {
    const auto model = two_atom(M, N);
    const auto X = sample_entries(EntryDistribution::gaussian(), M, N, 21);
    const GreenFunction g(model, X);
    for (cplx z : random_z(20, 5)) {
      const auto G = g.matrix(z);
      const double eta = z.imag();
      CAPTURE(z);
      for (std::size_t a = 0; a < M + N; ++a) {
        double s1 = 0.0, s2 = 0.0, r1 = 0.0, r2 = 0.0;  // sums over I1 / I2, row and column
        for (std::size_t i = 0; i < M; ++i) {
          s1 += std::norm(G(a, i));
          r1 += std::norm(G(i, a));
        }
        for (std::size_t mu = M; mu < M + N; ++mu) {
          s2 += std::norm(G(a, mu));
          r2 += std::norm(G(mu, a));
        }
        if (a < M) {
          const cplx gz = G(a, a) / z;
          const double rhs1 = std::norm(z) / eta * gz.imag();
          CHECK(std::abs(s1 - rhs1) <= 1e-10 * rhs1);
          CHECK(std::abs(r1 - rhs1) <= 1e-10 * rhs1);
          const cplx rhs2 = gz + std::conj(z) / eta * gz.imag();
          CHECK(std::abs(s2 - rhs2) <= 1e-10 * std::abs(rhs2) + 1e-14);
          CHECK(std::abs(r2 - rhs2) <= 1e-10 * std::abs(rhs2) + 1e-14);
        } else {
          const double rhs2 = G(a, a).imag() / eta;
          CHECK(std::abs(s2 - rhs2) <= 1e-10 * rhs2);
          CHECK(std::abs(r2 - rhs2) <= 1e-10 * rhs2);
          const cplx rhs1 = G(a, a) + std::conj(z) / eta * G(a, a).imag();
          CHECK(std::abs(s1 - rhs1) <= 1e-10 * std::abs(rhs1) + 1e-14);
          CHECK(std::abs(r1 - rhs1) <= 1e-10 * std::abs(rhs1) + 1e-14);
        }
      }
    }
  }
}

TEST_CASE("Green function: block identities against direct solves") {
  const auto model = two_atom(20, 30);
  const auto X = sample_entries(EntryDistribution::gaussian(), 20, 30, 9);
  const MatrixXd y = model.apply(X);
  const cplx z(1.3, 0.05);
  const auto ge = green_function_at(model, X, z);

  // top-left: z (Q1 - z)^{-1}
  const Eigen::MatrixXcd q1z = y * y.transpose() - z * Eigen::MatrixXcd::Identity(20, 20);
  const Eigen::MatrixXcd tl = z * q1z.inverse();
  CHECK((ge.G.topLeftCorner(20, 20) - tl).cwiseAbs().maxCoeff() <= 1e-9);

  // whole matrix against inversion of the defining block matrix
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(50, 50);
  A.topLeftCorner(20, 20) = -Eigen::MatrixXcd::Identity(20, 20);
  A.topRightCorner(20, 30) = y.cast<cplx>();
  A.bottomLeftCorner(30, 20) = y.transpose().cast<cplx>();
  A.bottomRightCorner(30, 30) = -z * Eigen::MatrixXcd::Identity(30, 30);
  const Eigen::MatrixXcd direct = A.partialPivLu().inverse();
  CHECK((ge.G - direct).cwiseAbs().maxCoeff() <= 1e-9);

  // partial traces
  CHECK(std::abs(ge.m1 - ge.G.topLeftCorner(20, 20).trace() / (20.0 * z)) <= 1e-12);
  CHECK(std::abs(ge.m2 - ge.G.bottomRightCorner(30, 30).trace() / 30.0) <= 1e-12);

  CHECK_THROWS_AS(green_function_at(model, X, cplx(1.0, 0.0)), ValidationError);
  CHECK_THROWS_AS(green_function_at(model, X, cplx(1.0, -0.1)), ValidationError);
}

TEST_CASE("Green function at large eta") {
  const auto model = CovarianceModel::null(20, 30);
  const auto X = sample_entries(EntryDistribution::gaussian(), 20, 30, 3);
  const auto ge = green_function_at(model, X, cplx(0.5, 1e6));
  // The I1 block tends to -I (it is z(Q1 - z)^{-1}); everything else is O(1/eta).
  Eigen::MatrixXcd shifted = ge.G;
  shifted.topLeftCorner(20, 20) += Eigen::MatrixXcd::Identity(20, 20);
  CHECK(shifted.bottomRightCorner(30, 30).cwiseAbs().maxCoeff() <= 2e-6);
  CHECK(shifted.topRightCorner(20, 30).cwiseAbs().maxCoeff() <= 2e-6);
  CHECK(shifted.bottomLeftCorner(30, 20).cwiseAbs().maxCoeff() <= 2e-6);
  const double q1max = q1(model, X).cwiseAbs().maxCoeff();
  CHECK(shifted.topLeftCorner(20, 20).cwiseAbs().maxCoeff() <= 1.01 * q1max / 1e6);
}

TEST_CASE("interlacing under a single-entry change") {
  const auto model = CovarianceModel::null(40, 60);
  auto X = sample_entries(EntryDistribution::gaussian(), 40, 60, 12);
  const auto before = eigens(model, X).eigenvalues;
  X.x(7, 13) += 1.5;
  const auto after = eigens(model, X).eigenvalues;
  CounterRng rng(1);
  auto count = [](const std::vector<double>& v, double lo, double hi) {
    return std::count_if(v.begin(), v.end(), [&](double l) { return l >= lo && l <= hi; });
  };
  for (int t = 0; t < 500; ++t) {
    double lo = 4.0 * rng.uniform(), hi = 4.0 * rng.uniform();
    if (lo > hi) std::swap(lo, hi);
    CHECK(std::abs(count(before, lo, hi) - count(after, lo, hi)) <= 2);
  }
}

TEST_CASE("sampling is deterministic") {
  for (const auto& d : {EntryDistribution::gaussian(), EntryDistribution::heavy_tail(), EntryDistribution::pareto(3.5)}) {
    const auto a = sample_entries(d, 17, 23, 77);
    const auto b = sample_entries(d, 17, 23, 77);
    const auto c = sample_entries(d, 17, 23, 78);
    CHECK(a.x == b.x);
    CHECK(a.x != c.x);
  }
  // column j depends only on (seed, j): widening the matrix keeps the leading columns
  const auto narrow = sample_entries(EntryDistribution::gaussian(), 10, 5, 4);
  const auto wide = sample_entries(EntryDistribution::gaussian(), 10, 9, 4);
  CHECK(((narrow.x.leftCols(5) * std::sqrt(5.0)) - (wide.x.leftCols(5) * std::sqrt(9.0))).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("matrix dump round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mpedge_test_matrix_io";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "x.bin").string();
  const auto X = sample_entries(EntryDistribution::heavy_tail(), 7, 11, 5);
  dump_matrix(path, X.x);
  CHECK(std::filesystem::file_size(path) == 16 + 8 * 7 * 11);
  const MatrixXd back = load_matrix(path);
  CHECK(back == X.x);

  {
    std::ofstream f(path, std::ios::binary | std::ios::app);
    f.put('\0');
  }
  CHECK_THROWS_AS(load_matrix(path), ValidationError);
  std::filesystem::resize_file(path, 100);
  CHECK_THROWS_AS(load_matrix(path), ValidationError);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "NOTMAGIC00000000";
  }
  CHECK_THROWS_AS(load_matrix(path), ValidationError);
  CHECK_THROWS_AS(load_matrix((dir / "missing.bin").string()), ValidationError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("largest-entry event") {
  const double s = 10.0;
  // x = √(s/σ₁)·1.01 clears I = √(s/τ) once τ ≥ σ₁/1.01²; take σ ≡ 1, τ = 0.99.
  const auto unit = CovarianceModel::null(50, 50);
  MatrixXd x = MatrixXd::Zero(50, 50);
  x(0, 3) = std::sqrt(s) * 1.01;
  const auto planted = wrap_matrix(x);
  const auto ev = largest_entry_event(planted, unit, s, 0.99);
  CHECK(ev.L == 49);
  CHECK(ev.threshold == doctest::Approx(std::sqrt(s / 0.99)));
  REQUIRE(ev.triggered);
  REQUIRE(ev.witness.has_value());
  CHECK(ev.witness->row == 0);
  CHECK(ev.witness->col == 3);
  CHECK(eigens(unit, planted).eigenvalues[0] >= s);

  // deformed population: plant just above the threshold on the last scanned row
  const auto model = two_atom(50, 50);
  MatrixXd y = MatrixXd::Zero(50, 50);
  const auto L = largest_entry_event(wrap_matrix(y), model, s, 0.9).L;
  CHECK(L == 45);
  y(L - 1, 20) = -1.01 * std::sqrt(s / 0.9);
  const auto ev2 = largest_entry_event(wrap_matrix(y), model, s, 0.9);
  REQUIRE(ev2.triggered);
  CHECK(ev2.witness->row == L - 1);
  CHECK(eigens(model, wrap_matrix(y)).eigenvalues[0] >= s);
  // an entry below row L does not count
  MatrixXd w = MatrixXd::Zero(50, 50);
  w(L, 0) = 100.0;
  CHECK_FALSE(largest_entry_event(wrap_matrix(w), model, s, 0.9).triggered);

  // Gaussian and Rademacher draws at s = 2 λ_r never fire.
  const auto null = CovarianceModel::null(200, 200);
  const double s2 = 2.0 * edge_report(null.pop(), null.d()).lambda_r;
  for (std::uint64_t t = 0; t < 200; ++t) {
    CHECK_FALSE(largest_entry_event(sample_entries(EntryDistribution::gaussian(), 200, 200, t), null, s2, 0.9).triggered);
    CHECK_FALSE(largest_entry_event(sample_entries(EntryDistribution::rademacher(), 200, 200, t), null, s2, 0.9).triggered);
  }

  CHECK_THROWS_AS(largest_entry_event(planted, model, 0.0, 0.5), ValidationError);
  CHECK_THROWS_AS(largest_entry_event(planted, model, 1.0, 1.0), ValidationError);
  // τ above the smallest σ on the scanned rows
  const auto low = CovarianceModel(PopulationSpectrum::from_sigmas(std::vector<double>(50, 0.5), 0.4), AspectRatio(50, 50));
  CHECK_THROWS_AS(largest_entry_event(planted, low, 1.0, 0.9), ValidationError);
}
