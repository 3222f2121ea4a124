#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "cpcp/errors.hpp"
#include "cpcp/io.hpp"
#include "cpcp/linalg.hpp"
#include "cpcp/rng.hpp"
#include "helpers.hpp"

using namespace cpcp;
using testing_util::gaussian;

TEST_CASE("norms of a diagonal matrix") {
  Matrix a(2, 2);
  a << 3, 0, 0, -4;
  CHECK(frobenius_norm(a) == doctest::Approx(5.0));
  CHECK(nuclear_norm(a) == doctest::Approx(7.0));
  CHECK(spectral_norm(a) == doctest::Approx(4.0));
  CHECK(l1_norm(a) == doctest::Approx(7.0));
  CHECK(linf_norm(a) == doctest::Approx(4.0));
  CHECK(norm(Matrix(0, 3), NormKind::spectral) == 0.0);
}

TEST_CASE("svd reconstructs and truncates") {
  const Matrix a = gaussian(7, 5, 1) * gaussian(5, 6, 2);
  const SvdFactors f = svd(a);
  CHECK(f.rank() == 5);
  CHECK((f.reconstruct() - a).norm() <= 1e-10 * a.norm());
  CHECK((f.U.transpose() * f.U - Matrix::Identity(5, 5)).norm() < 1e-12);
  for (Index k = 1; k < f.rank(); ++k) CHECK(f.sigma[k] <= f.sigma[k - 1]);

  const SvdFactors cut = svd(a, f.sigma[2]);  // strictly greater than sigma_3
  CHECK(cut.rank() == 2);
  CHECK(svd(Matrix::Zero(4, 3)).rank() == 0);
  CHECK_THROWS_AS(svd(a, -1.0), std::invalid_argument);
}

TEST_CASE("svt shrinks every singular value by tau") {
  const Matrix a = gaussian(6, 4, 3);
  const Vector s = singular_values(a);
  const double tau = 0.5 * (s[1] + s[2]);
  double nuc = -1.0;
  const Matrix y = svt(a, tau, &nuc);
  const Vector sy = singular_values(y);
  CHECK(sy[0] == doctest::Approx(s[0] - tau));
  CHECK(sy[1] == doctest::Approx(s[1] - tau));
  CHECK(sy[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(nuc == doctest::Approx(s[0] + s[1] - 2 * tau));
  // A value sitting exactly on the threshold maps to zero.
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  CHECK(svt(d, 1.0).isApprox(Matrix((Matrix(2, 2) << 1.0, 0.0, 0.0, 0.0).finished())));
  CHECK(svt(a, 0.0).isApprox(a, 1e-12));
  CHECK_THROWS_AS(svt(a, -0.1), std::invalid_argument);
}

TEST_CASE("soft threshold is entrywise shrinkage") {
  Matrix a(1, 4);
  a << -3.0, -0.5, 0.5, 2.0;
  Matrix want(1, 4);
  want << -2.0, 0.0, 0.0, 1.0;
  CHECK(soft_threshold(a, 1.0).isApprox(want));
}

TEST_CASE("non-finite input is rejected") {
  Matrix a = Matrix::Ones(2, 2);
  a(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd(a), std::invalid_argument);
  CHECK_THROWS_AS(nuclear_norm(a), std::invalid_argument);
  CHECK_THROWS_AS(svt(a, 1.0), std::invalid_argument);
  CHECK_FALSE(all_finite(a));
}

TEST_CASE("rng streams are reproducible and separated") {
  Rng a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  const double x = a.normal();
  CHECK(x == b.normal());
  CHECK(x != c.normal());
  CHECK(x != d.normal());
  CHECK(mix_seed(1, 2, 3) != mix_seed(1, 3, 2));
  CHECK(mix_seed(1, 2, 3) == mix_seed(1, 2, 3));
}

TEST_CASE("DMAT1 round trip is bit exact and row-major") {
  Matrix a(2, 3);
  a << 1.0, -0.0, 1e-300, std::nextafter(1.0, 2.0), -7.25, 3.0;
  std::stringstream ss;
  write_dmat(ss, a);
  const std::string bytes = ss.str();
  CHECK(bytes.rfind("DMAT1 2 3\n", 0) == 0);
  double first_two[2];
  std::memcpy(first_two, bytes.data() + 10, sizeof first_two);
  CHECK(first_two[1] == -0.0);  // (0,1) follows (0,0) in row-major order
  const Matrix b = read_dmat(ss);
  CHECK(b.rows() == 2);
  CHECK(b.cols() == 3);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 6) == 0);
}

TEST_CASE("truncated or malformed files raise IoError") {
  std::stringstream bad("DMAT2 1 1\n");
  CHECK_THROWS_AS(read_dmat(bad), IoError);
  std::stringstream ss;
  write_dmat(ss, Matrix::Ones(3, 3));
  std::string s = ss.str();
  s.resize(s.size() - 4);
  std::stringstream cut(s);
  CHECK_THROWS_AS(read_dmat(cut), IoError);
  std::stringstream supp("SUPP1 3 3 2\n0 0\n");
  CHECK_THROWS_AS(read_support(supp), IoError);
  CHECK_THROWS_AS(read_dmat(std::filesystem::path("/nonexistent/x.dmat")), IoError);
}

TEST_CASE("support and basis round trips") {
  const SupportSet omega = SupportSet::from_entries(3, 4, {{2, 1}, {0, 3}, {1, 0}});
  std::stringstream ss;
  write_support(ss, omega);
  CHECK(ss.str() == "SUPP1 3 4 3\n0 3\n1 0\n2 1\n");
  CHECK((read_support(ss).mask() == omega.mask()).all());

  Matrix g0 = Matrix::Zero(2, 2), g1 = Matrix::Zero(2, 2);
  g0(0, 0) = 1.0;
  g1(1, 0) = 0.6;
  g1(0, 1) = 0.8;
  const SpanBasis basis = SpanBasis::from_elements({g0, g1});
  std::stringstream sb;
  write_basis(sb, basis);
  const SpanBasis back = read_basis(sb);
  CHECK(back.size() == 2);
  CHECK(back.element(1).isApprox(g1));

  std::stringstream empty;
  write_basis(empty, SpanBasis(3, 2));
  const SpanBasis e = read_basis(empty);
  CHECK(e.size() == 0);
  CHECK(e.rows() == 3);
}
