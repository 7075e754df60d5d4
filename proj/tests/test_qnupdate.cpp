#include <doctest.h>

#include "lrsqn/eigupdate.hpp"
#include "lrsqn/errors.hpp"
#include "lrsqn/oracle.hpp"
#include "lrsqn/qnupdate.hpp"
#include "test_util.hpp"

using namespace lrsqn;
using namespace lrsqn::testing;

namespace {

CurvaturePair pair_of(const Vector& s, const Vector& y) { return CurvaturePair{s, y}; }

// Positive definite B in eigenpair form with a random pair satisfying s^T y > 0.
struct Instance {
  EigenLmMatrix b;
  CurvaturePair pair;
};

Instance random_instance(Index n, Index r, std::mt19937_64& rng) {
  Vector off(r);
  for (Index i = 0; i < r; ++i) off(i) = uniform(-0.8, 3.0, rng);
  Instance inst{EigenLmMatrix(uniform(1.0, 2.0, rng), random_orthonormal(n, r, rng), off), {}};
  const Vector s = random_vector(n, rng);
  Vector y = random_vector(n, rng);
  if (s.dot(y) <= 0) y = -y;
  y += 0.5 * s;
  inst.pair = {s, y};
  return inst;
}

}  // namespace

TEST_CASE("BFGS with a satisfied secant changes nothing") {
  const EigenLmMatrix b(3, 1.0);
  const Vector e1 = Vector::Unit(3, 0);
  const Matrix d = to_dense(apply_update(broyden_update(b, pair_of(e1, e1), 0.0)));
  CHECK((d - Matrix::Identity(3, 3)).norm() <= 1e-14);
}

TEST_CASE("BFGS and DFP on a parallel pair") {
  const EigenLmMatrix b(3, 1.0);
  const Vector e1 = Vector::Unit(3, 0);
  Matrix expect = Matrix::Identity(3, 3);
  expect(0, 0) = 2.0;
  for (double phi : {0.0, 1.0}) {
    const CompactUpdate upd = broyden_update(b, pair_of(e1, 2.0 * e1), phi);
    CHECK((to_dense(upd) - expect).norm() <= 1e-14);
    CHECK((to_dense(apply_update(upd)) - expect).norm() <= 1e-14);
  }
}

TEST_CASE("compact update matches the dense Broyden formula") {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 30; ++t) {
    const Instance inst = random_instance(15, uniform_int(0, 5, rng), rng);
    const Matrix bd = to_dense(inst.b);
    for (double phi : {0.0, 1.0, 0.5, 0.25}) {
      const CompactUpdate upd = broyden_update(inst.b, inst.pair, phi);
      CHECK(upd.u.cols() == inst.b.rank() + 2);
      const Matrix ref = oracle::dense_broyden(bd, inst.pair.s, inst.pair.y, phi);
      CHECK((to_dense(upd) - ref).norm() <= 1e-10 * ref.norm());
    }
  }
}

TEST_CASE("secant, rank growth and positive definiteness after recompose") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 40; ++t) {
    const Instance inst = random_instance(20, uniform_int(0, 6, rng), rng);
    for (double phi : {0.0, 0.5, 1.0}) {
      const EigenLmMatrix bp = apply_update(broyden_update(inst.b, inst.pair, phi));
      CHECK(bp.rank() <= inst.b.rank() + 2);
      const Vector bs = matvec(bp, inst.pair.s);
      const double bnorm = to_dense(bp).operatorNorm();
      CHECK((bs - inst.pair.y).norm() <= 1e-9 * (bnorm * inst.pair.s.norm() + inst.pair.y.norm()));
      CHECK(spectrum(bp).min() > 0.0);
      CHECK(bp.orthonormality_error() <= 1e-10);
    }
  }
}

TEST_CASE("broyden_update errors") {
  const EigenLmMatrix b(2, 1.0);
  const Vector e1 = Vector::Unit(2, 0), e2 = Vector::Unit(2, 1);
  CHECK_THROWS_AS(broyden_update(b, pair_of(e1, e2), 0.0), ZeroCurvature);
  const EigenLmMatrix singular(0.0, Matrix::Identity(2, 1), Vector::Constant(1, 1.0));
  CHECK_THROWS_AS(broyden_update(singular, pair_of(e2, e2), 0.0), DegenerateQuadForm);
  CHECK_NOTHROW(broyden_update(singular, pair_of(e2, e2), 1.0));
  CHECK_THROWS_AS(broyden_update(b, pair_of(Vector::Ones(3), Vector::Ones(3)), 0.0), DimensionMismatch);
}

TEST_CASE("curvature_check") {
  const Vector e1 = Vector::Unit(3, 0), e2 = Vector::Unit(3, 1);
  CHECK(curvature_check(pair_of(e1, e1), 1e-8));
  CHECK_FALSE(curvature_check(pair_of(e1, -e1), 1e-8));
  CHECK_FALSE(curvature_check(pair_of(e1, e2), 1e-8));
  CHECK_FALSE(curvature_check(pair_of(Vector::Zero(3), e1), 0.0));
  CHECK(curvature_check(pair_of(e1, e1 + 1e-9 * e2), 1e-8));
}

TEST_CASE("inverse BFGS small cases") {
  const EigenLmMatrix h(3, 1.0);
  const Vector e1 = Vector::Unit(3, 0);
  CHECK((to_dense(apply_update(inverse_bfgs_update(h, pair_of(e1, e1)))) - Matrix::Identity(3, 3)).norm() <= 1e-14);
  const Vector s = 2.0 * e1;
  const Matrix ref = oracle::dense_inverse_bfgs(Matrix::Identity(3, 3), s, e1);
  CHECK((to_dense(inverse_bfgs_update(h, pair_of(s, e1))) - ref).norm() <= 1e-12);
  CHECK(ref(0, 0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(inverse_bfgs_update(h, pair_of(e1, -e1)), ZeroCurvature);
}

TEST_CASE("inverse BFGS satisfies the inverse secant equation") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    const Instance inst = random_instance(12, uniform_int(0, 4, rng), rng);
    const EigenLmMatrix hp = apply_update(inverse_bfgs_update(inst.b, inst.pair));
    const Vector hy = matvec(hp, inst.pair.y);
    CHECK((hy - inst.pair.s).norm() <= 1e-10 * (to_dense(hp).norm() * inst.pair.y.norm() + inst.pair.s.norm()));
    const Matrix ref = oracle::dense_inverse_bfgs(to_dense(inst.b), inst.pair.s, inst.pair.y);
    CHECK((to_dense(hp) - ref).norm() <= 1e-10 * ref.norm());
  }
}
