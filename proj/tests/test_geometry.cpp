#include "nfseg/geometry.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace nfseg;
using testing::Draw;

namespace {

void check_matrix(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  REQUIRE(got.rows() == want.rows());
  REQUIRE(got.cols() == want.cols());
  for (int r = 0; r < got.rows(); ++r)
    for (int c = 0; c < got.cols(); ++c) CHECK(std::abs(got(r, c) - want(r, c)) < 1e-15);
}

}  // namespace

TEST_CASE("matrix_A at hand-picked points") {
  Mat23 want;
  want << -1, 0, 0, 0, -1, 0;
  check_matrix(geometry::matrix_A({0, 0}), want);
  want << -1, 0, 0.5, 0, -1, -0.2;
  check_matrix(geometry::matrix_A({0.5, -0.2}), want);
  want << -1, 0, 1, 0, -1, 1;
  check_matrix(geometry::matrix_A({1, 1}), want);
}

TEST_CASE("matrix_B at hand-picked points") {
  Mat23 want;
  want << 0, -1, 0, 1, 0, 0;
  check_matrix(geometry::matrix_B({0, 0}), want);
  want << 0, -2, 0, 1, 0, -1;
  check_matrix(geometry::matrix_B({1, 0}), want);
  want << 0, -1, 1, 2, 0, 0;
  check_matrix(geometry::matrix_B({0, 1}), want);
}

TEST_CASE("matrix_C at hand-picked points") {
  Mat28 want;
  want << 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1;
  check_matrix(geometry::matrix_C({0, 0}), want);
  want << 1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 1, 1;
  check_matrix(geometry::matrix_C({1, 1}), want);
  want << 4, 0, 2, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2, 1;
  check_matrix(geometry::matrix_C({2, 0}), want);
}

TEST_CASE("flow_at examples") {
  CHECK(geometry::flow_at({0.3, -0.2}, MotionParams{}, 1.0).norm() == 0.0);
  CHECK(geometry::flow_at({0, 0}, MotionParams{Vec3::Zero(), Vec3(0, 0, 1)}, 1.0).norm() == 0.0);
  const Vec2 u = geometry::flow_at({0, 0}, MotionParams{Vec3(1, 0, 0), Vec3::Zero()}, 0.5);
  CHECK(u.x() == doctest::Approx(-0.5));
  CHECK(u.y() == doctest::Approx(0.0));
}

TEST_CASE("normal_flow_at examples") {
  CHECK(geometry::normal_flow_at({0, 0}, {1, 0}, MotionParams{Vec3(1, 0, 0), Vec3::Zero()}, 0.5) ==
        doctest::Approx(-0.5));
  // u = (3, 4) at the origin comes from t = (-3, -4, 0) at unit depth.
  const MotionParams m{Vec3(-3, -4, 0), Vec3::Zero()};
  CHECK(geometry::normal_flow_at({0, 0}, {0.6, 0.8}, m, 1.0) == doctest::Approx(5.0));
  CHECK(geometry::normal_flow_at({0, 0}, {-0.8, 0.6}, m, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("flow_at matches the written-out motion field") {
  Draw draw(1);
  for (int i = 0; i < 200; ++i) {
    const Vec3 t = draw.vec3(2.0), w = draw.vec3(1.0);
    const ImagePoint p = draw.point(1.0);
    const double rho = draw.uniform(0.1, 3.0);
    const Vec2 got = geometry::flow_at(p, MotionParams{t, w}, rho);
    const Vec2 want = testing::motion_field(p, t, w, rho);
    CHECK((got - want).norm() < 1e-12);
  }
}

TEST_CASE("flow_at is linear in t and in w") {
  Draw draw(2);
  for (int i = 0; i < 100; ++i) {
    const ImagePoint p = draw.point(1.0);
    const double rho = draw.uniform(0.1, 3.0);
    const Vec3 t1 = draw.vec3(1), t2 = draw.vec3(1), w1 = draw.vec3(1), w2 = draw.vec3(1);
    const double a = draw.uniform(-2, 2), b = draw.uniform(-2, 2);
    const Vec2 lhs_t = geometry::flow_at(p, {a * t1 + b * t2, Vec3::Zero()}, rho);
    const Vec2 rhs_t = a * geometry::flow_at(p, {t1, Vec3::Zero()}, rho) + b * geometry::flow_at(p, {t2, Vec3::Zero()}, rho);
    CHECK((lhs_t - rhs_t).norm() < 1e-12);
    const Vec2 lhs_w = geometry::flow_at(p, {Vec3::Zero(), a * w1 + b * w2}, rho);
    const Vec2 rhs_w = a * geometry::flow_at(p, {Vec3::Zero(), w1}, rho) + b * geometry::flow_at(p, {Vec3::Zero(), w2}, rho);
    CHECK((lhs_w - rhs_w).norm() < 1e-12);
  }
}

TEST_CASE("derotate") {
  Draw draw(3);
  SUBCASE("zero rotation leaves n unchanged") {
    const NormalFlowSample s{draw.point(), draw.unit2(), 0.37};
    CHECK(geometry::derotate(s, Vec3::Zero()) == 0.37);
  }
  SUBCASE("pure rotation derotates to zero") {
    for (int i = 0; i < 100; ++i) {
      const Vec3 w = draw.vec3(1.0);
      NormalFlowSample s{draw.point(), draw.unit2(), 0.0};
      s.n = testing::motion_field(s.point, Vec3::Zero(), w, 1.0).dot(s.n0);
      CHECK(std::abs(geometry::derotate(s, w)) < 1e-12);
    }
  }
  SUBCASE("what remains is the translational normal flow") {
    for (int i = 0; i < 100; ++i) {
      const Vec3 t = draw.vec3(1.0), w = draw.vec3(1.0);
      const double rho = draw.uniform(0.2, 2.0);
      NormalFlowSample s{draw.point(), draw.unit2(), 0.0};
      s.n = testing::motion_field(s.point, t, w, rho).dot(s.n0);
      const Vec2 at(-t.x() + s.point.x() * t.z(), -t.y() + s.point.y() * t.z());
      CHECK(std::abs(geometry::derotate(s, w) - rho * at.dot(s.n0)) < 1e-12);
    }
  }
}

TEST_CASE("constraint_row is n0 transposed times C") {
  Draw draw(4);
  const ImagePoint p = draw.point();
  const Vec2 n0 = draw.unit2();
  const auto row = geometry::constraint_row(p, n0);
  const Eigen::Matrix<double, 1, 8> want = n0.transpose() * geometry::matrix_C(p);
  CHECK((row - want).norm() < 1e-15);
}

TEST_CASE("C(p) assemble_a reproduces the planar motion field") {
  Draw draw(5);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 t = draw.vec3(2.0), w = draw.vec3(1.0);
    const Plane plane = draw.plane();
    const PlaneParams a = geometry::assemble_a({t, w}, plane);
    const ImagePoint p = draw.point();
    const Vec2 want = testing::motion_field(p, t, w, testing::inverse_depth(plane, p));
    CHECK((geometry::matrix_C(p) * a - want).norm() < 1e-10);
  }
}
