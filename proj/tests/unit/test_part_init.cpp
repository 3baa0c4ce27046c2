#include "oracles.hpp"

#include "dexforge/mesh_primitives.hpp"
#include "dexforge/part_init.hpp"

#include <doctest.h>

using namespace dexforge;

namespace {

Transform random_rigid(Rng& rng) {
  Transform tf = Transform::Identity();
  tf.linear() = Quat(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized().toRotationMatrix();
  tf.translation() = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return tf;
}

const PartAnalysis& find(const std::vector<PartAnalysis>& parts, int id) {
  for (const auto& p : parts) {
    if (p.part == id) return p;
  }
  throw std::runtime_error("missing part");
}

double angle_deg(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0)) * 180.0 / M_PI;
}

struct PalmWorld {
  Vec3 origin, front, up;
};

PalmWorld palm_world(const HandModel& hand, const GraspPose& pose) {
  const Mat3 r = pose.rotation.toRotationMatrix();
  return {pose.translation + r * hand.palm().origin, r * hand.palm().front, r * hand.palm().up};
}

}  // namespace

TEST_CASE("category fixtures") {
  const ClassifyOptions options;
  CHECK(find(analyze_parts(fixtures::lid_object(), options, 1), 0).category == PartCategory::LidLike);
  CHECK(find(analyze_parts(fixtures::disk_object(), options, 1), 0).category == PartCategory::DiskLike);
  CHECK(find(analyze_parts(fixtures::l_bracket(), options, 1), 0).category == PartCategory::LShaped);
  CHECK(find(analyze_parts(fixtures::solid_bar(), options, 1), 0).category == PartCategory::ShaftLike);
  CHECK(find(analyze_parts(fixtures::unit_cube(), options, 1), 0).category == PartCategory::ShaftLike);
}

TEST_CASE("bundled objects classify as expected") {
  const auto bottle = load_mesh(oracle::data_path("bottle.obj"), oracle::data_path("bottle.parts.json"));
  const auto b = analyze_parts(bottle, {}, 0);
  CHECK(find(b, 0).category == PartCategory::ShaftLike);
  CHECK(find(b, 1).category == PartCategory::LidLike);
  const auto hammer = load_mesh(oracle::data_path("hammer.obj"), oracle::data_path("hammer.parts.json"));
  const auto h = analyze_parts(hammer, {}, 0);
  CHECK(find(h, 0).category == PartCategory::ShaftLike);
  CHECK(find(h, 1).category == PartCategory::ShaftLike);
}

TEST_CASE("principal directions of the fixtures") {
  const ClassifyOptions options;
  CHECK(angle_deg(find(analyze_parts(fixtures::lid_object(), options, 1), 0).principal_direction, Vec3::UnitZ()) < 2.0);
  CHECK(angle_deg(find(analyze_parts(fixtures::disk_object(), options, 1), 0).principal_direction, -Vec3::UnitZ()) < 2.0);
  CHECK(angle_deg(find(analyze_parts(fixtures::l_bracket(), options, 1), 0).principal_direction, Vec3(1, 0, 1)) < 2.0);

  // shaft: longest axis, signed toward the object centre
  const auto hammer = load_mesh(oracle::data_path("hammer.obj"), oracle::data_path("hammer.parts.json"));
  const auto handle = find(analyze_parts(hammer, options, 1), 1);
  CHECK(angle_deg(handle.principal_direction, Vec3::UnitZ()) < 2.0);
  const Obb object = fit_object_obb(hammer, options.obb_samples, 1);
  CHECK(handle.principal_direction.dot(object.center - handle.obb.center) > 0.0);
}

TEST_CASE("categories and directions are rigidly invariant") {
  Rng rng(99);
  const std::vector<std::pair<PartLabeledMesh, PartCategory>> cases = {
      {fixtures::lid_object(), PartCategory::LidLike},
      {fixtures::disk_object(), PartCategory::DiskLike},
      {fixtures::l_bracket(), PartCategory::LShaped},
      {fixtures::solid_bar(), PartCategory::ShaftLike}};
  for (const auto& [mesh, expected] : cases) {
    const Vec3 base_dir = find(analyze_parts(mesh, {}, 3), 0).principal_direction;
    for (int trial = 0; trial < 5; ++trial) {
      const Transform tf = random_rigid(rng);
      const auto a = find(analyze_parts(transformed(mesh, tf), {}, 3), 0);
      CHECK(a.category == expected);
      if (expected != PartCategory::ShaftLike) {
        // a lone bar has no object-centre offset, so its sign is a convention
        CHECK(angle_deg(a.principal_direction, tf.linear() * base_dir) < 2.0);
      }
    }
  }
}

TEST_CASE("disk without a neighbour has no principal direction") {
  MeshBuilder b;
  b.add_box({0.2, 0.2, 0.01}, Transform::Identity(), 0).name_part(0, "plate");
  const auto mesh = b.build("plate");
  const auto obbs = fit_part_obbs(mesh, 2048, 0);
  const Obb object = fit_object_obb(mesh, 2048, 0);
  CHECK(classify_part(0, obbs, mesh, 0.01 * object.diagonal()) == PartCategory::DiskLike);
  try {
    principal_direction(0, PartCategory::DiskLike, obbs, object, mesh, 0.01 * object.diagonal(), 0.02);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()) == "no adjacent part for disk");
  }
}

TEST_CASE("grasp point sampling respects the category cone") {
  const auto lid_mesh = fixtures::lid_object();
  const auto lid = find(analyze_parts(lid_mesh, {}, 1), 0);
  const auto top = sample_grasp_points(lid_mesh, 0, lid.category, lid.principal_direction, 50, 7);
  REQUIRE(top.size() == 50);
  for (const auto& s : top) {
    CHECK(s.normal.dot(lid.principal_direction) > 0.94);
    CHECK(s.part == 0);
  }

  const auto bar_mesh = fixtures::solid_bar();
  const auto bar = find(analyze_parts(bar_mesh, {}, 1), 0);
  const auto side = sample_grasp_points(bar_mesh, 0, bar.category, bar.principal_direction, 200, 7);
  for (const auto& s : side) {
    CHECK(std::abs(s.normal.dot(bar.principal_direction)) < std::sin(20.0 * M_PI / 180.0));
    CHECK(std::abs(s.point.z()) < 0.15 - 1e-9);  // never on an end cap
  }

  const auto again = sample_grasp_points(bar_mesh, 0, bar.category, bar.principal_direction, 200, 7);
  for (std::size_t i = 0; i < side.size(); ++i) CHECK(side[i].point == again[i].point);

  // aligned sampling on a part without aligned faces fails
  CHECK_THROWS_WITH_AS(sample_grasp_points(bar_mesh, 0, PartCategory::LidLike, Vec3(1, 1, 0).normalized(), 5, 1),
                       "insufficient aligned surface", InputError);
}

TEST_CASE("lid initialisation rolls the palm 24 times about the principal direction") {
  const HandModel hand = load_hand(oracle::data_path("simple_hand.json"));
  const auto mesh = fixtures::lid_object();
  const auto lid = find(analyze_parts(mesh, {}, 1), 0);
  const auto points = sample_grasp_points(mesh, 0, lid.category, lid.principal_direction, 1, 3);
  const JitterConfig jitter;
  const auto poses = init_palm_poses(lid, points, hand, Split::Wrap, jitter, 5);
  REQUIRE(poses.size() == 24);
  const PalmWorld first = palm_world(hand, poses[0].pose);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    const PalmWorld p = palm_world(hand, poses[k].pose);
    CHECK((p.origin - first.origin).norm() < 1e-12);
    CHECK((p.front - first.front).norm() < 1e-12);
    // consecutive rolls are 15 degrees apart about the principal direction
    const double roll = std::atan2(first.up.cross(p.up).dot(lid.principal_direction), first.up.dot(p.up));
    double expected = 360.0 * k / 24.0;
    if (expected > 180.0) expected -= 360.0;
    CHECK(roll * 180.0 / M_PI == doctest::Approx(expected).epsilon(1e-9));
    CHECK(((p.origin - points[0].point) - jitter.retreat * lid.principal_direction).norm() < 1e-12);
  }
}

TEST_CASE("initial poses face their grasp points and respect the templates") {
  const HandModel hand = load_hand(oracle::data_path("simple_hand.json"));
  const auto hammer = load_mesh(oracle::data_path("hammer.obj"), oracle::data_path("hammer.parts.json"));
  const auto bottle = load_mesh(oracle::data_path("bottle.obj"), oracle::data_path("bottle.parts.json"));
  const JitterConfig jitter;
  for (const auto* mesh : {&hammer, &bottle}) {
    for (const auto& analysis : analyze_parts(*mesh, {}, 2)) {
      const auto wrap = make_init_batch(analysis, *mesh, hand, Split::Wrap, jitter, 64, 11);
      const auto pinch = make_init_batch(analysis, *mesh, hand, Split::Pinch, jitter, 64, 11);
      const auto again = make_init_batch(analysis, *mesh, hand, Split::Wrap, jitter, 64, 11);
      REQUIRE(wrap.size() == 64);
      REQUIRE(pinch.size() == 64);
      for (std::size_t i = 0; i < wrap.size(); ++i) {
        const PalmWorld p = palm_world(hand, wrap[i].pose);
        const Vec3 to_point = wrap[i].grasp_point - p.origin;
        CHECK(p.front.dot(to_point) > 0.99 * to_point.norm());
        CHECK(std::abs(wrap[i].pose.rotation.norm() - 1.0) < 1e-9);
        CHECK(wrap[i].pose.theta == hand.wrap_template());
        CHECK(pinch[i].pose.theta == hand.pinch_template());
        CHECK((hand.clamp(wrap[i].pose.theta) - wrap[i].pose.theta).norm() == 0.0);
        // same palm placement for both splits
        CHECK(wrap[i].pose.translation == pinch[i].pose.translation);
        CHECK(wrap[i].pose.rotation.coeffs() == pinch[i].pose.rotation.coeffs());
        CHECK(wrap[i].pose.translation == again[i].pose.translation);
        CHECK(wrap[i].pose.rotation.coeffs() == again[i].pose.rotation.coeffs());
      }
    }
  }
  CHECK(hand.wrap_template() != hand.pinch_template());
}

TEST_CASE("non-lid jitter stays within its bounds") {
  const HandModel hand = load_hand(oracle::data_path("simple_hand.json"));
  const auto bar_mesh = fixtures::solid_bar();
  const auto bar = find(analyze_parts(bar_mesh, {}, 1), 0);
  const auto points = sample_grasp_points(bar_mesh, 0, bar.category, bar.principal_direction, 20, 4);
  const JitterConfig jitter;
  const auto poses = init_palm_poses(bar, points, hand, Split::Wrap, jitter, 8);
  REQUIRE(poses.size() == 20 * static_cast<std::size_t>(jitter.sideways_samples));
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& gp = points[i / jitter.sideways_samples];
    const PalmWorld p = palm_world(hand, poses[i].pose);
    const double dist = (gp.point - p.origin).norm();
    CHECK(dist >= jitter.retreat - jitter.retreat_noise - 1e-12);
    CHECK(dist <= jitter.retreat + jitter.retreat_noise + 1e-12);
    CHECK(angle_deg(p.front, -gp.normal) <= jitter.sideways_angle_deg + 1e-9);
    // purlicue follows the bar axis
    CHECK(std::abs(p.up.cross(p.front).dot(bar.principal_direction)) > std::cos(jitter.sideways_angle_deg * M_PI / 180.0) * std::cos(jitter.cone_half_angle_deg * M_PI / 180.0) - 1e-9);
  }
}
