#pragma once

#include "samo/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <string>

namespace samo::body {

constexpr int kNumJoints = 22;
constexpr int kShapeDim = 10;
constexpr double kBetaClamp = 3.0;

// SMPL-style 22-joint ordering shared with the motion representation.
enum JointId : int {
  kPelvis = 0,
  kLeftHip,
  kRightHip,
  kSpine1,
  kLeftKnee,
  kRightKnee,
  kSpine2,
  kLeftAnkle,
  kRightAnkle,
  kSpine3,
  kLeftFoot,
  kRightFoot,
  kNeck,
  kLeftCollar,
  kRightCollar,
  kHead,
  kLeftShoulder,
  kRightShoulder,
  kLeftElbow,
  kRightElbow,
  kLeftWrist,
  kRightWrist,
};

const char* joint_name(int joint);

// The four joints used for ground-contact labels.
constexpr std::array<int, 4> kContactJoints = {kLeftAnkle, kRightAnkle, kLeftFoot, kRightFoot};

struct ShapeParams {
  Vec beta;  // length kShapeDim, dimensionless

  ShapeParams() : beta(Vec::Zero(kShapeDim)) {}
  explicit ShapeParams(Vec b) : beta(std::move(b)) {}

  ShapeParams clamped(double limit = kBetaClamp) const;
  bool is_finite() const { return beta.allFinite(); }
};

struct BodyAttributes {
  double height_cm = 0;
  double arm_length_cm = 0;
  double leg_length_cm = 0;
  double chest_circ_cm = 0;
  double waist_circ_cm = 0;
  double hip_circ_cm = 0;

  Eigen::Matrix<double, 6, 1> as_vector() const;
  static BodyAttributes from_vector(const Eigen::Matrix<double, 6, 1>& v);
  bool valid() const;
};

struct Skeleton {
  std::array<int, kNumJoints> parent{};
  Eigen::Matrix<double, kNumJoints, 3> rest_offsets;  // child-relative, meters

  int joint_count() const { return kNumJoints; }

  // Rest pose (identity rotations) with the root placed so the lowest joint
  // sits on the ground plane y = 0.
  Eigen::Matrix<double, kNumJoints, 3> rest_positions() const;

  // Bone i connects joint i+1 to its parent; 21 entries, meters.
  Vec bone_lengths() const;

  // hip->knee->ankle chain, left/right averaged, meters.
  double leg_chain_length() const;
  // shoulder->elbow->wrist chain, left/right averaged, meters.
  double arm_chain_length() const;

  bool same_topology(const Skeleton& other) const { return parent == other.parent; }
  bool approx_equal(const Skeleton& other, double tol = 1e-12) const;
};

enum class TextMode { kNumeric, kCategorical };

// Linear-blend skeleton plus an affine beta->attributes map. Attribute
// categories (small/average/large) are split at terciles of the sampling
// distribution, precomputed at model build time.
class ShapeModel {
 public:
  static ShapeModel default_model();
  static ShapeModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const Skeleton& base_skeleton() const { return base_; }
  const Mat& attr_matrix() const { return attr_matrix_; }        // 6 x B
  const Vec& attr_intercept() const { return attr_intercept_; }  // 6
  const Mat& terciles() const { return terciles_; }              // 6 x 2

  Skeleton skeleton_from_shape(const ShapeParams& beta) const;
  BodyAttributes measure_attributes(const ShapeParams& beta) const;
  ShapeParams attributes_to_shape(const BodyAttributes& attrs) const;
  std::string render_shape_text(const BodyAttributes& attrs, TextMode mode) const;

  BodyAttributes base_attributes() const { return measure_attributes(ShapeParams{}); }

 private:
  void finalize();  // derive attr rows, rank check, terciles

  Skeleton base_;
  std::vector<Eigen::Matrix<double, kNumJoints, 3>> blend_offsets_;  // size B
  Mat attr_matrix_;
  Vec attr_intercept_;
  Mat terciles_;
};

// Per-component standard normal clamped to [-kBetaClamp, kBetaClamp].
ShapeParams sample_shape(uint64_t rng_seed);
ShapeParams sample_shape(Rng& rng);

}  // namespace samo::body
