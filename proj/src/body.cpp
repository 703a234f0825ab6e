#include "samo/body.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace samo::body {

namespace {

const std::array<const char*, kNumJoints> kJointNames = {
    "pelvis",        "left_hip",      "right_hip",  "spine1",        "left_knee",
    "right_knee",    "spine2",        "left_ankle", "right_ankle",   "spine3",
    "left_foot",     "right_foot",    "neck",       "left_collar",   "right_collar",
    "head",          "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist",    "right_wrist"};

const std::array<int, kNumJoints> kParents = {-1, 0, 0, 0, 1,  2,  3,  4,  5,  6,  7,
                                              8,  9, 9, 9, 12, 13, 14, 16, 17, 18, 19};

constexpr uint64_t kTercileSeed = 0x5ca1ab1eULL;
constexpr int kTercileSamples = 10000;

}  // namespace

const char* joint_name(int joint) {
  check_arg(joint >= 0 && joint < kNumJoints, "joint_name: joint out of range");
  return kJointNames[static_cast<size_t>(joint)];
}

ShapeParams ShapeParams::clamped(double limit) const {
  ShapeParams out;
  out.beta = beta.cwiseMax(-limit).cwiseMin(limit);
  return out;
}

Eigen::Matrix<double, 6, 1> BodyAttributes::as_vector() const {
  Eigen::Matrix<double, 6, 1> v;
  v << height_cm, arm_length_cm, leg_length_cm, chest_circ_cm, waist_circ_cm, hip_circ_cm;
  return v;
}

BodyAttributes BodyAttributes::from_vector(const Eigen::Matrix<double, 6, 1>& v) {
  BodyAttributes a;
  a.height_cm = v[0];
  a.arm_length_cm = v[1];
  a.leg_length_cm = v[2];
  a.chest_circ_cm = v[3];
  a.waist_circ_cm = v[4];
  a.hip_circ_cm = v[5];
  return a;
}

bool BodyAttributes::valid() const {
  const auto v = as_vector();
  return v.allFinite() && (v.array() > 0).all() && height_cm > leg_length_cm;
}

Eigen::Matrix<double, kNumJoints, 3> Skeleton::rest_positions() const {
  Eigen::Matrix<double, kNumJoints, 3> pos;
  pos.row(0).setZero();
  for (int j = 1; j < kNumJoints; ++j) {
    pos.row(j) = pos.row(parent[static_cast<size_t>(j)]) + rest_offsets.row(j);
  }
  const double min_y = pos.col(1).minCoeff();
  pos.col(1).array() -= min_y;
  return pos;
}

Vec Skeleton::bone_lengths() const {
  Vec lens(kNumJoints - 1);
  for (int j = 1; j < kNumJoints; ++j) lens[j - 1] = rest_offsets.row(j).norm();
  return lens;
}

double Skeleton::leg_chain_length() const {
  const double left = rest_offsets.row(kLeftKnee).norm() + rest_offsets.row(kLeftAnkle).norm();
  const double right = rest_offsets.row(kRightKnee).norm() + rest_offsets.row(kRightAnkle).norm();
  return 0.5 * (left + right);
}

double Skeleton::arm_chain_length() const {
  const double left = rest_offsets.row(kLeftElbow).norm() + rest_offsets.row(kLeftWrist).norm();
  const double right = rest_offsets.row(kRightElbow).norm() + rest_offsets.row(kRightWrist).norm();
  return 0.5 * (left + right);
}

bool Skeleton::approx_equal(const Skeleton& other, double tol) const {
  return same_topology(other) &&
         (rest_offsets - other.rest_offsets).cwiseAbs().maxCoeff() <= tol;
}

namespace {

Skeleton make_base_skeleton() {
  Skeleton s;
  s.parent = kParents;
  auto& o = s.rest_offsets;
  o.setZero();
  // Torso 0.815 m above the pelvis, toes 0.885 m below: 1.70 m head-to-toe.
  o.row(kLeftHip) << 0.09, -0.08, 0.0;
  o.row(kRightHip) << -0.09, -0.08, 0.0;
  o.row(kSpine1) << 0.0, 0.12, 0.0;
  o.row(kLeftKnee) << 0.0, -0.40, 0.0;
  o.row(kRightKnee) << 0.0, -0.40, 0.0;
  o.row(kSpine2) << 0.0, 0.155, 0.0;
  o.row(kLeftAnkle) << 0.0, -0.38, 0.0;
  o.row(kRightAnkle) << 0.0, -0.38, 0.0;
  o.row(kSpine3) << 0.0, 0.14, 0.0;
  o.row(kLeftFoot) << 0.0, -0.025, 0.12;
  o.row(kRightFoot) << 0.0, -0.025, 0.12;
  o.row(kNeck) << 0.0, 0.20, 0.0;
  o.row(kLeftCollar) << 0.07, 0.08, 0.0;
  o.row(kRightCollar) << -0.07, 0.08, 0.0;
  o.row(kHead) << 0.0, 0.20, 0.0;
  o.row(kLeftShoulder) << 0.095, 0.015, 0.0;
  o.row(kRightShoulder) << -0.095, 0.015, 0.0;
  o.row(kLeftElbow) << 0.27, 0.0, 0.0;
  o.row(kRightElbow) << -0.27, 0.0, 0.0;
  o.row(kLeftWrist) << 0.25, 0.0, 0.0;
  o.row(kRightWrist) << -0.25, 0.0, 0.0;
  return s;
}

// Blend directions scale bone groups along themselves so chain lengths stay
// affine in beta over the clamp box.
std::vector<Eigen::Matrix<double, kNumJoints, 3>> make_blend_offsets(const Skeleton& base) {
  std::vector<Eigen::Matrix<double, kNumJoints, 3>> blends(
      kShapeDim, Eigen::Matrix<double, kNumJoints, 3>::Zero());
  const auto& o = base.rest_offsets;

  auto scale_joints = [&](int b, std::initializer_list<int> joints, double factor) {
    for (int j : joints) blends[static_cast<size_t>(b)].row(j) = factor * o.row(j);
  };

  // beta0: overall limb scale.
  for (int j = 1; j < kNumJoints; ++j) blends[0].row(j) = 0.04 * o.row(j);
  // beta1: leg length.
  scale_joints(1, {kLeftKnee, kRightKnee, kLeftAnkle, kRightAnkle}, 0.05);
  // beta2: arm length.
  scale_joints(2, {kLeftElbow, kRightElbow, kLeftWrist, kRightWrist}, 0.04);
  // beta3: torso length.
  scale_joints(3, {kSpine1, kSpine2, kSpine3, kNeck}, 0.03);
  // beta4: shoulder width.
  scale_joints(4, {kLeftCollar, kRightCollar, kLeftShoulder, kRightShoulder}, 0.06);
  // beta5: hip width.
  scale_joints(5, {kLeftHip, kRightHip}, 0.06);
  // beta6: head/neck size.
  scale_joints(6, {kHead}, 0.05);
  // beta7: foot size.
  scale_joints(7, {kLeftFoot, kRightFoot}, 0.15);
  // beta8, beta9: circumference-only directions (no skeletal effect).
  return blends;
}

}  // namespace

ShapeModel ShapeModel::default_model() {
  ShapeModel m;
  m.base_ = make_base_skeleton();
  m.blend_offsets_ = make_blend_offsets(m.base_);

  // Circumference rows; the geometric rows (height/arm/leg) are derived in
  // finalize() from the blend construction.
  m.attr_matrix_ = Mat::Zero(6, kShapeDim);
  m.attr_intercept_ = Vec::Zero(6);
  m.attr_intercept_[3] = 95.0;  // chest
  m.attr_intercept_[4] = 80.0;  // waist
  m.attr_intercept_[5] = 97.0;  // hip
  m.attr_matrix_(3, 0) = 2.0;
  m.attr_matrix_(3, 4) = 1.5;
  m.attr_matrix_(3, 8) = 6.0;
  m.attr_matrix_(4, 0) = 1.0;
  m.attr_matrix_(4, 8) = 2.5;
  m.attr_matrix_(4, 9) = 7.0;
  m.attr_matrix_(5, 0) = 0.8;
  m.attr_matrix_(5, 5) = 1.2;
  m.attr_matrix_(5, 8) = -1.0;
  m.attr_matrix_(5, 9) = 5.0;

  m.finalize();
  return m;
}

Skeleton ShapeModel::skeleton_from_shape(const ShapeParams& beta) const {
  check_arg(beta.beta.size() == static_cast<int>(blend_offsets_.size()),
            "skeleton_from_shape: beta dimension mismatch");
  check_arg(beta.is_finite(), "skeleton_from_shape: beta must be finite");
  Skeleton s = base_;
  for (size_t i = 0; i < blend_offsets_.size(); ++i) {
    s.rest_offsets += beta.beta[static_cast<int>(i)] * blend_offsets_[i];
  }
  return s;
}

BodyAttributes ShapeModel::measure_attributes(const ShapeParams& beta) const {
  const Skeleton s = skeleton_from_shape(beta);
  const auto pos = s.rest_positions();

  BodyAttributes a;
  a.height_cm = 100.0 * (pos(kHead, 1) - pos.col(1).minCoeff());
  a.arm_length_cm = 100.0 * s.arm_chain_length();
  a.leg_length_cm = 100.0 * s.leg_chain_length();
  const Vec circ = attr_matrix_.bottomRows(3) * beta.beta + attr_intercept_.tail(3);
  a.chest_circ_cm = circ[0];
  a.waist_circ_cm = circ[1];
  a.hip_circ_cm = circ[2];
  return a;
}

ShapeParams ShapeModel::attributes_to_shape(const BodyAttributes& attrs) const {
  check_arg(attrs.valid(), "attributes_to_shape: attributes must be positive and finite");
  Eigen::JacobiSVD<Mat> svd(attr_matrix_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.rank() < attr_matrix_.rows()) {
    throw ModelConfigError("attributes_to_shape: attribute map is rank deficient");
  }

  const Vec target = attrs.as_vector() - attr_intercept_;
  // Ridge-regularized least squares; the tiny ridge selects the minimum-norm
  // solution of the underdetermined system and keeps the problem strictly
  // convex under the box constraint.
  const double ridge = 1e-8;
  const int b_dim = static_cast<int>(attr_matrix_.cols());
  const Mat gram = attr_matrix_.transpose() * attr_matrix_ + ridge * Mat::Identity(b_dim, b_dim);
  const Vec rhs = attr_matrix_.transpose() * target;
  Vec beta = gram.ldlt().solve(rhs);

  if ((beta.array().abs() > kBetaClamp).any()) {
    // Projected coordinate descent on 0.5|A b - t|^2 + 0.5*ridge*|b|^2 over the box.
    beta = beta.cwiseMax(-kBetaClamp).cwiseMin(kBetaClamp);
    for (int sweep = 0; sweep < 20000; ++sweep) {
      double max_delta = 0.0;
      for (int i = 0; i < b_dim; ++i) {
        const double g = gram.row(i) * beta - rhs[i];
        const double hii = gram(i, i);
        double updated = beta[i] - g / hii;
        updated = std::clamp(updated, -kBetaClamp, kBetaClamp);
        max_delta = std::max(max_delta, std::abs(updated - beta[i]));
        beta[i] = updated;
      }
      if (max_delta < 1e-14) break;
    }
  }
  return ShapeParams{beta};
}

std::string ShapeModel::render_shape_text(const BodyAttributes& attrs, TextMode mode) const {
  check_arg(attrs.valid(), "render_shape_text: invalid attributes");
  if (mode == TextMode::kNumeric) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "a person %lld cm tall with %lld cm arms, %lld cm legs, %lld cm chest, "
                  "%lld cm waist, %lld cm hips",
                  (long long)std::llround(attrs.height_cm), (long long)std::llround(attrs.arm_length_cm),
                  (long long)std::llround(attrs.leg_length_cm), (long long)std::llround(attrs.chest_circ_cm),
                  (long long)std::llround(attrs.waist_circ_cm), (long long)std::llround(attrs.hip_circ_cm));
    return buf;
  }
  const auto bucket = [&](int row, double value) -> const char* {
    if (value < terciles_(row, 0)) return "small";
    if (value > terciles_(row, 1)) return "large";
    return "average";
  };
  const auto v = attrs.as_vector();
  std::string out = "a person with ";
  out += bucket(0, v[0]);
  out += " height, ";
  out += bucket(1, v[1]);
  out += " arms, ";
  out += bucket(2, v[2]);
  out += " legs, ";
  out += bucket(3, v[3]);
  out += " chest, ";
  out += bucket(4, v[4]);
  out += " waist, and ";
  out += bucket(5, v[5]);
  out += " hips";
  return out;
}

void ShapeModel::finalize() {
  // The geometric attribute rows are exact finite differences: chain lengths
  // and vertical spans are affine in beta by the blend construction.
  const Vec base_attrs = [&] {
    Vec v(6);
    const BodyAttributes a = measure_attributes(ShapeParams{});
    v = a.as_vector();
    return v;
  }();
  attr_intercept_.head(3) = base_attrs.head(3);
  for (int i = 0; i < kShapeDim; ++i) {
    ShapeParams unit;
    unit.beta[i] = 1.0;
    const Vec moved = measure_attributes(unit).as_vector();
    attr_matrix_.block(0, i, 3, 1) = (moved - base_attrs).head(3);
  }

  Eigen::JacobiSVD<Mat> svd(attr_matrix_);
  if (svd.rank() < 6) {
    throw ModelConfigError("ShapeModel: attribute map must have full row rank");
  }

  // Tercile boundaries of each attribute under the sampling distribution.
  Rng rng(kTercileSeed);
  Mat samples(kTercileSamples, 6);
  for (int n = 0; n < kTercileSamples; ++n) {
    samples.row(n) = measure_attributes(sample_shape(rng)).as_vector().transpose();
  }
  terciles_ = Mat::Zero(6, 2);
  for (int a = 0; a < 6; ++a) {
    std::vector<double> col(samples.col(a).data(), samples.col(a).data() + kTercileSamples);
    std::sort(col.begin(), col.end());
    terciles_(a, 0) = col[kTercileSamples / 3];
    terciles_(a, 1) = col[2 * kTercileSamples / 3];
  }
}

ShapeParams sample_shape(uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample_shape(rng);
}

ShapeParams sample_shape(Rng& rng) {
  ShapeParams p;
  for (int i = 0; i < kShapeDim; ++i) {
    p.beta[i] = std::clamp(rng.normal(), -kBetaClamp, kBetaClamp);
  }
  return p;
}

namespace {

nlohmann::json matrix_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("ShapeModel: expected matrix rows");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols) throw ParseError("ShapeModel: ragged matrix");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json ShapeModel::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["joint_names"] = nlohmann::json::array();
  j["parents"] = nlohmann::json::array();
  for (int i = 0; i < kNumJoints; ++i) {
    j["joint_names"].push_back(kJointNames[static_cast<size_t>(i)]);
    j["parents"].push_back(base_.parent[static_cast<size_t>(i)]);
  }
  j["base_offsets"] = matrix_to_json(base_.rest_offsets);
  j["blend_offsets"] = nlohmann::json::array();
  for (const auto& b : blend_offsets_) j["blend_offsets"].push_back(matrix_to_json(b));
  j["attr_matrix"] = matrix_to_json(attr_matrix_);
  j["attr_intercept"] = std::vector<double>(attr_intercept_.data(),
                                            attr_intercept_.data() + attr_intercept_.size());
  j["terciles"] = matrix_to_json(terciles_);
  j["numeric_template"] =
      "a person {height} cm tall with {arm} cm arms, {leg} cm legs, {chest} cm chest, "
      "{waist} cm waist, {hip} cm hips";
  j["categorical_template"] =
      "a person with {height} height, {arm} arms, {leg} legs, {chest} chest, {waist} waist, "
      "and {hip} hips";
  return j;
}

ShapeModel ShapeModel::from_json(const nlohmann::json& j) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != 1) {
    throw ParseError("ShapeModel: unsupported format_version");
  }
  ShapeModel m;
  for (int i = 0; i < kNumJoints; ++i) {
    m.base_.parent[static_cast<size_t>(i)] = j.at("parents")[static_cast<size_t>(i)].get<int>();
  }
  m.base_.rest_offsets = matrix_from_json(j.at("base_offsets"));
  for (const auto& b : j.at("blend_offsets")) {
    m.blend_offsets_.push_back(matrix_from_json(b));
  }
  if (static_cast<int>(m.blend_offsets_.size()) != kShapeDim) {
    throw ParseError("ShapeModel: expected kShapeDim blend offsets");
  }
  m.attr_matrix_ = matrix_from_json(j.at("attr_matrix"));
  const auto intercept = j.at("attr_intercept").get<std::vector<double>>();
  m.attr_intercept_ = Eigen::Map<const Vec>(intercept.data(), static_cast<int>(intercept.size()));
  m.terciles_ = matrix_from_json(j.at("terciles"));
  return m;
}

}  // namespace samo::body
