#pragma once

#include "samo/body.hpp"
#include "samo/common.hpp"

#include <span>

namespace samo::motion {

constexpr double kFrameRate = 20.0;

// Feature layout, columns [begin, begin+width).
namespace layout {
constexpr int kRootAngVel = 0;    // 1: yaw angular velocity, rad/frame
constexpr int kRootLinVel = 1;    // 2: root XZ velocity in the facing frame, m/frame
constexpr int kRootHeight = 3;    // 1: absolute pelvis height, m
constexpr int kRicPos = 4;        // 63: joints 1..21 in the facing frame (x, y abs, z)
constexpr int kRot6d = 67;        // 126: local joint rotations, first two matrix columns
constexpr int kLocalVel = 193;    // 66: per-joint velocity in the facing frame, m/frame
constexpr int kContacts = 259;    // 4: left/right ankle, left/right foot labels
constexpr int kDim = 263;
static_assert(1 + 2 + 1 + 63 + 126 + 66 + 4 == kDim);
}  // namespace layout

struct JointMotion {
  Mat positions;  // T x 66, xyz per joint, meters, Y up
  Mat rotations;  // T x 88, local unit quaternions (w x y z per joint)
  double frame_rate = kFrameRate;

  int frames() const { return static_cast<int>(positions.rows()); }

  Vec3 pos(int t, int j) const { return positions.block<1, 3>(t, 3 * j).transpose(); }
  void set_pos(int t, int j, const Vec3& p) { positions.block<1, 3>(t, 3 * j) = p.transpose(); }
  Quat rot(int t, int j) const {
    return Quat(rotations(t, 4 * j), rotations(t, 4 * j + 1), rotations(t, 4 * j + 2),
                rotations(t, 4 * j + 3));
  }
  void set_rot(int t, int j, const Quat& q) {
    rotations(t, 4 * j) = q.w();
    rotations(t, 4 * j + 1) = q.x();
    rotations(t, 4 * j + 2) = q.y();
    rotations(t, 4 * j + 3) = q.z();
  }

  static JointMotion zeros(int frames);
  void validate() const;
};

struct MotionFeatures {
  Mat data;  // T x layout::kDim
  bool is_shape_normalized = false;

  int frames() const { return static_cast<int>(data.rows()); }
};

struct FeatureStats {
  Vec mean;  // length kDim
  Vec std;   // length kDim, floored at 1e-6

  bool valid() const {
    return mean.size() == layout::kDim && std.size() == layout::kDim && (std.array() > 0).all();
  }
};

enum class StatsDirection { kForward, kInverse };

// Rotation about +Y by angle (radians): x' = c x + s z, z' = -s x + c z.
inline Eigen::Matrix3d yaw_matrix(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Eigen::Matrix3d m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

// Yaw of a rotation, from the image of the +Z axis.
double yaw_of(const Quat& q);

// Forward kinematics for one frame of local rotations.
// positions row written as 22 xyz triples.
void forward_kinematics(const body::Skeleton& skeleton, const Quat* local_rots,
                        const Vec3& root_position, Vec3* out_positions);

JointMotion fk_motion(const body::Skeleton& skeleton, const Mat& local_rotations,
                      const Mat& root_positions, double frame_rate = kFrameRate);

// Rigidly rotate (about Y, around the origin) and translate a motion in XZ.
JointMotion transform_motion(const JointMotion& motion, double yaw, const Vec3& translation);

// Rotate/translate so frame 0 has root yaw 0 and root XZ at the origin.
JointMotion canonicalize(const JointMotion& motion);

MotionFeatures features_from_joints(const JointMotion& motion, const body::Skeleton& skeleton,
                                    bool shape_normalized = false);

JointMotion joints_from_features(const MotionFeatures& feats, const body::Skeleton& skeleton);

// Retarget local rotations to the canonical skeleton; root translation scaled
// by the canonical/source leg-length ratio, then re-grounded so the sequence
// minimum over the four contact joints is zero.
JointMotion normalize_shape(const JointMotion& motion, const body::Skeleton& source,
                            const body::Skeleton& canonical);

// Contact at frame t iff joint height < height_thresh and the frame-to-frame
// displacement norm < vel_thresh. Last frame copies the previous label.
Mat foot_contact_labels(const JointMotion& motion, double height_thresh_m,
                        double vel_thresh_m_per_frame);

FeatureStats compute_stats(std::span<const MotionFeatures* const> dataset);
MotionFeatures apply_stats(const MotionFeatures& feats, const FeatureStats& stats,
                           StatsDirection direction);

// 6D rotation helpers (first two columns of the rotation matrix).
void rot6d_from_quat(const Quat& q, double* out6);
Quat quat_from_rot6d(const double* in6);

}  // namespace samo::motion
