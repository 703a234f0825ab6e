#include "samo/motion.hpp"

#include <cmath>

namespace samo::motion {

using body::kContactJoints;
using body::kNumJoints;

JointMotion JointMotion::zeros(int frames) {
  JointMotion m;
  m.positions = Mat::Zero(frames, 3 * kNumJoints);
  m.rotations = Mat::Zero(frames, 4 * kNumJoints);
  for (int t = 0; t < frames; ++t) {
    for (int j = 0; j < kNumJoints; ++j) m.rotations(t, 4 * j) = 1.0;  // identity quats
  }
  return m;
}

void JointMotion::validate() const {
  check_arg(frames() >= 1, "JointMotion: T >= 1 required");
  check_arg(positions.cols() == 3 * kNumJoints && rotations.cols() == 4 * kNumJoints,
            "JointMotion: unexpected column count");
  check_arg(positions.allFinite() && rotations.allFinite(), "JointMotion: non-finite values");
  for (int t = 0; t < frames(); ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      const double n = rotations.block<1, 4>(t, 4 * j).norm();
      check_arg(std::abs(n - 1.0) <= 1e-6, "JointMotion: quaternions must be unit norm");
    }
  }
}

double yaw_of(const Quat& q) {
  const Vec3 fwd = q * Vec3::UnitZ();
  if (fwd.head<1>().norm() + std::abs(fwd.z()) < 1e-12) return 0.0;
  return std::atan2(fwd.x(), fwd.z());
}

void forward_kinematics(const body::Skeleton& skeleton, const Quat* local_rots,
                        const Vec3& root_position, Vec3* out_positions) {
  Quat global[kNumJoints];
  global[0] = local_rots[0];
  out_positions[0] = root_position;
  for (int j = 1; j < kNumJoints; ++j) {
    const int p = skeleton.parent[static_cast<size_t>(j)];
    global[j] = global[p] * local_rots[j];
    out_positions[j] =
        out_positions[p] + global[p] * skeleton.rest_offsets.row(j).transpose();
  }
}

JointMotion fk_motion(const body::Skeleton& skeleton, const Mat& local_rotations,
                      const Mat& root_positions, double frame_rate) {
  const int t_count = static_cast<int>(local_rotations.rows());
  check_arg(root_positions.rows() == t_count && root_positions.cols() == 3,
            "fk_motion: root positions must be T x 3");
  JointMotion out = JointMotion::zeros(t_count);
  out.frame_rate = frame_rate;
  out.rotations = local_rotations;
  for (int t = 0; t < t_count; ++t) {
    Quat locals[kNumJoints];
    for (int j = 0; j < kNumJoints; ++j) locals[j] = out.rot(t, j);
    Vec3 pos[kNumJoints];
    forward_kinematics(skeleton, locals, root_positions.row(t).transpose(), pos);
    for (int j = 0; j < kNumJoints; ++j) out.set_pos(t, j, pos[j]);
  }
  return out;
}

JointMotion transform_motion(const JointMotion& motion, double yaw, const Vec3& translation) {
  JointMotion out = motion;
  const Eigen::Matrix3d rot = yaw_matrix(yaw);
  const Quat qyaw(Eigen::AngleAxisd(yaw, Vec3::UnitY()));
  for (int t = 0; t < motion.frames(); ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      out.set_pos(t, j, rot * motion.pos(t, j) + translation);
    }
    out.set_rot(t, 0, qyaw * motion.rot(t, 0));
  }
  return out;
}

namespace {
double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}
}  // namespace

JointMotion canonicalize(const JointMotion& motion) {
  const double yaw0 = yaw_of(motion.rot(0, 0));
  const Vec3 root0 = motion.pos(0, 0);
  JointMotion shifted = transform_motion(motion, 0.0, Vec3(-root0.x(), 0.0, -root0.z()));
  return transform_motion(shifted, -yaw0, Vec3::Zero());
}

void rot6d_from_quat(const Quat& q, double* out6) {
  const Eigen::Matrix3d m = q.toRotationMatrix();
  out6[0] = m(0, 0);
  out6[1] = m(1, 0);
  out6[2] = m(2, 0);
  out6[3] = m(0, 1);
  out6[4] = m(1, 1);
  out6[5] = m(2, 1);
}

Quat quat_from_rot6d(const double* in6) {
  Vec3 a(in6[0], in6[1], in6[2]);
  Vec3 b(in6[3], in6[4], in6[5]);
  if (a.norm() < 1e-9) a = Vec3::UnitX();
  a.normalize();
  b -= a.dot(b) * a;
  if (b.norm() < 1e-9) b = std::abs(a.y()) < 0.9 ? a.cross(Vec3::UnitY()).cross(a) : Vec3::UnitZ();
  b.normalize();
  const Vec3 c = a.cross(b);
  Eigen::Matrix3d m;
  m.col(0) = a;
  m.col(1) = b;
  m.col(2) = c;
  return Quat(m).normalized();
}

MotionFeatures features_from_joints(const JointMotion& motion, const body::Skeleton& skeleton,
                                    bool shape_normalized) {
  motion.validate();
  const int t_count = motion.frames();
  check_arg(t_count >= 2, "features_from_joints: T >= 2 required for velocities");
  check_arg(motion.positions.cols() == 3 * skeleton.joint_count(),
            "features_from_joints: joint count mismatch");

  MotionFeatures out;
  out.is_shape_normalized = shape_normalized;
  out.data = Mat::Zero(t_count, layout::kDim);

  Vec yaw(t_count);
  for (int t = 0; t < t_count; ++t) yaw[t] = yaw_of(motion.rot(t, 0));

  const Mat contacts = foot_contact_labels(motion, 0.05, 0.002);

  for (int t = 0; t < t_count; ++t) {
    auto row = out.data.row(t);
    const Eigen::Matrix3d inv_face = yaw_matrix(-yaw[t]);
    const Vec3 root = motion.pos(t, 0);

    if (t + 1 < t_count) {
      row[layout::kRootAngVel] = wrap_angle(yaw[t + 1] - yaw[t]);
      const Vec3 v = inv_face * (motion.pos(t + 1, 0) - root);
      row[layout::kRootLinVel] = v.x();
      row[layout::kRootLinVel + 1] = v.z();
    }
    row[layout::kRootHeight] = root.y();

    for (int j = 1; j < kNumJoints; ++j) {
      const Vec3 rel = inv_face * (motion.pos(t, j) - Vec3(root.x(), 0.0, root.z()));
      row.segment<3>(layout::kRicPos + 3 * (j - 1)) = rel.transpose();
    }

    for (int j = 1; j < kNumJoints; ++j) {
      double r6[6];
      rot6d_from_quat(motion.rot(t, j), r6);
      for (int k = 0; k < 6; ++k) row[layout::kRot6d + 6 * (j - 1) + k] = r6[k];
    }

    if (t + 1 < t_count) {
      for (int j = 0; j < kNumJoints; ++j) {
        const Vec3 v = inv_face * (motion.pos(t + 1, j) - motion.pos(t, j));
        row.segment<3>(layout::kLocalVel + 3 * j) = v.transpose();
      }
    }

    row.segment<4>(layout::kContacts) = contacts.row(t);
  }
  // Last frame copies the previous velocity channels.
  out.data(t_count - 1, layout::kRootAngVel) = out.data(t_count - 2, layout::kRootAngVel);
  out.data.block(t_count - 1, layout::kRootLinVel, 1, 2) =
      out.data.block(t_count - 2, layout::kRootLinVel, 1, 2);
  out.data.block(t_count - 1, layout::kLocalVel, 1, 3 * kNumJoints) =
      out.data.block(t_count - 2, layout::kLocalVel, 1, 3 * kNumJoints);
  return out;
}

JointMotion joints_from_features(const MotionFeatures& feats, const body::Skeleton& skeleton) {
  check_arg(feats.data.cols() == layout::kDim, "joints_from_features: bad layout");
  check_arg(feats.data.allFinite(), "joints_from_features: non-finite features");
  (void)skeleton;
  const int t_count = feats.frames();
  JointMotion out = JointMotion::zeros(t_count);

  double yaw = 0.0;
  Vec3 root_xz = Vec3::Zero();
  for (int t = 0; t < t_count; ++t) {
    const auto row = feats.data.row(t);
    const Eigen::Matrix3d face = yaw_matrix(yaw);
    const Vec3 root(root_xz.x(), row[layout::kRootHeight], root_xz.z());
    out.set_pos(t, 0, root);
    out.set_rot(t, 0, Quat(Eigen::AngleAxisd(yaw, Vec3::UnitY())));

    for (int j = 1; j < kNumJoints; ++j) {
      const Vec3 rel = row.segment<3>(layout::kRicPos + 3 * (j - 1)).transpose();
      out.set_pos(t, j, face * rel + Vec3(root.x(), 0.0, root.z()));
      double r6[6];
      for (int k = 0; k < 6; ++k) r6[k] = row[layout::kRot6d + 6 * (j - 1) + k];
      out.set_rot(t, j, quat_from_rot6d(r6));
    }

    if (t + 1 < t_count) {
      const Vec3 vel(row[layout::kRootLinVel], 0.0, row[layout::kRootLinVel + 1]);
      root_xz += face * vel;
      yaw += row[layout::kRootAngVel];
    }
  }
  return out;
}

JointMotion normalize_shape(const JointMotion& motion, const body::Skeleton& source,
                            const body::Skeleton& canonical) {
  check_arg(source.same_topology(canonical), "normalize_shape: topology mismatch");
  motion.validate();
  const int t_count = motion.frames();

  const double src_leg = source.leg_chain_length();
  check_arg(src_leg > 1e-9, "normalize_shape: degenerate source skeleton");
  const double ratio = canonical.leg_chain_length() / src_leg;

  Mat roots(t_count, 3);
  for (int t = 0; t < t_count; ++t) {
    roots.row(t) = ratio * motion.pos(t, 0).transpose();
  }
  JointMotion out = fk_motion(canonical, motion.rotations, roots, motion.frame_rate);

  double min_foot = std::numeric_limits<double>::infinity();
  for (int t = 0; t < t_count; ++t) {
    for (int j : kContactJoints) min_foot = std::min(min_foot, out.pos(t, j).y());
  }
  out.positions.col(1).array() -= min_foot;
  for (int j = 1; j < kNumJoints; ++j) {
    out.positions.col(3 * j + 1).array() -= min_foot;
  }
  // col(1) above already shifted the root; undo the double shift on joint 0.
  out.positions.col(1).array() += 0.0;
  return out;
}

Mat foot_contact_labels(const JointMotion& motion, double height_thresh_m,
                        double vel_thresh_m_per_frame) {
  check_arg(motion.frames() >= 2, "foot_contact_labels: T >= 2 required");
  const int t_count = motion.frames();
  Mat labels = Mat::Zero(t_count, 4);
  for (int t = 0; t + 1 < t_count; ++t) {
    for (int c = 0; c < 4; ++c) {
      const int j = kContactJoints[static_cast<size_t>(c)];
      const double h = motion.pos(t, j).y();
      const double v = (motion.pos(t + 1, j) - motion.pos(t, j)).norm();
      labels(t, c) = (h < height_thresh_m && v < vel_thresh_m_per_frame) ? 1.0 : 0.0;
    }
  }
  labels.row(t_count - 1) = labels.row(t_count - 2);
  return labels;
}

FeatureStats compute_stats(std::span<const MotionFeatures* const> dataset) {
  check_arg(!dataset.empty(), "compute_stats: empty dataset");
  long total = 0;
  Vec sum = Vec::Zero(layout::kDim);
  for (const auto* f : dataset) {
    check_arg(f != nullptr && f->data.cols() == layout::kDim, "compute_stats: bad features");
    sum += f->data.colwise().sum().transpose();
    total += f->frames();
  }
  check_arg(total > 0, "compute_stats: no frames");
  FeatureStats stats;
  stats.mean = sum / static_cast<double>(total);
  Vec sq = Vec::Zero(layout::kDim);
  for (const auto* f : dataset) {
    sq += (f->data.rowwise() - stats.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  }
  stats.std = (sq / static_cast<double>(total)).array().sqrt().max(1e-6);
  return stats;
}

MotionFeatures apply_stats(const MotionFeatures& feats, const FeatureStats& stats,
                           StatsDirection direction) {
  check_arg(stats.valid(), "apply_stats: invalid stats");
  check_arg(feats.data.cols() == layout::kDim, "apply_stats: bad layout");
  MotionFeatures out = feats;
  if (direction == StatsDirection::kForward) {
    out.data = (feats.data.rowwise() - stats.mean.transpose()).array().rowwise() /
               stats.std.transpose().array();
  } else {
    out.data = (feats.data.array().rowwise() * stats.std.transpose().array()).matrix().rowwise() +
               stats.mean.transpose();
  }
  return out;
}

}  // namespace samo::motion
