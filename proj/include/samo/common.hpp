#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace samo {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

// Contract violations on operation inputs.
struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation invoked on an object in the wrong state (e.g. untrained checkpoint).
struct InvalidState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or unwritable files.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File exists but its content is corrupt (bad magic, checksum mismatch).
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structured text that does not parse.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration (unknown keys, invalid values).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model construction problems (e.g. rank-deficient attribute map).
struct ModelConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss during training.
struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Autoregressive generation produced no usable motion tokens.
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_arg(bool cond, const std::string& msg) {
  if (!cond) throw InvalidArgument(msg);
}

// Deterministic RNG. Gaussians come from an explicit Box-Muller transform so
// streams do not depend on the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    check_arg(n > 0, "uniform_int: n must be positive");
    return static_cast<int>(gen_() % static_cast<uint64_t>(n));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  uint64_t next() { return gen_(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(uniform_int(i + 1))]);
    }
  }

  std::string state() const {
    std::ostringstream os;
    os << gen_ << ' ' << (have_spare_ ? 1 : 0) << ' ' << spare_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    int flag = 0;
    is >> gen_ >> flag >> spare_;
    if (!is) throw ParseError("Rng::set_state: malformed state string");
    have_spare_ = flag != 0;
  }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a, used for config hashes in run metadata.
inline uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace samo
