#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qploc {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Error taxonomy. Everything the library can reject throws one of these;
// callers that want a single catch point use SolverError.
// ---------------------------------------------------------------------------

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input data fails a structural or sign invariant.
struct InvalidInstance : SolverError {
  using SolverError::SolverError;
};

// A candidate assignment violates feasibility (message names the constraint).
struct InfeasibleSolution : SolverError {
  using SolverError::SolverError;
};

// The instance itself admits no feasible assignment.
struct InfeasibleInstance : SolverError {
  using SolverError::SolverError;
};

// Array/matrix sizes disagree.
struct DimensionMismatch : SolverError {
  using SolverError::SolverError;
};

// Text input could not be parsed (message carries file and line context).
struct ParseError : SolverError {
  using SolverError::SolverError;
};

// A row/column/variable index outside the model.
struct IndexOutOfRange : SolverError {
  using SolverError::SolverError;
};

// A routine was asked to run above its supported size.
struct SizeGuard : SolverError {
  using SolverError::SolverError;
};

// Numerical safeguards tripped (stalled simplex, singular basis, ...).
struct NumericalFailure : SolverError {
  using SolverError::SolverError;
};

// Transportation marginals do not balance.
struct UnbalancedProblem : SolverError {
  using SolverError::SolverError;
};

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles. Kept deliberately minimal; the LP kernel
// uses Eigen internally, instance data does not need more than this.
// ---------------------------------------------------------------------------

struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Mat() = default;
  Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

  double& operator()(int i, int j) { return v[size_t(i) * cols + j]; }
  double operator()(int i, int j) const { return v[size_t(i) * cols + j]; }

  bool square() const { return rows == cols; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 is bit-identical everywhere, but the standard
// <random> distributions are not; generated instances must be byte-identical
// across platforms, so the uniform mappings are done by hand.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

  uint64_t next() {
    // SplitMix64 step then xorshift mix; tiny, portable, passes the usual
    // statistical batteries for this use (instance sampling).
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    return lo + int(next() % uint64_t(hi - lo + 1));
  }

 private:
  uint64_t state_;
};

// ---------------------------------------------------------------------------
// Wall-clock deadline passed down through the solver layers. A default
// constructed deadline never expires.
// ---------------------------------------------------------------------------

class Deadline {
 public:
  Deadline() = default;
  explicit Deadline(double seconds)
      : active_(seconds < kInf),
        end_(std::chrono::steady_clock::now() +
             std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                 std::chrono::duration<double>(seconds < kInf ? seconds : 0))) {}

  bool expired() const {
    return active_ && std::chrono::steady_clock::now() >= end_;
  }

  double remaining() const {
    if (!active_) return kInf;
    return std::chrono::duration<double>(end_ - std::chrono::steady_clock::now())
        .count();
  }

 private:
  bool active_ = false;
  std::chrono::steady_clock::time_point end_{};
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace qploc
