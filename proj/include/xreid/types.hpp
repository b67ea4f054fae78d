// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace xreid {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Body segment labels. Values are the on-disk / one-hot encoding.
enum class BodyPart : int {
  Head = 0,
  Torso = 1,
  LeftArm = 2,
  RightArm = 3,
  LeftLeg = 4,
  RightLeg = 5,
};
inline constexpr int kNumBodyParts = 6;

struct LabeledPoint {
  Vec3 position;
  BodyPart part;
};

enum class Err {
  InvalidParams,
  DegenerateNeighborhood,
  CohortTooLarge,
  SubjectStationary,
  OutOfDomain,
  ShapeMismatch,
  EmptyFrame,
  EmptySequence,
  EmptyInput,
  InsufficientIdentities,
  NoSubjectsFound,
  QueryIdentityMissing,
  SizeLimitExceeded,
  IoError,
  ConfigError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& what)
      : std::runtime_error(std::string(err_name(code)) + ": " + what), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Err code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace xreid
