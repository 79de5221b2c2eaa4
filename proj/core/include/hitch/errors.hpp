// Copyright 2026 The hitchsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HITCH_ERRORS_HPP_
#define HITCH_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace hitch {

/// Base class for every error raised by the library.
class HitchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The hitch coincides with one of the robots, so a segment direction is
/// undefined.
class DegenerateSegment : public HitchError {
 public:
  explicit DegenerateSegment(int segment)
      : HitchError("degenerate cable segment " + std::to_string(segment + 1)),
        segment_(segment) {}
  int segment() const { return segment_; }

 private:
  int segment_;
};

class ProjectionDiverged : public HitchError {
 public:
  using HitchError::HitchError;
};

class SamplingFailed : public HitchError {
 public:
  using HitchError::HitchError;
};

class IllConditionedTensionSystem : public HitchError {
 public:
  using HitchError::HitchError;
};

class NonFiniteState : public HitchError {
 public:
  using HitchError::HitchError;
};

/// r1 x r2 (or r3 x r4) vanishes, so the winding-plane normal is undefined.
class DegenerateWindingPlane : public HitchError {
 public:
  using HitchError::HitchError;
};

class ControlInfeasible : public HitchError {
 public:
  using HitchError::HitchError;
};

class DimensionMismatch : public HitchError {
 public:
  using HitchError::HitchError;
};

class GridMismatch : public HitchError {
 public:
  using HitchError::HitchError;
};

class ConfigError : public HitchError {
 public:
  using HitchError::HitchError;
};

class IoError : public HitchError {
 public:
  using HitchError::HitchError;
};

}  // namespace hitch

#endif  // HITCH_ERRORS_HPP_
