// Copyright 2026 The dtg Authors
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

#pragma once

#include <stdexcept>

namespace dtg {

/// A physical computation failed to converge or left its domain of validity.
/// The command-line front end maps these to exit status 2.
class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

/// Omega_2(t)^2 <= 0: the zigzag mode went soft.
class ImaginaryFrequencyError : public PhysicsError {
 public:
  using PhysicsError::PhysicsError;
};

}  // namespace dtg
