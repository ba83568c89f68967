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

#include <numbers>

namespace dtg::constants {

// CODATA 2018.
inline constexpr double elementary_charge = 1.602176634e-19;     // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double hbar = 1.054571817e-34;                  // J s
inline constexpr double atomic_mass_unit = 1.66053906660e-27;    // kg

inline constexpr double pi = std::numbers::pi;

inline constexpr double yb171_mass_u = 170.936;
inline constexpr double yb171_mass = yb171_mass_u * atomic_mass_unit;

// Counter-propagating Raman pair at 355 nm.
inline constexpr double raman_wavelength = 355e-9;
inline constexpr double default_k_eff = 4.0 * pi / raman_wavelength;

inline constexpr double default_nbar = 2.0;

/// Coulomb constant K = q^2 / (4 pi eps0) for a charge q.
constexpr double coulomb_constant(double charge) {
  return charge * charge / (4.0 * pi * vacuum_permittivity);
}

}  // namespace dtg::constants
