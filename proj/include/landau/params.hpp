#pragma once

#include <string>

#include <Eigen/Dense>

namespace landau {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class Species { A, B };

struct SpeciesPair
{
  Species X;
  Species Y;

  static SpeciesPair AA() { return {Species::A, Species::A}; }
  static SpeciesPair AB() { return {Species::A, Species::B}; }
  static SpeciesPair BB() { return {Species::B, Species::B}; }
  static SpeciesPair BA() { return {Species::B, Species::A}; }

  bool operator==(const SpeciesPair&) const = default;
};

std::string to_string(Species s);
std::string to_string(SpeciesPair p);
SpeciesPair parse_pair(const std::string& s);

/// Physical configuration: masses and potential exponent.
struct ModelParams
{
  double m_A = 1.5;
  double m_B = 1.0;
  double gamma = 0.0;

  /// Throws ConfigError when m_A, m_B <= 0 or gamma outside [-2, 1].
  void validate() const;

  double mass(Species s) const { return s == Species::A ? m_A : m_B; }

  /// Variance of the species Maxwellian: m_A/m_B for A, 1 for B.
  double variance(Species s) const { return s == Species::A ? m_A / m_B : 1.0; }

  /// Reduced mass m_X m_Y / (m_X + m_Y).
  double reduced_mass(SpeciesPair p) const
  {
    const double mx = mass(p.X), my = mass(p.Y);
    return mx * my / (mx + my);
  }
};

/// Japanese bracket <p> = sqrt(1 + |p|^2).
inline double bracket(const Vec3& p) { return std::sqrt(1.0 + p.squaredNorm()); }

}  // namespace landau
