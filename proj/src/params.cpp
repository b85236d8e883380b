#include "landau/params.hpp"

#include <cmath>

#include "landau/error.hpp"

namespace landau {

std::string to_string(Species s) { return s == Species::A ? "A" : "B"; }

std::string to_string(SpeciesPair p) { return to_string(p.X) + to_string(p.Y); }

SpeciesPair parse_pair(const std::string& s)
{
  if (s == "AA") return SpeciesPair::AA();
  if (s == "AB") return SpeciesPair::AB();
  if (s == "BB") return SpeciesPair::BB();
  if (s == "BA") return SpeciesPair::BA();
  throw ConfigError("unknown species pair '" + s + "' (expected AA, AB, BB or BA)");
}

void ModelParams::validate() const
{
  if (!(m_A > 0.0) || !std::isfinite(m_A)) throw ConfigError("m_A must be a positive number");
  if (!(m_B > 0.0) || !std::isfinite(m_B)) throw ConfigError("m_B must be a positive number");
  if (!(gamma >= -2.0 && gamma <= 1.0))
    throw ConfigError("gamma must lie in [-2, 1], got " + std::to_string(gamma));
}

}  // namespace landau
