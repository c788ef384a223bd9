#pragma once

#include <string>

#include "zermelo/hjb.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

/// One run configuration: wind model, airspeed, origin ball, grid and solver
/// settings. Loaded from JSON; the wind may be inline, a file reference, or
/// one of the built-in test cases.
struct Scenario {
  WindField wind = make_case_a();
  std::string wind_source = "case_a";
  double airspeed = 1.0;
  Point2 origin{0.0, 0.5};
  double ball_radius = 0.1;
  int n = 101;
  double tol = 1e-10;
  SweepScheme scheme = SweepScheme::GaussSeidel;

  void validate() const;
};

/// Wind model from a JSON value:
///   {"type":"constant","vector":[wx,wy]}
///   {"type":"vortex","center":[x,y],"spin":-1,"R":0.333,"beta":3,"scale":0.5}
///   {"type":"vortex_array","vortices":[{...},...]}
/// or {"type":"case","label":"a".."d"}.
WindField wind_from_json(const std::string& json_text);
WindField load_wind_file(const std::string& path);

Scenario load_scenario(const std::string& path);
Scenario scenario_for_case(char label, int n = 101);

SweepScheme scheme_from_string(const std::string& name);
std::string scheme_to_string(SweepScheme scheme);

}  // namespace zermelo
