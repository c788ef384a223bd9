#include "zermelo/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace zermelo {

namespace {

using nlohmann::json;

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, true, true);  // allow comments
  return j;
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Vortex vortex_from(const json& j) {
  Vortex v;
  if (j.contains("center")) v.center = Point2(j["center"][0], j["center"][1]);
  if (j.contains("spin")) v.spin = j["spin"].get<int>();
  if (j.contains("R")) v.radius = j["R"].get<double>();
  if (j.contains("beta")) v.beta = j["beta"].get<double>();
  if (j.contains("gamma")) v.gamma = j["gamma"].get<double>();
  if (j.contains("scale")) v.scale = j["scale"].get<double>();
  return v;
}

WindField wind_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    const auto& w = j.at("vector");
    return WindField::constant(Vector2(w[0], w[1]));
  }
  if (type == "vortex") return WindField::vortex(vortex_from(j));
  if (type == "vortex_array") {
    std::vector<Vortex> vs;
    for (const auto& vj : j.at("vortices")) vs.push_back(vortex_from(vj));
    if (j.contains("bounds")) {
      WindBounds wb{j["bounds"].at("speed").get<double>(), j["bounds"].at("rate").get<double>()};
      return WindField::vortex_array(std::move(vs), wb);
    }
    return WindField::vortex_array(std::move(vs));
  }
  if (type == "case") return make_case(j.at("label").get<std::string>().at(0));
  throw std::invalid_argument("unknown wind type: " + type);
}

}  // namespace

void Scenario::validate() const {
  const double c0 = bounds(wind).speed;
  if (!(c0 < airspeed))
    throw std::invalid_argument("wind speed bound must stay below the airspeed");
  if (origin.x() < 0.0 || origin.x() > 1.0 || origin.y() < 0.0 || origin.y() > 1.0)
    throw std::invalid_argument("origin must lie in the unit box");
  if (!(ball_radius > 0.0) || !(ball_radius < 0.25))
    throw std::invalid_argument("origin ball radius must lie in (0, 0.25)");
  if (n < 11) throw std::invalid_argument("grid resolution must be at least 11");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
}

WindField wind_from_json(const std::string& json_text) { return wind_from(parse(json_text)); }

WindField load_wind_file(const std::string& path) { return wind_from(read_file(path)); }

Scenario load_scenario(const std::string& path) {
  const json j = read_file(path);
  Scenario s;
  if (j.contains("wind")) {
    if (j["wind"].is_string()) {
      // Wind file path, relative to the scenario file.
      const std::filesystem::path base = std::filesystem::path(path).parent_path();
      const std::string wind_path = (base / j["wind"].get<std::string>()).string();
      s.wind = load_wind_file(wind_path);
      s.wind_source = wind_path;
    } else {
      s.wind = wind_from(j["wind"]);
      s.wind_source = "inline";
    }
  }
  if (j.contains("airspeed")) s.airspeed = j["airspeed"].get<double>();
  if (j.contains("origin")) s.origin = Point2(j["origin"][0], j["origin"][1]);
  if (j.contains("ball_radius")) s.ball_radius = j["ball_radius"].get<double>();
  if (j.contains("n")) s.n = j["n"].get<int>();
  if (j.contains("tol")) s.tol = j["tol"].get<double>();
  if (j.contains("scheme")) s.scheme = scheme_from_string(j["scheme"].get<std::string>());
  s.validate();
  return s;
}

Scenario scenario_for_case(char label, int n) {
  Scenario s;
  s.wind = make_case(label);
  s.wind_source = std::string("case_") + label;
  s.n = n;
  s.validate();
  return s;
}

SweepScheme scheme_from_string(const std::string& name) {
  if (name == "jacobi") return SweepScheme::Jacobi;
  if (name == "gauss_seidel") return SweepScheme::GaussSeidel;
  throw std::invalid_argument("unknown sweep scheme: " + name);
}

std::string scheme_to_string(SweepScheme scheme) {
  return scheme == SweepScheme::Jacobi ? "jacobi" : "gauss_seidel";
}

}  // namespace zermelo
