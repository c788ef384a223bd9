#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "zermelo/characteristics.hpp"
#include "zermelo/error_analysis.hpp"
#include "zermelo/io.hpp"
#include "zermelo/scenario.hpp"
#include "zermelo/singularity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace zermelo;

namespace {

struct CommonOptions {
  std::string scenario_path;
  std::string case_label;
  int n_override = 0;
  double tol_override = 0.0;
  std::string scheme_override;
  std::string out_dir = "out";
  std::vector<std::string> formats = {"csv", "json"};
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_scenario = true) {
  auto* sc = cmd->add_option("--scenario", opt.scenario_path, "scenario JSON file");
  auto* ca = cmd->add_option("--case", opt.case_label, "built-in test case a|b|c|d");
  if (needs_scenario) {
    sc->excludes(ca);
    ca->excludes(sc);
  }
  cmd->add_option("--n", opt.n_override, "grid resolution override");
  cmd->add_option("--tol", opt.tol_override, "solver tolerance override");
  cmd->add_option("--scheme", opt.scheme_override, "jacobi or gauss_seidel");
  cmd->add_option("--out-dir", opt.out_dir, "output directory");
  cmd->add_option("--format", opt.formats, "output formats: csv, json, vtk")
      ->delimiter(',');
}

Scenario resolve_scenario(const CommonOptions& opt) {
  Scenario s;
  if (!opt.scenario_path.empty())
    s = load_scenario(opt.scenario_path);
  else if (!opt.case_label.empty())
    s = scenario_for_case(opt.case_label.at(0));
  else
    throw std::invalid_argument("one of --scenario or --case is required");
  if (opt.n_override > 0) s.n = opt.n_override;
  if (opt.tol_override > 0.0) s.tol = opt.tol_override;
  if (!opt.scheme_override.empty()) s.scheme = scheme_from_string(opt.scheme_override);
  s.validate();
  return s;
}

bool wants(const CommonOptions& opt, const std::string& fmt) {
  return std::find(opt.formats.begin(), opt.formats.end(), fmt) != opt.formats.end();
}

std::string out_path(const CommonOptions& opt, const std::string& name) {
  fs::create_directories(opt.out_dir);
  return (fs::path(opt.out_dir) / name).string();
}

json scenario_summary(const Scenario& s) {
  return json{{"wind", s.wind_source},
              {"airspeed", s.airspeed},
              {"origin", {s.origin.x(), s.origin.y()}},
              {"ball_radius", s.ball_radius},
              {"n", s.n},
              {"tol", s.tol},
              {"scheme", scheme_to_string(s.scheme)}};
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << j.dump(2) << "\n";
}

struct Solved {
  TriMesh mesh;
  BoundaryOracle oracle;
  ValueField values;
};

Solved run_solve(const Scenario& s) {
  Solved r;
  r.mesh = build_mesh(s.n, s.origin, s.ball_radius);
  r.oracle = boundary_oracle_g(r.mesh, s.wind, s.airspeed, s.origin, s.ball_radius);
  r.values = solve(r.mesh, s.wind, s.airspeed, r.oracle, s.tol, s.scheme);
  return r;
}

// Error level for trust regions: a fixed value, the closed-form bound, or a
// one-level-finer solve (auto).
double resolve_epsilon(const std::string& mode, const Scenario& s, const Solved& r) {
  if (mode != "auto" && mode != "apriori") return std::stod(mode);
  const WindBounds wb = bounds(s.wind);
  std::vector<int> kinks = detect_singular_simplices(r.values, r.mesh, 25.0, 1e30);
  std::vector<char> premask(r.mesh.num_triangles(), 0);
  for (int t : kinks) premask[t] = 1;
  premask = dilate_mask(r.mesh, premask, 2);
  if (mode == "auto") {
    Scenario fine = s;
    fine.n = 2 * s.n - 1;
    const Solved ref = run_solve(fine);
    const AposterioriResult apost =
        aposteriori_error(r.values, ref.values, r.mesh, ref.mesh, premask);
    return apost.masked * reference_inflation(r.mesh.h, ref.mesh.h);
  }
  int skipped = 0;
  const double hess = hessian_sup_estimate(r.values, r.mesh, premask, &skipped);
  double maxval = 0.0;
  for (double v : r.values.values) maxval = std::max(maxval, std::abs(v));
  return apriori_bound(r.mesh.h, r.mesh.aspect, hess, wb.speed, wb.rate, s.airspeed, maxval);
}

void write_trajectory_outputs(const CommonOptions& opt, const Trajectory& traj,
                              const std::string& stem) {
  if (wants(opt, "csv")) {
    std::ofstream out(out_path(opt, stem + ".csv"));
    out << "t,x,y\n";
    for (size_t k = 0; k < traj.points.size(); ++k)
      out << format_double(traj.times[k]) << "," << format_double(traj.points[k].x()) << ","
          << format_double(traj.points[k].y()) << "\n";
  }
}

int cmd_solve(const CommonOptions& opt) {
  const Scenario s = resolve_scenario(opt);
  const Solved r = run_solve(s);
  if (wants(opt, "csv")) write_values_csv(out_path(opt, "values.csv"), r.mesh, r.values);
  if (wants(opt, "vtk")) {
    std::vector<Vector2> inflow(r.mesh.num_nodes(), Vector2::Zero());
    for (int v = 0; v < r.mesh.num_nodes(); ++v)
      if (r.values.predecessors[v].valid()) inflow[v] = inflow_direction(r.mesh, r.values, v);
    write_vtk(out_path(opt, "values.vtk"), r.mesh, {{"u", &r.values.values}}, "inflow",
              &inflow);
  }
  if (wants(opt, "json")) {
    double max_u = 0.0;
    for (double v : r.values.values) max_u = std::max(max_u, v);
    json j;
    j["scenario"] = scenario_summary(s);
    j["mesh"] = {{"nodes", r.mesh.num_nodes()},
                 {"triangles", r.mesh.num_triangles()},
                 {"h", r.mesh.h},
                 {"h_perp", r.mesh.h_perp},
                 {"aspect", r.mesh.aspect}};
    j["solve"] = {{"sweeps", r.values.report.sweeps},
                  {"final_residual", r.values.report.final_residual},
                  {"max_value", max_u}};
    j["values"] = r.values.values;
    auto& preds = j["predecessors"] = json::array();
    for (const Predecessor& p : r.values.predecessors) {
      if (p.valid())
        preds.push_back({{"edge", {p.edge_a, p.edge_b}}, {"s", p.s}, {"value", p.value}});
      else
        preds.push_back(nullptr);
    }
    write_json(out_path(opt, "values.json"), j);
  }
  std::cout << "solved n=" << s.n << " sweeps=" << r.values.report.sweeps
            << " residual=" << r.values.report.final_residual << "\n";
  return 0;
}

int cmd_trajectory(const CommonOptions& opt, const std::string& dest_str,
                   const std::string& method, const std::string& epsilon_mode) {
  const Scenario s = resolve_scenario(opt);
  const auto comma = dest_str.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("--dest expects x,y");
  const Point2 dest(std::stod(dest_str.substr(0, comma)), std::stod(dest_str.substr(comma + 1)));
  const Solved r = run_solve(s);

  const double eps = resolve_epsilon(epsilon_mode, s, r);
  const std::vector<int> flagged = detect_singular_simplices(r.values, r.mesh);
  const TrustRegion region = trust_region(r.values, r.mesh, flagged, eps);

  Trajectory traj;
  if (method == "backtrack") {
    traj = backtrack(r.values, r.mesh, s.wind, s.airspeed, dest, &region.marked_tris);
  } else if (method == "shoot") {
    const Trajectory seed =
        backtrack(r.values, r.mesh, s.wind, s.airspeed, dest, &region.marked_tris);
    const Vector2 rel = seed.points.front() - s.origin;
    const ShotToDestination shot = shoot_to_destination(
        r.oracle, s.wind, s.airspeed, dest, std::atan2(rel.y(), rel.x()), seed.arrival_time);
    traj.method = Trajectory::Method::Shooting;
    traj.points = shot.path.states;
    traj.times.resize(shot.path.times.size());
    for (size_t k = 0; k < shot.path.times.size(); ++k)
      traj.times[k] = r.oracle.value_at_angle(shot.launch_angle) + shot.path.times[k];
    traj.arrival_time = shot.arrival_time;
    traj.crosses_marked = seed.crosses_marked;
  } else {
    throw std::invalid_argument("unknown trajectory method: " + method);
  }

  write_trajectory_outputs(opt, traj, "trajectory");
  if (wants(opt, "json")) {
    json j;
    j["scenario"] = scenario_summary(s);
    j["destination"] = {dest.x(), dest.y()};
    j["method"] = method;
    j["arrival_time"] = traj.arrival_time;
    j["epsilon"] = eps;
    j["safe"] = !traj.crosses_marked;
    write_json(out_path(opt, "trajectory.json"), j);
  }
  std::cout << "arrival " << traj.arrival_time << " method " << method
            << (traj.crosses_marked ? " [crosses trust region]" : "") << "\n";
  return 0;
}

int cmd_cutloci(const CommonOptions& opt, double angle_threshold,
                const std::string& epsilon_mode) {
  const Scenario s = resolve_scenario(opt);
  const Solved r = run_solve(s);
  const double eps = resolve_epsilon(epsilon_mode, s, r);
  const std::vector<int> flagged =
      detect_singular_simplices(r.values, r.mesh, angle_threshold);
  const TrustRegion region = trust_region(r.values, r.mesh, flagged, eps);

  int marked_count = 0;
  std::vector<int> marked_list;
  for (int t = 0; t < r.mesh.num_triangles(); ++t)
    if (region.marked_tris[t]) {
      ++marked_count;
      marked_list.push_back(t);
    }
  if (wants(opt, "json")) {
    json j;
    j["scenario"] = scenario_summary(s);
    j["angle_threshold_deg"] = angle_threshold;
    j["epsilon"] = eps;
    j["flagged"] = region.flagged;
    j["marked"] = marked_list;
    write_json(out_path(opt, "cutloci.json"), j);
  }
  if (wants(opt, "vtk")) {
    std::vector<double> flag_data(r.mesh.num_triangles(), 0.0);
    std::vector<double> marked_data(r.mesh.num_triangles(), 0.0);
    for (int t : region.flagged) flag_data[t] = 1.0;
    for (int t = 0; t < r.mesh.num_triangles(); ++t) marked_data[t] = region.marked_tris[t];
    write_vtk(out_path(opt, "cutloci.vtk"), r.mesh, {{"u", &r.values.values}}, "", nullptr,
              {{"flagged", &flag_data}, {"marked", &marked_data}});
  }
  std::cout << "flagged " << region.flagged.size() << " simplices, band " << marked_count
            << " (epsilon " << eps << ")\n";
  return 0;
}

int cmd_certify(const CommonOptions& opt, const std::string& dest_str,
                const std::string& epsilon_mode) {
  const Scenario s = resolve_scenario(opt);
  const auto comma = dest_str.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--dest expects x,y");
  const Point2 dest(std::stod(dest_str.substr(0, comma)), std::stod(dest_str.substr(comma + 1)));
  const Solved r = run_solve(s);
  const double eps = resolve_epsilon(epsilon_mode, s, r);
  const std::vector<int> flagged = detect_singular_simplices(r.values, r.mesh);
  const TrustRegion region = trust_region(r.values, r.mesh, flagged, eps);
  const CertifyReport rep =
      certify_destination(r.values, r.mesh, s.wind, s.airspeed, region, dest);

  write_trajectory_outputs(opt, rep.trajectory, "certified_trajectory");
  if (wants(opt, "json")) {
    json j;
    j["scenario"] = scenario_summary(s);
    j["destination"] = {dest.x(), dest.y()};
    j["safe"] = rep.safe;
    j["epsilon"] = rep.epsilon;
    j["arrival_time"] = rep.arrival_time;
    j["nearest_marked_distance"] = rep.nearest_marked_distance;
    j["flagged_count"] = flagged.size();
    write_json(out_path(opt, "certify.json"), j);
  }
  std::cout << (rep.safe ? "SAFE" : "UNSAFE") << " arrival " << rep.arrival_time
            << " nearest marked " << rep.nearest_marked_distance << " epsilon " << eps << "\n";
  return rep.safe ? 0 : 2;
}

int cmd_converge(const CommonOptions& opt, std::vector<int> resolutions, int reference_n) {
  const Scenario s = resolve_scenario(opt);
  if (resolutions.empty()) resolutions = {51, 101, 201};
  const auto rows = convergence_study(s.wind, s.airspeed, s.origin, s.ball_radius, resolutions,
                                      reference_n, s.tol, s.scheme);
  if (wants(opt, "csv")) {
    std::ofstream out(out_path(opt, "convergence.csv"));
    out << "n,h,theta,error,bound,order\n";
    for (const auto& r : rows)
      out << r.n << "," << format_double(r.h) << "," << format_double(r.aspect) << ","
          << format_double(r.error) << "," << format_double(r.apriori) << ","
          << format_double(r.order) << "\n";
  }
  if (wants(opt, "json")) {
    json rows_json = json::array();
    for (const auto& r : rows)
      rows_json.push_back({{"n", r.n},
                           {"h", r.h},
                           {"theta", r.aspect},
                           {"error", r.error},
                           {"error_unmasked", r.error_unmasked},
                           {"bound", r.apriori},
                           {"order", r.order},
                           {"hessian_sup", r.hessian_sup},
                           {"epsilon", r.epsilon},
                           {"flagged", r.flagged_count},
                           {"masked", r.masked_count}});
    json j;
    j["scenario"] = scenario_summary(s);
    j["reference_n"] = reference_n;
    j["rows"] = rows_json;
    write_json(out_path(opt, "convergence.json"), j);
  }
  for (const auto& r : rows)
    std::cout << "n=" << r.n << " error=" << r.error << " bound=" << r.apriori
              << " order=" << r.order << "\n";
  return 0;
}

int cmd_mesh_info(const CommonOptions& opt) {
  const Scenario s = resolve_scenario(opt);
  const TriMesh mesh = build_mesh(s.n, s.origin, s.ball_radius);
  std::cout << "n " << s.n << "\nnodes " << mesh.num_nodes() << "\ntriangles "
            << mesh.num_triangles() << "\nh " << mesh.h << "\nh_perp " << mesh.h_perp
            << "\ntheta " << mesh.aspect << "\n";
  if (wants(opt, "json")) write_mesh_json(out_path(opt, "mesh.json"), mesh);
  if (wants(opt, "vtk")) write_vtk(out_path(opt, "mesh.vtk"), mesh);
  return 0;
}

int cmd_wind_sample(const CommonOptions& opt, int grid) {
  const Scenario s = resolve_scenario(opt);
  write_wind_csv(out_path(opt, "wind.csv"), s.wind, grid);
  std::cout << "sampled " << grid << "x" << grid << " wind grid\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-minimal free-flight trajectories in stationary wind fields"};
  app.require_subcommand(1);

  CommonOptions solve_opt, traj_opt, cut_opt, cert_opt, conv_opt, mesh_opt, wind_opt;
  std::string traj_dest, traj_method = "backtrack", traj_eps = "auto";
  std::string cut_eps = "auto", cert_dest, cert_eps = "auto";
  double cut_angle = 90.0;
  std::vector<int> conv_ns;
  int conv_ref = 401;
  int wind_grid = 101;

  add_common(app.add_subcommand("solve", "solve the arrival-time field"), solve_opt);

  auto* traj = app.add_subcommand("trajectory", "extract one optimal trajectory");
  add_common(traj, traj_opt);
  traj->add_option("--dest", traj_dest, "destination x,y")->required();
  traj->add_option("--method", traj_method, "backtrack or shoot");
  traj->add_option("--epsilon", traj_eps, "auto | apriori | <value>");

  auto* cut = app.add_subcommand("cutloci", "detect singular simplices and the trust band");
  add_common(cut, cut_opt);
  cut->add_option("--angle-threshold", cut_angle, "detection angle in degrees");
  cut->add_option("--epsilon", cut_eps, "auto | apriori | <value>");

  auto* cert = app.add_subcommand("certify", "certify a destination against the trust region");
  add_common(cert, cert_opt);
  cert->add_option("--dest", cert_dest, "destination x,y")->required();
  cert->add_option("--epsilon", cert_eps, "auto | apriori | <value>");

  auto* conv = app.add_subcommand("converge", "grid convergence study");
  add_common(conv, conv_opt);
  conv->add_option("--resolutions", conv_ns, "grid resolutions")->delimiter(',');
  conv->add_option("--reference-n", conv_ref, "reference grid resolution");

  add_common(app.add_subcommand("mesh-info", "triangulation quality report"), mesh_opt);

  auto* wind = app.add_subcommand("wind-sample", "sample the wind field to CSV");
  add_common(wind, wind_opt);
  wind->add_option("--grid", wind_grid, "sample grid resolution");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand("solve")) return cmd_solve(solve_opt);
    if (app.got_subcommand("trajectory"))
      return cmd_trajectory(traj_opt, traj_dest, traj_method, traj_eps);
    if (app.got_subcommand("cutloci")) return cmd_cutloci(cut_opt, cut_angle, cut_eps);
    if (app.got_subcommand("certify")) return cmd_certify(cert_opt, cert_dest, cert_eps);
    if (app.got_subcommand("converge")) return cmd_converge(conv_opt, conv_ns, conv_ref);
    if (app.got_subcommand("mesh-info")) return cmd_mesh_info(mesh_opt);
    if (app.got_subcommand("wind-sample")) return cmd_wind_sample(wind_opt, wind_grid);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const SolveError& e) {
    std::cerr << "solver did not converge: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
