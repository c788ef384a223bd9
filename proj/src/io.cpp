#include "zermelo/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace zermelo {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

}  // namespace

void write_vtk(const std::string& path, const TriMesh& mesh,
               const std::map<std::string, const std::vector<double>*>& point_scalars,
               const std::string& vector_name, const std::vector<Vector2>* point_vectors,
               const std::map<std::string, const std::vector<double>*>& cell_scalars) {
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n";
  out << "zermelo field export\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Point2& p : mesh.nodes)
    out << format_double(p.x()) << " " << format_double(p.y()) << " 0\n";
  out << "CELLS " << mesh.num_triangles() << " " << 4 * mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t) out << "5\n";

  if (!point_scalars.empty() || point_vectors) {
    out << "POINT_DATA " << mesh.num_nodes() << "\n";
    for (const auto& [name, data] : point_scalars) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : *data) out << format_double(v) << "\n";
    }
    if (point_vectors) {
      out << "VECTORS " << (vector_name.empty() ? "vectors" : vector_name) << " double\n";
      for (const Vector2& v : *point_vectors)
        out << format_double(v.x()) << " " << format_double(v.y()) << " 0\n";
    }
  }
  if (!cell_scalars.empty()) {
    out << "CELL_DATA " << mesh.num_triangles() << "\n";
    for (const auto& [name, data] : cell_scalars) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : *data) out << format_double(v) << "\n";
    }
  }
}

void write_values_csv(const std::string& path, const TriMesh& mesh, const ValueField& values) {
  std::ofstream out = open_out(path);
  out << "x,y,u,pred_dx,pred_dy\n";
  for (int v = 0; v < mesh.num_nodes(); ++v) {
    Vector2 dir = Vector2::Zero();
    if (values.predecessors[v].valid()) dir = inflow_direction(mesh, values, v);
    out << format_double(mesh.nodes[v].x()) << "," << format_double(mesh.nodes[v].y()) << ","
        << format_double(values.values[v]) << "," << format_double(dir.x()) << ","
        << format_double(dir.y()) << "\n";
  }
}

void write_wind_csv(const std::string& path, const WindField& field, int grid_n) {
  if (grid_n < 2) throw std::invalid_argument("wind sample grid must have at least 2 points");
  std::ofstream out = open_out(path);
  out << "x,y,wx,wy\n";
  for (int j = 0; j < grid_n; ++j) {
    for (int i = 0; i < grid_n; ++i) {
      const Point2 x(double(i) / (grid_n - 1), double(j) / (grid_n - 1));
      const Vector2 w = eval_wind(field, x);
      out << format_double(x.x()) << "," << format_double(x.y()) << "," << format_double(w.x())
          << "," << format_double(w.y()) << "\n";
    }
  }
}

void write_mesh_json(const std::string& path, const TriMesh& mesh) {
  nlohmann::json j;
  j["n"] = mesh.grid_n;
  j["h"] = mesh.h;
  j["h_perp"] = mesh.h_perp;
  j["aspect"] = mesh.aspect;
  j["origin"] = {mesh.origin.x(), mesh.origin.y()};
  j["ball_radius"] = mesh.ball_radius;
  j["num_nodes"] = mesh.num_nodes();
  j["num_triangles"] = mesh.num_triangles();
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (const Point2& p : mesh.nodes) nodes.push_back({p.x(), p.y()});
  auto& tris = j["triangles"] = nlohmann::json::array();
  for (const auto& t : mesh.triangles) tris.push_back({t[0], t[1], t[2]});
  auto& cls = j["node_class"] = nlohmann::json::array();
  for (NodeClass c : mesh.node_class)
    cls.push_back(c == NodeClass::Interior ? "interior"
                  : c == NodeClass::OriginBoundary ? "origin" : "outer");
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace zermelo
