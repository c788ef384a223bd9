#pragma once

#include <map>
#include <string>
#include <vector>

#include "zermelo/hjb.hpp"
#include "zermelo/trimesh.hpp"
#include "zermelo/windfield.hpp"

namespace zermelo {

/// Shortest round-trip decimal form, locale-independent.
std::string format_double(double v);

/// Legacy ASCII VTK export of the triangulation with optional nodal scalar
/// fields, one nodal vector field, and cell scalar fields.
void write_vtk(const std::string& path, const TriMesh& mesh,
               const std::map<std::string, const std::vector<double>*>& point_scalars = {},
               const std::string& vector_name = "",
               const std::vector<Vector2>* point_vectors = nullptr,
               const std::map<std::string, const std::vector<double>*>& cell_scalars = {});

/// Nodal values with minimizer directions: x,y,u,pred_dx,pred_dy.
void write_values_csv(const std::string& path, const TriMesh& mesh, const ValueField& values);

/// Wind samples on a uniform grid: x,y,wx,wy.
void write_wind_csv(const std::string& path, const WindField& field, int grid_n);

/// Mesh as JSON (nodes, triangles, classification, quality metrics).
void write_mesh_json(const std::string& path, const TriMesh& mesh);

}  // namespace zermelo
