#include "cmha/ply.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "cmha/error.hpp"

namespace cmha {

namespace {

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
  std::vector<bool> single;  // declared float or float32
};

}  // namespace

void write_ply(std::ostream& out, const PointCloud& cloud, PlyScalar scalar) {
  const char* type = scalar == PlyScalar::kFloat32 ? "float" : "double";
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << '\n';
  out << "property " << type << " x\n";
  out << "property " << type << " y\n";
  out << "property " << type << " z\n";
  out << "end_header\n";
  char buf[128];
  for (const Vec3& p : cloud.points) {
    if (scalar == PlyScalar::kFloat32) {
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n",
                    static_cast<double>(static_cast<float>(p.x)),
                    static_cast<double>(static_cast<float>(p.y)),
                    static_cast<double>(static_cast<float>(p.z)));
    } else {
      std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p.x, p.y, p.z);
    }
    out << buf;
  }
}

void write_ply(const std::string& path, const PointCloud& cloud,
               PlyScalar scalar) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write_ply(out, cloud, scalar);
  if (!out) throw Error("cannot write " + path);
}

PointCloud read_ply(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
    throw Error("not a PLY file");

  std::vector<PlyElement> elements;
  bool ascii = false;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw Error("unsupported PLY format: " + fmt);
      ascii = true;
    } else if (key == "element") {
      PlyElement e;
      if (!(ls >> e.name >> e.count)) throw Error("malformed PLY element line");
      elements.push_back(std::move(e));
    } else if (key == "property") {
      if (elements.empty()) throw Error("PLY property before any element");
      std::string type, name;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type;
      }
      ls >> name;
      elements.back().properties.push_back(name);
      elements.back().single.push_back(type == "float" || type == "float32");
    } else if (key == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) throw Error("PLY header not terminated");
  if (!ascii) throw Error("PLY format line missing");

  PointCloud cloud;
  bool found_vertex = false;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!std::getline(in, line)) throw Error("truncated PLY body");
      }
      continue;
    }
    found_vertex = true;
    std::array<int, 3> slot = {-1, -1, -1};
    for (std::size_t p = 0; p < e.properties.size(); ++p) {
      if (e.properties[p] == "x") slot[0] = static_cast<int>(p);
      if (e.properties[p] == "y") slot[1] = static_cast<int>(p);
      if (e.properties[p] == "z") slot[2] = static_cast<int>(p);
    }
    if (slot[0] < 0 || slot[1] < 0 || slot[2] < 0)
      throw Error("PLY vertex element lacks x/y/z");
    cloud.points.reserve(e.count);
    std::vector<double> values(e.properties.size());
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!std::getline(in, line)) throw Error("truncated PLY body");
      std::istringstream ls(line);
      for (double& v : values) {
        if (!(ls >> v)) throw Error("malformed PLY vertex " + std::to_string(i));
      }
      Vec3 p;
      for (std::size_t k = 0; k < 3; ++k) {
        const auto s = static_cast<std::size_t>(slot[k]);
        p[k] = e.single[s] ? static_cast<double>(static_cast<float>(values[s])) : values[s];
      }
      cloud.points.push_back(p);
    }
  }
  if (!found_vertex) throw Error("PLY has no vertex element");
  if (!cloud.is_valid()) throw Error("PLY contains non-finite coordinates");
  return cloud;
}

PointCloud read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  return read_ply(in);
}

}  // namespace cmha
