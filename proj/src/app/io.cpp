#include "cloakopt/app/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cloakopt::app {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::out_of_range("no column named '" + name + "'");
}

double CsvTable::number(std::size_t row, const std::string& name) const {
  return std::stod(rows.at(row).at(column(name)));
}

void write_csv(const fs::path& path, const CsvTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV " + path.string());
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error("ragged row in " + path.string());
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

void write_eps_csv(const fs::path& path, const vie::PermittivityGrid& grid) {
  CsvTable t;
  t.header = {"ix", "iy", "iz", "eps"};
  t.rows.reserve(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const auto c = grid.coords(v);
    t.rows.push_back({std::to_string(c[0]), std::to_string(c[1]), std::to_string(c[2]),
                      format_number(grid.eps[v])});
  }
  write_csv(path, t);
}

namespace {

json vec3(const em::Position& p) { return json::array({p.x(), p.y(), p.z()}); }

em::Position as_vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

json design_meta(const vie::PermittivityGrid& grid, const optimizer::Emitters& emitters) {
  json j;
  j["dims"] = grid.dims;
  j["spacing"] = grid.spacing;
  j["origin"] = vec3(grid.origin);
  j["lambda0"] = em::UnitSystem::lambda0;
  j["eps_max"] = grid.eps_max;
  j["emitters"] = {{"r1", vec3(emitters.r1)},
                   {"r2", vec3(emitters.r2)},
                   {"p_hat", vec3(emitters.p_hat)}};
  std::vector<std::size_t> frozen;
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (grid.is_frozen(v)) frozen.push_back(v);
  }
  j["frozen_voxels"] = frozen;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DesignFiles read_design(const fs::path& eps_csv, const fs::path& meta_json) {
  std::ifstream in(meta_json);
  if (!in) throw std::runtime_error("cannot read " + meta_json.string());
  DesignFiles d;
  d.meta = json::parse(in);
  const auto dims = d.meta.at("dims").get<std::array<int, 3>>();
  d.grid = vie::PermittivityGrid::uniform(as_vec3(d.meta.at("origin")),
                                          d.meta.at("spacing").get<double>(), dims,
                                          d.meta.at("eps_max").get<double>());
  d.emitters.r1 = as_vec3(d.meta.at("emitters").at("r1"));
  d.emitters.r2 = as_vec3(d.meta.at("emitters").at("r2"));
  d.emitters.p_hat = as_vec3(d.meta.at("emitters").at("p_hat"));
  if (d.meta.contains("frozen_voxels")) {
    for (auto v : d.meta["frozen_voxels"].get<std::vector<std::size_t>>()) {
      if (v >= d.grid.size()) throw std::runtime_error("frozen voxel index out of range");
      d.grid.frozen[v] = 1;
    }
  }

  const CsvTable t = read_csv(eps_csv);
  if (t.rows.size() != d.grid.size()) throw std::runtime_error("eps map size does not match dims");
  const std::size_t ix = t.column("ix"), iy = t.column("iy"), iz = t.column("iz"),
                    ie = t.column("eps");
  for (const auto& r : t.rows) {
    const int i = std::stoi(r[ix]), j = std::stoi(r[iy]), k = std::stoi(r[iz]);
    if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) {
      throw std::runtime_error("voxel index out of range in eps map");
    }
    d.grid.eps[d.grid.index(i, j, k)] = std::stod(r[ie]);
  }
  d.grid.validate();
  return d;
}

CsvTable trace_table(const optimizer::DesignRecord& record) {
  CsvTable t;
  t.header = {"n",         "target_value", "accepted_count", "gamma12_over_gamma",
              "g12_over_gamma", "purcell", "eq3_mismatch", "delta_eps"};
  for (const auto& e : record.trace) {
    const double gamma = e.couplings.gamma11;
    t.rows.push_back({std::to_string(e.n), format_number(e.target),
                      std::to_string(e.accepted_count), format_number(e.couplings.gamma12 / gamma),
                      format_number(e.couplings.g12 / gamma), format_number(e.couplings.purcell),
                      format_number(e.born_mismatch), format_number(e.delta_eps)});
  }
  return t;
}

}  // namespace cloakopt::app
