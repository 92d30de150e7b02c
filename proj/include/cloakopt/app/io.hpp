// io.hpp - CSV tables and the design sidecar JSON
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloakopt/optimizer/design.hpp"

namespace cloakopt::app {

/// Shortest text that reads back to the same double (at most 17 significant digits).
std::string format_number(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

/// Comma-separated, one header line, no quoting (fields never contain commas).
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Rows (ix, iy, iz, eps) in linear-index order.
void write_eps_csv(const std::filesystem::path& path, const vie::PermittivityGrid& grid);

struct DesignFiles {
  vie::PermittivityGrid grid;
  optimizer::Emitters emitters;
  nlohmann::json meta;
};

nlohmann::json design_meta(const vie::PermittivityGrid& grid, const optimizer::Emitters& emitters);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Rebuilds the grid from design.eps.csv and design.meta.json. Throws
/// std::runtime_error on missing files or inconsistent shapes.
DesignFiles read_design(const std::filesystem::path& eps_csv, const std::filesystem::path& meta_json);

CsvTable trace_table(const optimizer::DesignRecord& record);

}  // namespace cloakopt::app
