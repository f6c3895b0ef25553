#include "estimand/cli/output.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "estimand/error.hpp"

namespace estimand::cli {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> row;
  row.reserve(values.size());
  for (double v : values) row.push_back(format_number(v));
  rows.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

std::size_t ParsedCsv::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ValidationError("no column '" + name + "'");
}

std::vector<double> ParsedCsv::values(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.at(c));
  return out;
}

ParsedCsv parse_numeric_csv(const std::string& text) {
  ParsedCsv out;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ls(l);
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    return f;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.comments.push_back(line.size() > 2 ? line.substr(2) : std::string{});
      continue;
    }
    if (out.header.empty()) {
      out.header = split(line);
      continue;
    }
    std::vector<double> row;
    // text cells (treatment or pair names) read as NaN
    for (const auto& f : split(line)) {
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      row.push_back(!f.empty() && *end == '\0' ? v : std::numeric_limits<double>::quiet_NaN());
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp.string() + "'", "out");
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed for '" + tmp.string() + "'", "out");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ValidationError("cannot move output into place: " + ec.message(), "out");
  }
}

Json scheme_json(const IntegrationScheme& scheme) {
  Json j;
  j["kind"] = std::string(to_string(scheme.kind));
  if (scheme.kind == SchemeKind::gauss_legendre) j["nodes"] = scheme.nodes;
  if (scheme.kind == SchemeKind::qmc_sobol) {
    j["points"] = scheme.points;
    j["scramble_seed"] = scheme.scramble_seed;
  }
  j["tolerance"] = scheme.tolerance;
  return j;
}

std::string scheme_comment(const IntegrationScheme& scheme) {
  std::string s = "scheme=" + std::string(to_string(scheme.kind));
  if (scheme.kind == SchemeKind::gauss_legendre) s += " nodes=" + std::to_string(scheme.nodes);
  if (scheme.kind == SchemeKind::qmc_sobol)
    s += " points=" + std::to_string(scheme.points) + " scramble_seed=" + std::to_string(scheme.scramble_seed);
  return s + " tolerance=" + format_number(scheme.tolerance);
}

}  // namespace estimand::cli
