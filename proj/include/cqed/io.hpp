#pragma once

// Output files: CSV time series (17 significant digits, so doubles round-trip
// exactly), JSON photocount records and run manifests, and their readers.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "hilbert.hpp"
#include "jumps.hpp"

namespace cqed {

using Json = nlohmann::ordered_json;

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Json complex_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

inline Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_object() || !j.contains("re") || !j.contains("im") || j.size() != 2)
    throw ConfigError("complex numbers are {\"re\": x, \"im\": y}");
  return {j.at("re").get<double>(), j.at("im").get<double>()};
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw DimensionMismatch("table row has the wrong number of fields");
    rows.push_back(std::move(row));
  }
};

inline std::string to_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << format_double(r[c]);
    os << "\n";
  }
  return os.str();
}

inline Table parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Table t;
  if (!std::getline(in, line) || line.empty()) throw IOError("csv: missing header");
  {
    std::istringstream h(line);
    std::string name;
    while (std::getline(h, name, ',')) t.columns.push_back(name);
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream r(line);
    std::string field;
    while (std::getline(r, field, ',')) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != field.size())
        throw IOError("csv: bad number '" + field + "' on line " + std::to_string(lineno));
      row.push_back(v);
    }
    if (row.size() != t.columns.size()) throw IOError("csv: wrong field count on line " + std::to_string(lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Json table_json(const Table& t) {
  Json arr = Json::array();
  for (const auto& r : t.rows) {
    Json o = Json::object();
    for (std::size_t c = 0; c < r.size(); ++c) o[t.columns[c]] = r[c];
    arr.push_back(std::move(o));
  }
  return arr;
}

inline Table table_from_json(const Json& j) {
  if (!j.is_array()) throw IOError("json table: expected an array of rows");
  Table t;
  for (const auto& row : j) {
    if (!row.is_object()) throw IOError("json table: rows must be objects");
    if (t.columns.empty())
      for (const auto& [k, v] : row.items()) t.columns.push_back(k);
    std::vector<double> r;
    for (const auto& c : t.columns) {
      if (!row.contains(c)) throw IOError("json table: row lacks column " + c);
      r.push_back(row.at(c).get<double>());
    }
    if (row.size() != t.columns.size()) throw IOError("json table: ragged rows");
    t.rows.push_back(std::move(r));
  }
  return t;
}

// Observables of rho as one row: time, tr, purity, <n>, <sigma_z>, Re<a>, Im<a>, lambda1.
inline const std::vector<std::string>& observable_columns() {
  static const std::vector<std::string> cols{"time", "tr", "purity", "n", "sz", "re_a", "im_a", "lambda1"};
  return cols;
}

inline std::vector<double> observable_row(double t, const Matrix& rho) {
  const Observables o = observe(rho);
  return {t, o.trace, o.purity, o.photons, o.sz, o.field.real(), o.field.imag(), o.p_plus};
}

inline Json record_json(const PhotocountRecord& r) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    Json o{{"k", r.labels[i]}};
    o["t"] = r.times ? Json((*r.times)[i]) : Json(nullptr);
    arr.push_back(std::move(o));
  }
  return arr;
}

// Accepts [{"k": 1, "t": 0.1}, ...] (t may be null or absent) or a bare list of labels.
inline PhotocountRecord record_from_json(const Json& j, double dt_total) {
  if (!j.is_array()) throw ConfigError("record: expected an array");
  PhotocountRecord r;
  r.dt_total = dt_total;
  bool any_time = false, all_time = true;
  std::vector<double> times;
  for (const auto& e : j) {
    if (e.is_number_integer()) {
      r.labels.push_back(e.get<int>());
      all_time = false;
      continue;
    }
    if (!e.is_object()) throw ConfigError("record: entries are {\"k\": 1|2, \"t\": time} or labels");
    for (const auto& [key, v] : e.items())
      if (key != "k" && key != "t") throw ConfigError("record: unknown key '" + key + "'");
    if (!e.contains("k") || !e.at("k").is_number_integer()) throw ConfigError("record: entry without integer k");
    r.labels.push_back(e.at("k").get<int>());
    if (e.contains("t") && !e.at("t").is_null()) {
      any_time = true;
      times.push_back(e.at("t").get<double>());
    } else {
      all_time = false;
    }
  }
  if (any_time && !all_time) throw ConfigError("record: either every count has a time or none does");
  if (any_time) r.times = times;
  try {
    r.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return r;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("cannot write " + path.string());
  out << text;
  if (!out) throw IOError("write failed for " + path.string());
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace cqed
