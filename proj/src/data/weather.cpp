#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "gsheaf/data.hpp"
#include "gsheaf/error.hpp"

namespace gsheaf {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

struct Table {
  std::map<std::string, int> columns;
  std::vector<std::vector<std::string>> rows;
  std::string path;

  int column(const std::string& name) const {
    auto it = columns.find(name);
    if (it == columns.end()) throw SchemaError(path + ": missing column '" + name + "'");
    return it->second;
  }
};

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  Table t;
  t.path = path;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) t.columns[header[i]] = static_cast<int>(i);
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    fields.resize(header.size());
    t.rows.push_back(std::move(fields));
  }
  return t;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::istringstream in(s);
  in >> out;
  return !in.fail() && in.eof() && std::isfinite(out);
}

// ISO dates compare lexicographically.
bool in_range(const std::string& date, const std::string& from, const std::string& to) {
  return (from.empty() || date >= from) && (to.empty() || date <= to);
}

}  // namespace

Dataset load_weather(const WeatherConfig& cfg) {
  if (cfg.input_columns.empty() || cfg.target_columns.empty()) {
    throw ParameterError("weather: input and target columns are required");
  }
  const Table stations = read_table(cfg.stations_csv);
  const int c_id = stations.column("station_id");
  stations.column("name");
  const int c_lat = stations.column("latitude");
  const int c_lon = stations.column("longitude");

  const Table meas = read_table(cfg.measurements_csv);
  const int m_id = meas.column("station_id");
  const int m_date = meas.column("date");
  std::vector<int> in_cols, out_cols;
  for (const auto& c : cfg.input_columns) in_cols.push_back(meas.column(c));
  for (const auto& c : cfg.target_columns) out_cols.push_back(meas.column(c));

  std::map<std::string, std::vector<std::vector<double>>> input_rows, target_rows;
  for (const auto& row : meas.rows) {
    const std::string& id = row[m_id];
    const std::string& date = row[m_date];
    auto collect = [&](const std::vector<int>& cols, std::vector<double>& vals) {
      vals.clear();
      for (int c : cols) {
        double x;
        if (!parse_double(row[c], x)) return false;
        vals.push_back(x);
      }
      return true;
    };
    std::vector<double> vals;
    if (in_range(date, cfg.input_from, cfg.input_to) && collect(in_cols, vals)) {
      input_rows[id].push_back(vals);
    }
    if (in_range(date, cfg.target_from, cfg.target_to) && collect(out_cols, vals)) {
      target_rows[id].push_back(vals);
    }
  }

  struct Station {
    std::string id;
    GeoPoint where;
  };
  std::vector<Station> kept;
  for (const auto& row : stations.rows) {
    const std::string& id = row[c_id];
    double lat, lon;
    if (!parse_double(row[c_lat], lat) || !parse_double(row[c_lon], lon)) {
      std::cerr << "warning: station " << id << " has no valid coordinates; dropped\n";
      continue;
    }
    if (input_rows[id].size() < 2 || target_rows[id].empty()) {
      std::cerr << "warning: station " << id << " lacks measurements in the periods; dropped\n";
      continue;
    }
    kept.push_back({id, {lat, lon}});
  }
  // Isolated stations cannot take part in sheaf diffusion.
  for (bool changed = true; changed;) {
    changed = false;
    std::vector<GeoPoint> pts;
    for (const auto& s : kept) pts.push_back(s.where);
    if (pts.size() < 2) throw ParameterError("weather: fewer than 2 usable stations");
    const Graph g = geo_graph(pts, cfg.radius_km);
    std::vector<Station> next;
    for (int v = 0; v < g.num_nodes(); ++v) {
      if (g.degree(v) > 0) {
        next.push_back(kept[v]);
      } else {
        std::cerr << "warning: station " << kept[v].id << " has no neighbor within "
                  << cfg.radius_km << " km; dropped\n";
        changed = true;
      }
    }
    kept = std::move(next);
  }

  Dataset ds;
  std::vector<GeoPoint> pts;
  for (const auto& s : kept) pts.push_back(s.where);
  ds.graph = geo_graph(pts, cfg.radius_km);
  auto to_samples = [](const std::vector<std::vector<double>>& rows) {
    SampleSet s{Matrix(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()))};
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) s.rows(i, j) = rows[i][j];
    }
    return s;
  };
  std::size_t min_inputs = SIZE_MAX;
  for (const auto& s : kept) min_inputs = std::min(min_inputs, input_rows[s.id].size());
  for (const auto& s : kept) {
    const SampleSet in = to_samples(input_rows[s.id]);
    ds.inputs.push_back(mle_fit(in));
    ds.targets.push_back(to_samples(target_rows[s.id]));
    // Sample-based baselines need equal counts; keep the latest rows.
    ds.input_samples.push_back(
        SampleSet{in.rows.bottomRows(static_cast<Eigen::Index>(min_inputs))});
  }
  ds.splits = split_nodes(ds.graph.num_nodes(), {0.6, 0.2, 0.2}, cfg.seed);
  ds.meta["generator"] = "weather";
  ds.meta["radius_km"] = std::to_string(cfg.radius_km);
  ds.meta["stations"] = std::to_string(kept.size());
  ds.meta["seed"] = std::to_string(cfg.seed);
  ds.validate();
  return ds;
}

}  // namespace gsheaf
