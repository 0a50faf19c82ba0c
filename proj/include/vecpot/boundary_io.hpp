#pragma once

// Boundary description and trace data files for the trace checker.
//
// Boundary file:
//   {"dim": N, "charts": [{"param_shape": [...], "param_spacing": [...],
//     "param_origin": [...], "graph_values": G, "orientation": 1 | -1,
//     "normal_axis": a}]}
// G is either a field-file path (relative paths resolve against the JSON file's
// directory) or "base64:" followed by the raw little-endian f64 values.
// normal_axis is optional and defaults to N-1.
//
// Trace file: {"0": [path per chart], "1": [...], ...}, keys 0..m-1.

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include "vecpot/field_io.hpp"
#include "vecpot/trace.hpp"

namespace vecpot {

class BoundaryIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw BoundaryIoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline std::string resolve(const std::string& base_file, const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute() || base_file.empty()) return rel;
  return (std::filesystem::path(base_file).parent_path() / p).string();
}

inline std::string base64_encode(const std::string& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

inline std::string base64_decode(std::string text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  if (text.size() % 4 != 0) throw BoundaryIoError("graph_values is not valid base64");
  std::size_t pad = 0;
  while (pad < text.size() && text[text.size() - 1 - pad] == '=') ++pad;
  if (pad > 2) throw BoundaryIoError("bad base64 padding");
  std::replace(text.end() - std::ptrdiff_t(pad), text.end(), '=', 'A');
  try {
    std::string out(It(text.begin()), It(text.end()));
    out.resize(out.size() - pad);
    return out;
  } catch (const std::exception&) {
    throw BoundaryIoError("graph_values is not valid base64");
  }
}

inline nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw BoundaryIoError(what + " is not JSON: " + e.what());
  }
}

inline ScalarField read_scalar(const std::string& path, const GridSpec& expect, const std::string& what) {
  AnyField f;
  try {
    f = read_field(path);
  } catch (const FieldIoError& e) {
    throw BoundaryIoError(what + ": " + e.what());
  }
  auto* s = std::get_if<ScalarField>(&f);
  if (!s) throw BoundaryIoError(what + ": expected a scalar field in '" + path + "'");
  if (!(s->grid() == expect)) throw BoundaryIoError(what + ": grid of '" + path + "' does not match the chart");
  return std::move(*s);
}

}  // namespace detail

/// Parses a boundary description; `origin` is the file it came from, for relative paths.
inline std::vector<BoundaryChart> parse_boundary(const std::string& text, const std::string& origin = {}) {
  const auto j = detail::parse_json(text, "boundary file");
  std::vector<BoundaryChart> charts;
  try {
    const int dim = j.at("dim").get<int>();
    if (dim < 2 || dim > 3) throw BoundaryIoError("boundary dim must be 2 or 3");
    const auto& list = j.at("charts");
    if (!list.is_array() || list.empty()) throw BoundaryIoError("charts must be a non-empty array");
    for (std::size_t c = 0; c < list.size(); ++c) {
      const auto& e = list[c];
      const std::string what = "chart " + std::to_string(c);
      GridSpec pg;
      try {
        pg = GridSpec(e.at("param_shape").get<std::vector<std::size_t>>(), e.at("param_spacing").get<std::vector<double>>(),
                      e.at("param_origin").get<std::vector<double>>());
      } catch (const GridError& err) {
        throw BoundaryIoError(what + ": " + err.what());
      }
      const auto gv = e.at("graph_values").get<std::string>();
      ScalarField graph;
      if (gv.rfind("base64:", 0) == 0) {
        const auto bytes = detail::base64_decode(gv.substr(7));
        if (bytes.size() != pg.size() * 8) throw BoundaryIoError(what + ": graph_values has the wrong length");
        std::vector<double> v(pg.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::get_f64le(reinterpret_cast<const unsigned char*>(bytes.data()) + 8 * i);
        try {
          graph = ScalarField(pg, std::move(v));
        } catch (const GridError& err) {
          throw BoundaryIoError(what + ": " + err.what());
        }
      } else {
        graph = detail::read_scalar(detail::resolve(origin, gv), pg, what);
      }
      const int orientation = e.at("orientation").get<int>();
      const int axis = e.contains("normal_axis") ? e.at("normal_axis").get<int>() : -1;
      try {
        charts.emplace_back(dim, std::move(graph), orientation, axis);
      } catch (const TraceError& err) {
        throw BoundaryIoError(what + ": " + err.what());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BoundaryIoError(std::string("boundary file: ") + e.what());
  }
  return charts;
}

inline std::vector<BoundaryChart> read_boundary(const std::string& path) {
  return parse_boundary(detail::read_text(path), path);
}

/// Serialises charts with inline base64 graph values.
inline std::string boundary_json(const std::vector<BoundaryChart>& charts) {
  nlohmann::json j;
  j["dim"] = charts.empty() ? 0 : charts.front().dim;
  j["charts"] = nlohmann::json::array();
  for (const auto& c : charts) {
    std::string bytes;
    for (double v : c.graph.values()) detail::put_f64le(bytes, v);
    nlohmann::json e;
    e["param_shape"] = c.param_grid().shape();
    e["param_spacing"] = c.param_grid().spacing();
    e["param_origin"] = c.param_grid().origin();
    e["graph_values"] = "base64:" + detail::base64_encode(bytes);
    e["orientation"] = c.orientation;
    e["normal_axis"] = c.axis();
    j["charts"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

/// Reads traces phi_0..phi_{m-1} for every chart; result[chart][q].
inline std::vector<std::vector<BoundaryField<double>>> read_traces(const std::string& path,
                                                                   const std::vector<BoundaryChart>& charts, int m) {
  const auto j = detail::parse_json(detail::read_text(path), "trace file");
  std::vector<std::vector<BoundaryField<double>>> out(charts.size());
  try {
    for (int q = 0; q < m; ++q) {
      const auto key = std::to_string(q);
      if (!j.contains(key)) throw BoundaryIoError("trace file has no entry for order " + key);
      const auto files = j.at(key).get<std::vector<std::string>>();
      if (files.size() != charts.size()) throw BoundaryIoError("trace order " + key + " needs one file per chart");
      for (std::size_t c = 0; c < charts.size(); ++c) {
        const auto f = detail::read_scalar(detail::resolve(path, files[c]), charts[c].param_grid(),
                                           "trace " + key + " of chart " + std::to_string(c));
        out[c].push_back(boundary_scalar(charts[c].dim, f.values()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw BoundaryIoError(std::string("trace file: ") + e.what());
  }
  return out;
}

/// Writes one field file per chart and order next to `path` and the index at `path`.
inline void write_traces(const std::string& path, const std::vector<BoundaryChart>& charts,
                         const std::vector<std::vector<BoundaryField<double>>>& traces) {
  nlohmann::json j = nlohmann::json::object();
  const std::filesystem::path base(path);
  const std::string stem = base.stem().string();
  for (std::size_t q = 0; !traces.empty() && q < traces.front().size(); ++q) {
    auto& list = j[std::to_string(q)] = nlohmann::json::array();
    for (std::size_t c = 0; c < charts.size(); ++c) {
      const std::string name = stem + "_c" + std::to_string(c) + "_q" + std::to_string(q) + ".ndf";
      try {
        write_field(ScalarField(charts[c].param_grid(), traces[c][q].values), (base.parent_path() / name).string());
      } catch (const FieldIoError& e) {
        throw BoundaryIoError(e.what());
      }
      list.push_back(name);
    }
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw BoundaryIoError("cannot open '" + path + "' for writing");
  os << j.dump(2) << "\n";
  if (!os) throw BoundaryIoError("write failed for '" + path + "'");
}

}  // namespace vecpot
