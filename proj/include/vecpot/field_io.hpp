#pragma once

// Field files: one JSON header line
//   {"magic":"NDFIELD1","dim":N,"shape":[...],"spacing":[...],"origin":[...],
//    "kind":"scalar"|"vector"|"antisym","encoding":"f64le"}\n
// followed by little-endian binary64 values, component-major, each component
// row-major with the last axis fastest.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "vecpot/grid.hpp"

namespace vecpot {

enum class FieldIoErrc { io, malformed_header, payload_mismatch, unsupported_kind };

class FieldIoError : public std::runtime_error {
 public:
  FieldIoError(FieldIoErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  FieldIoErrc code() const { return code_; }

 private:
  FieldIoErrc code_;
};

using AnyField = std::variant<ScalarField, VectorField, AntisymField>;

namespace detail {

inline const char* kind_name(const AnyField& f) {
  switch (f.index()) {
    case 0: return "scalar";
    case 1: return "vector";
    default: return "antisym";
  }
}

inline const GridSpec& any_grid(const AnyField& f) {
  return std::visit([](const auto& x) -> const GridSpec& { return x.grid(); }, f);
}

inline std::vector<const ScalarField*> any_components(const AnyField& f) {
  std::vector<const ScalarField*> out;
  if (auto s = std::get_if<ScalarField>(&f)) {
    out.push_back(s);
  } else if (auto v = std::get_if<VectorField>(&f)) {
    for (const auto& c : v->components()) out.push_back(&c);
  } else {
    for (const auto& c : std::get<AntisymField>(f).upper()) out.push_back(&c);
  }
  return out;
}

inline void put_f64le(std::string& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

inline double get_f64le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= std::uint64_t(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

/// Serializes a field to the in-memory file image.
inline std::string encode_field(const AnyField& field) {
  const GridSpec& g = detail::any_grid(field);
  nlohmann::ordered_json h;
  h["magic"] = "NDFIELD1";
  h["dim"] = g.dim();
  h["shape"] = g.shape();
  h["spacing"] = g.spacing();
  h["origin"] = g.origin();
  h["kind"] = detail::kind_name(field);
  h["encoding"] = "f64le";
  std::string out = h.dump();
  out.push_back('\n');
  const auto comps = detail::any_components(field);
  out.reserve(out.size() + comps.size() * g.size() * 8);
  for (const ScalarField* c : comps)
    for (double x : c->values()) detail::put_f64le(out, x);
  return out;
}

/// Parses a file image produced by encode_field.
inline AnyField decode_field(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw FieldIoError(FieldIoErrc::malformed_header, "missing header line");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw FieldIoError(FieldIoErrc::malformed_header, std::string("header is not JSON: ") + e.what());
  }
  std::string kind;
  GridSpec grid;
  try {
    if (h.at("magic").get<std::string>() != "NDFIELD1")
      throw FieldIoError(FieldIoErrc::malformed_header, "bad magic");
    if (h.at("encoding").get<std::string>() != "f64le")
      throw FieldIoError(FieldIoErrc::malformed_header, "unsupported encoding");
    const int dim = h.at("dim").get<int>();
    auto shape = h.at("shape").get<std::vector<std::size_t>>();
    auto spacing = h.at("spacing").get<std::vector<double>>();
    auto origin = h.at("origin").get<std::vector<double>>();
    if (int(shape.size()) != dim) throw FieldIoError(FieldIoErrc::malformed_header, "dim does not match shape");
    grid = GridSpec(std::move(shape), std::move(spacing), std::move(origin));
    kind = h.at("kind").get<std::string>();
  } catch (const FieldIoError&) {
    throw;
  } catch (const std::exception& e) {
    throw FieldIoError(FieldIoErrc::malformed_header, std::string("invalid header: ") + e.what());
  }

  int ncomp = 0;
  if (kind == "scalar") ncomp = 1;
  else if (kind == "vector") ncomp = grid.dim();
  else if (kind == "antisym") ncomp = pair_count(grid.dim());
  else throw FieldIoError(FieldIoErrc::unsupported_kind, "unsupported kind '" + kind + "'");
  if (kind != "scalar" && grid.dim() < 2)
    throw FieldIoError(FieldIoErrc::unsupported_kind, kind + " fields need dim >= 2");

  const std::size_t payload = bytes.size() - nl - 1;
  const std::size_t expect = std::size_t(ncomp) * grid.size() * 8;
  if (payload != expect)
    throw FieldIoError(FieldIoErrc::payload_mismatch, "payload has " + std::to_string(payload) + " bytes, header implies " +
                                                          std::to_string(expect));

  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + nl + 1);
  std::vector<ScalarField> comps;
  try {
    for (int c = 0; c < ncomp; ++c) {
      std::vector<double> v(grid.size());
      for (auto& x : v) {
        x = detail::get_f64le(p);
        p += 8;
      }
      comps.emplace_back(grid, std::move(v));
    }
  } catch (const GridError& e) {
    throw FieldIoError(FieldIoErrc::payload_mismatch, e.what());
  }
  if (kind == "scalar") return std::move(comps.front());
  if (kind == "vector") return VectorField(std::move(comps));
  return AntisymField(std::move(comps));
}

inline void write_field(const AnyField& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FieldIoError(FieldIoErrc::io, "cannot open '" + path + "' for writing");
  const std::string img = encode_field(field);
  os.write(img.data(), std::streamsize(img.size()));
  if (!os) throw FieldIoError(FieldIoErrc::io, "write failed for '" + path + "'");
}

inline AnyField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FieldIoError(FieldIoErrc::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return decode_field(ss.str());
}

}  // namespace vecpot
