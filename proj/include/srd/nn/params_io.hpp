#pragma once

// Named parameter sets and their JSON form:
//   {"format":"srd-params","version":1,
//    "params":{"<name>":{"shape":[...],"values":[...]}, ...}}

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "srd/nn/tensor.hpp"

namespace srd::nn {

inline constexpr int kParamsVersion = 1;
inline constexpr const char* kParamsFormat = "srd-params";

class ParamsFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParamsVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered by name so the serialized form is canonical.
using ParamSet = std::map<std::string, Tensor>;

inline std::string params_to_json(const ParamSet& params) {
  nlohmann::ordered_json doc;
  doc["format"] = kParamsFormat;
  doc["version"] = kParamsVersion;
  nlohmann::ordered_json body = nlohmann::ordered_json::object();
  for (const auto& [name, t] : params) {
    body[name] = {{"shape", t.shape()}, {"values", t.values()}};
  }
  doc["params"] = std::move(body);
  return doc.dump(1) + "\n";
}

inline ParamSet params_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParamsFormatError("parameter file parse error at byte " + std::to_string(e.byte) +
                            ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kParamsFormat) {
    throw ParamsFormatError("not an srd-params document");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw ParamsVersionError("parameter file has no integer version tag");
  }
  const int version = doc["version"].get<int>();
  if (version != kParamsVersion) {
    throw ParamsVersionError("unsupported parameter file version " + std::to_string(version) +
                             " (expected " + std::to_string(kParamsVersion) + ")");
  }
  ParamSet out;
  try {
    for (const auto& [name, entry] : doc.at("params").items()) {
      auto shape = entry.at("shape").get<Shape>();
      auto values = entry.at("values").get<std::vector<double>>();
      out.emplace(name, Tensor::from(std::move(values), std::move(shape), true));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParamsFormatError(std::string("malformed parameter entry: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParamsFormatError(std::string("malformed parameter entry: ") + e.what());
  }
  return out;
}

inline void save_params(const ParamSet& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << params_to_json(params);
}

inline ParamSet load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return params_from_json(ss.str());
}

// Copies values of matching names into dst; every dst name must be present
// with the same shape.
inline void assign_params(ParamSet& dst, const ParamSet& src) {
  for (auto& [name, t] : dst) {
    auto it = src.find(name);
    if (it == src.end()) throw ParamsFormatError("missing parameter '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ParamsFormatError("parameter '" + name + "' has shape " +
                              shape_str(it->second.shape()) + ", expected " +
                              shape_str(t.shape()));
    }
    t.mutable_values() = it->second.values();
  }
}

}  // namespace srd::nn
