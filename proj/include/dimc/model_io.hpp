#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dimc/model.hpp"

namespace dimc {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw SchemaError(where + " must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + " lacks field '" + key + "'");
  return *it;
}

inline std::string require_string(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require(obj, key, where);
  if (!v.is_string()) throw SchemaError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

inline std::vector<std::string> string_list(const Json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + " must be a list of strings");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw SchemaError(where + " must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

// Numbers keep their textual form so "0.1" stays exactly 1/10.
inline Rational json_rational(const Json& v, const std::string& where) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_number_unsigned()) return Rational(BigInt(v.get<std::uint64_t>()));
  if (v.is_number_float()) return parse_rational(v.dump());
  throw SchemaError(where + " must be a number or a \"p/q\" string");
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace detail

// Parses the model document into its name-based form without validating
// references; build_model does that.
inline ModelSpec parse_model_spec(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("model document must be an object");
  const Json& modules = detail::require(doc, "modules", "model");
  if (!modules.is_array()) throw SchemaError("model.modules must be a list");
  if (modules.empty()) throw SchemaError("model.modules is empty");

  ModelSpec spec;
  for (std::size_t j = 0; j < modules.size(); ++j) {
    const Json& m = modules[j];
    const std::string where = "module " + std::to_string(j + 1);
    ModuleSpec ms;
    ms.name = detail::require_string(m, "name", where);
    ms.states = detail::string_list(detail::require(m, "states", where), where + ".states");
    ms.initial = detail::require_string(m, "initial", where);
    ms.actions = detail::string_list(detail::require(m, "actions", where), where + ".actions");
    if (auto it = m.find("nothing_action"); it != m.end() && !it->is_null()) {
      if (!it->is_string()) throw SchemaError(where + ".nothing_action must be a string or null");
      ms.nothing_action = it->get<std::string>();
    }
    if (auto it = m.find("transitions"); it != m.end()) {
      if (!it->is_array()) throw SchemaError(where + ".transitions must be a list");
      for (const auto& t : *it) {
        ms.transitions.push_back({detail::require_string(t, "from", where + " transition"),
                                  detail::require_string(t, "label", where + " transition"),
                                  detail::require_string(t, "to", where + " transition")});
      }
    }
    if (auto it = m.find("delays"); it != m.end()) {
      if (!it->is_array()) throw SchemaError(where + ".delays must be a list");
      for (const auto& d : *it) {
        ms.delays.push_back({detail::require_string(d, "from", where + " delay"),
                             detail::json_rational(detail::require(d, "rate", where + " delay"), where + " delay rate"),
                             detail::require_string(d, "to", where + " delay")});
      }
    }
    spec.modules.push_back(std::move(ms));
  }

  if (auto it = doc.find("target"); it != doc.end()) {
    if (!it->is_array()) throw SchemaError("model.target must be a list of tuples");
    for (const auto& tuple : *it) {
      if (!tuple.is_array()) throw SchemaError("model.target entries must be lists");
      ModelSpec::TargetCube cube;
      for (const auto& part : tuple) {
        if (part.is_string() && part.get<std::string>() == "*") cube.emplace_back(std::nullopt);
        else if (part.is_string()) cube.emplace_back(std::vector<std::string>{part.get<std::string>()});
        else cube.emplace_back(detail::string_list(part, "model.target entry"));
      }
      spec.target.push_back(std::move(cube));
    }
  }
  return spec;
}

inline Json model_spec_to_json(const ModelSpec& spec) {
  Json doc;
  Json modules = Json::array();
  for (const auto& m : spec.modules) {
    Json jm;
    jm["name"] = m.name;
    jm["states"] = m.states;
    jm["initial"] = m.initial;
    jm["actions"] = m.actions;
    jm["nothing_action"] = m.nothing_action ? Json(*m.nothing_action) : Json(nullptr);
    Json ts = Json::array();
    for (const auto& t : m.transitions) ts.push_back({{"from", t.from}, {"label", t.label}, {"to", t.to}});
    jm["transitions"] = std::move(ts);
    Json ds = Json::array();
    for (const auto& d : m.delays) ds.push_back({{"from", d.from}, {"rate", format_rational(d.rate)}, {"to", d.to}});
    jm["delays"] = std::move(ds);
    modules.push_back(std::move(jm));
  }
  doc["modules"] = std::move(modules);
  Json target = Json::array();
  for (const auto& cube : spec.target) {
    Json tuple = Json::array();
    for (const auto& part : cube) {
      if (!part) tuple.push_back("*");
      else if (part->size() == 1) tuple.push_back(part->front());
      else tuple.push_back(*part);
    }
    target.push_back(std::move(tuple));
  }
  doc["target"] = std::move(target);
  return doc;
}

inline DistributedImc load_model(const Json& doc) { return build_model(parse_model_spec(doc)); }

inline DistributedImc load_model_file(const std::filesystem::path& path) {
  return load_model(detail::read_json_file(path));
}

inline Json serialize_model(const DistributedImc& model) { return model_spec_to_json(to_spec(model)); }

}  // namespace dimc
