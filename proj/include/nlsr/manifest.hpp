#pragma once

#include <openssl/evp.h>

#include <array>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "nlsr/config.hpp"
#include "nlsr/errors.hpp"
#include "nlsr/snapshot.hpp"

namespace nlsr {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Format, "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

inline std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

/// Resolved parameters as a JSON object whose keys are the config keys.
inline Json config_to_json(const RunConfig& c) {
  Json j;
  j["d"] = c.d;
  j["p"] = c.p;
  j["omega"] = c.omega;
  j["n"] = c.n;
  j["r_max"] = c.r_max;
  j["dt"] = c.dt;
  j["t_max"] = c.t_max;
  j["stride"] = c.stride;
  j["order"] = c.order;
  j["max_phase"] = c.max_phase;
  j["dt_floor"] = c.dt_floor;
  j["grad_ratio_max"] = c.grad_ratio_max;
  j["resolve_cells"] = c.resolve_cells;
  j["omega_min"] = c.omega_min;
  j["omega_max"] = c.omega_max;
  j["samples"] = c.samples;
  j["classify_dt"] = c.classify_dt;
  j["classify_order"] = c.classify_order;
  j["horizon"] = c.horizon;
  j["horizon_max"] = c.horizon_max;
  j["sample_interval"] = c.sample_interval;
  j["absorb_width"] = c.absorb_width;
  j["absorb_strength"] = c.absorb_strength;
  j["delta_star_ratio"] = c.delta_star_ratio;
  j["decay_factor"] = c.decay_factor;
  j["eps_rel"] = c.eps_rel;
  j["strict"] = c.strict;
  j["seed"] = c.seed;
  j["init"] = c.init;
  return j;
}

/// Turns a manifest's parameter object back into config text.
inline std::string json_to_config_text(const Json& params) {
  if (!params.is_object()) throw Error(ErrorKind::Parse, "manifest parameters must be an object");
  std::string out;
  for (const auto& [key, v] : params.items()) {
    if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_string()) throw Error(ErrorKind::Parse, "manifest key '" + key + "' must hold strings");
        out += key + " = " + e.get<std::string>() + "\n";
      }
    } else if (v.is_string()) {
      out += key + " = " + v.get<std::string>() + "\n";
    } else if (v.is_number_float()) {
      out += key + " = " + detail::format_double(v.get<double>()) + "\n";
    } else if (v.is_number() || v.is_boolean()) {
      out += key + " = " + v.dump() + "\n";
    } else {
      throw Error(ErrorKind::Parse, "manifest key '" + key + "' has unsupported type");
    }
  }
  return out;
}

/// Config text from either key = value text or a JSON manifest (detected by a leading '{').
inline std::string config_text_of(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || text[first] != '{') return text;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("manifest JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("parameters")) throw Error(ErrorKind::Parse, "manifest has no 'parameters' object");
  return json_to_config_text(j["parameters"]);
}

inline RunConfig parse_config_or_manifest(const std::string& text) { return parse_config(config_text_of(text)); }

/// Run record written next to every CLI output.
struct RunManifest {
  std::string command;
  RunConfig config;
  Json derived = Json::object();   ///< calibrated thresholds and other computed settings
  Json inputs = Json::array();     ///< [{path, sha256}]
  Json outputs = Json::array();
  Json counters = Json::object();  ///< wall-clock seconds, iteration counts

  void add_input(const std::filesystem::path& p) { inputs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }
  void add_output(const std::filesystem::path& p) {
    outputs.push_back({{"path", p.filename().string()}, {"sha256", sha256_file(p)}});
  }

  Json to_json() const {
    Json j;
    j["tool"] = "nlsr";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["parameters"] = config_to_json(config);
    j["derived"] = derived;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["counters"] = counters;
    return j;
  }

  std::string serialize() const { return to_json().dump(2) + "\n"; }

  static RunManifest parse(const std::string& text) {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::Parse, std::string("manifest JSON: ") + e.what());
    }
    if (!j.is_object() || j.value("tool", "") != "nlsr") throw Error(ErrorKind::Format, "not an nlsr manifest");
    RunManifest m;
    m.command = j.value("command", "");
    m.config = parse_config(json_to_config_text(j.at("parameters")));
    m.derived = j.value("derived", Json::object());
    m.inputs = j.value("inputs", Json::array());
    m.outputs = j.value("outputs", Json::array());
    m.counters = j.value("counters", Json::object());
    return m;
  }

  void write(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }
};

}  // namespace nlsr
