#pragma once

// JSON config readers for field models and DNLS runs. Seeds are required:
// there is no ambient entropy anywhere in the library.

#include <fstream>
#include <string>

#include <json.hpp>

#include "wickbound/dnls.hpp"
#include "wickbound/errors.hpp"
#include "wickbound/fields/spectral.hpp"

namespace wickbound {

using nlohmann::json;

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config file '" + path + "' is not valid JSON: " + e.what());
  }
}

inline std::uint64_t require_seed(const json& j) {
  if (!j.contains("seed")) throw InvalidInput("config must set 'seed'");
  return j.at("seed").get<std::uint64_t>();
}

/// {"name": "constant"|"zero"|"indicator"|"ar1", ...parameters}
inline Spectrum spectrum_from_json(const json& j) {
  const auto name = j.at("name").get<std::string>();
  if (name == "constant") return constant_spectrum(j.value("value", 1.0));
  if (name == "zero") return zero_spectrum();
  if (name == "indicator") return indicator_spectrum(j.value("cutoff", 0.25), j.value("value", 1.0));
  if (name == "ar1") return ar1_spectrum(j.at("r").get<double>(), j.value("variance", 1.0));
  throw InvalidInput("unknown spectrum '" + name + "'");
}

/// {"f1": {...}, "f2": {...}, "g": {...}, "grid": 4096}; missing entries
/// default to the sinc coupling example.
inline SpectralGaussianField spectral_field_from_json(const json& j) {
  const auto grid = j.value("grid", SpectralGaussianField::kDefaultGrid);
  const Spectrum f1 = j.contains("f1") ? spectrum_from_json(j["f1"]) : constant_spectrum(1.0);
  const Spectrum f2 = j.contains("f2") ? spectrum_from_json(j["f2"]) : constant_spectrum(1.0);
  const Spectrum g = j.contains("g") ? spectrum_from_json(j["g"]) : indicator_spectrum(0.25, 1.0);
  return SpectralGaussianField(f1, f2, g, grid);
}

namespace dnls {

inline DnlsConfig config_from_json(const json& j) {
  DnlsConfig c;
  c.seed = require_seed(j);
  c.dimension = j.value("dimension", c.dimension);
  c.side = j.value("side", c.side);
  c.lambda = j.value("lambda", c.lambda);
  c.beta = j.value("beta", c.beta);
  c.mu = j.value("mu", c.mu);
  c.dt = j.value("dt", c.dt);
  c.samples = j.value("samples", c.samples);
  if (j.contains("hopping")) {
    for (const auto& h : j["hopping"]) c.hopping.push_back({h.at("offset").get<std::vector<int>>(), h.at("amplitude").get<double>()});
  } else {
    c.hopping = nearest_neighbor_hopping(c.dimension, c.mu);
  }
  validate(c);
  return c;
}

inline json to_json(const DnlsConfig& c) {
  json hop = json::array();
  for (const auto& h : c.hopping) hop.push_back({{"offset", h.offset}, {"amplitude", h.amplitude}});
  return {{"dimension", c.dimension}, {"side", c.side}, {"lambda", c.lambda}, {"beta", c.beta},
          {"mu", c.mu},           {"dt", c.dt},     {"samples", c.samples}, {"seed", c.seed},
          {"hopping", hop}};
}

}  // namespace dnls
}  // namespace wickbound
