#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

namespace wickbound {

inline constexpr int kReportSchemaVersion = 1;

/// Outcome of one numerical inequality check `lhs <= rhs`.
struct BoundReport {
  std::string id;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool flag = false;
  std::map<std::string, std::string> witnesses;
  std::map<std::string, double> constants;
  std::optional<int> n;
  std::optional<int> m;
  std::optional<double> p;
  std::string box;
};

/// Relative slack allowed on the right-hand side of every bound.
inline constexpr double kBoundSlack = 1e-12;

inline BoundReport make_bound(std::string id, double lhs, double rhs) {
  BoundReport r;
  r.id = std::move(id);
  r.lhs = lhs;
  r.rhs = rhs;
  r.ratio = rhs != 0.0 ? lhs / rhs : (lhs == 0.0 ? 0.0 : INFINITY);
  r.flag = std::isfinite(lhs) && lhs <= rhs * (1.0 + kBoundSlack);
  return r;
}

inline nlohmann::json p_to_json(double p) {
  if (std::isinf(p)) return "inf";
  return p;
}

inline void to_json(nlohmann::json& j, const BoundReport& r) {
  j = nlohmann::json{{"schema_version", kReportSchemaVersion},
                     {"id", r.id},
                     {"lhs", r.lhs},
                     {"rhs", r.rhs},
                     {"ratio", r.ratio},
                     {"flag", r.flag},
                     {"witnesses", r.witnesses},
                     {"constants", r.constants},
                     {"box", r.box}};
  j["n"] = r.n ? nlohmann::json(*r.n) : nlohmann::json(nullptr);
  j["m"] = r.m ? nlohmann::json(*r.m) : nlohmann::json(nullptr);
  j["p"] = r.p ? p_to_json(*r.p) : nlohmann::json(nullptr);
}

}  // namespace wickbound
