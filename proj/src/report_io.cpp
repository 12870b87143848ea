#include "sotpim/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sotpim {

using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

json cost_report_to_json(const CostReport& r) {
  json j;
  j["latency_ns"] = r.latency_ns;
  j["energy_fj"] = r.energy_fj;
  j["area_mm2"] = r.area_mm2;
  json bd = json::object();
  for (const auto& [k, v] : r.breakdown)
    bd[k] = {{"latency_ns", v.latency_ns}, {"energy_fj", v.energy_fj}};
  j["breakdown"] = bd;
  json bk = json::object();
  for (const auto& [k, v] : r.by_kind)
    bk[k] = {{"latency_ns", v.latency_ns}, {"energy_fj", v.energy_fj}};
  j["by_kind"] = bk;
  return j;
}

json reconcile_to_json(const ReconcileReport& r) {
  const char* op = r.op == OpKind::Add ? "add"
                   : r.op == OpKind::Mul ? "mul"
                                         : "mac";
  return json{{"op", op},
              {"ops", r.ops},
              {"analytic_latency_ns", r.analytic_latency_ns},
              {"simulated_latency_ns", r.simulated_latency_ns},
              {"latency_rel_dev", r.latency_rel_dev},
              {"analytic_energy_fj", r.analytic_energy_fj},
              {"simulated_energy_fj", r.simulated_energy_fj},
              {"energy_rel_dev", r.energy_rel_dev},
              {"tolerance", r.tolerance},
              {"flagged", r.flagged}};
}

json training_comparison_to_json(const TrainingComparison& t) {
  return json{{"proposed", cost_report_to_json(t.proposed)},
              {"baseline", cost_report_to_json(t.baseline)},
              {"ratios",
               {{"area", t.area_ratio},
                {"latency", t.latency_ratio},
                {"energy", t.energy_ratio}}}};
}

std::string cost_csv_header() {
  return "op,design,latency_ns,energy_fj,area_mm2\n";
}

std::string cost_csv_row(const std::string& op, const std::string& design,
                         const CostReport& r) {
  std::ostringstream os;
  os << op << ',' << design << ',' << r.latency_ns << ',' << r.energy_fj
     << ',' << r.area_mm2 << '\n';
  return os.str();
}

namespace {

bool type_matches(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "number") return v.is_number();
  if (t == "integer") return v.is_number_integer();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  return false;
}

bool validate_node(const json& doc, const json& schema, std::string path,
                   std::string* err) {
  if (schema.contains("type")) {
    const auto& t = schema["type"];
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(doc, t.get<std::string>());
    } else if (t.is_array()) {
      for (const auto& alt : t)
        if (type_matches(doc, alt.get<std::string>())) ok = true;
    }
    if (!ok) {
      if (err) *err = path + ": type mismatch";
      return false;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema["enum"])
      if (v == doc) ok = true;
    if (!ok) {
      if (err) *err = path + ": not in enum";
      return false;
    }
  }
  if (doc.is_object()) {
    if (schema.contains("required")) {
      for (const auto& k : schema["required"]) {
        if (!doc.contains(k.get<std::string>())) {
          if (err) *err = path + ": missing required " + k.get<std::string>();
          return false;
        }
      }
    }
    if (schema.contains("properties")) {
      for (const auto& [k, sub] : schema["properties"].items()) {
        if (doc.contains(k)) {
          if (!validate_node(doc[k], sub, path + "/" + k, err)) return false;
        }
      }
    }
    if (schema.contains("additionalProperties") &&
        schema["additionalProperties"].is_object()) {
      const auto& sub = schema["additionalProperties"];
      for (const auto& [k, v] : doc.items()) {
        if (schema.contains("properties") &&
            schema["properties"].contains(k))
          continue;
        if (!validate_node(v, sub, path + "/" + k, err)) return false;
      }
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    std::size_t i = 0;
    for (const auto& v : doc) {
      if (!validate_node(v, schema["items"], path + "[" + std::to_string(i) +
                                                 "]",
                         err))
        return false;
      ++i;
    }
  }
  return true;
}

} // namespace

bool validate_against_schema(const json& doc, const json& schema,
                             std::string* err) {
  return validate_node(doc, schema, "", err);
}

} // namespace sotpim
