#pragma once

#include <string>

#include "json.hpp"

#include "sotpim/cost_model.hpp"
#include "sotpim/workload.hpp"

// Machine-readable report emission: JSON documents (validated against the
// committed schema) and fixed-column CSV tables. Files are written once,
// atomically, at the end of a run.

namespace sotpim {

void write_file_atomic(const std::string& path, const std::string& content);

nlohmann::json cost_report_to_json(const CostReport& r);
nlohmann::json reconcile_to_json(const ReconcileReport& r);
nlohmann::json training_comparison_to_json(const TrainingComparison& t);

// cost table rows: op,design,latency_ns,energy_fj,area_mm2
std::string cost_csv_header();
std::string cost_csv_row(const std::string& op, const std::string& design,
                         const CostReport& r);

// Minimal structural JSON-schema check: type, properties, required, items,
// enum. Returns false and fills `err` on the first violation.
bool validate_against_schema(const nlohmann::json& doc,
                             const nlohmann::json& schema, std::string* err);

} // namespace sotpim
