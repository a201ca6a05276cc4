#pragma once

// JSON and CSV import and export.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "randtree/harness.hpp"
#include "randtree/multiclass.hpp"

namespace randtree {

/// {"classes": [...], "lambda": [[...]], "mu": [[...]]}; ConfigError on a
/// malformed document.
RateMatrices rates_from_json(const nlohmann::json& doc);
RateMatrices load_rates(const std::filesystem::path& path);

/// Summary with the keys verdict, metrics, comparisons, meta (plus values,
/// distributions and warnings).
nlohmann::json result_to_json(const ExperimentResult& result);

std::string table_csv(const Table& table);

/// Writes <prefix>.json and <prefix>_<table>.csv for every table.
void write_result(const ExperimentResult& result, const std::filesystem::path& prefix);

}  // namespace randtree
