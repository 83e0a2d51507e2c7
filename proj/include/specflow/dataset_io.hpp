#pragma once

#include <string>

#include "specflow/jsonutil.hpp"
#include "specflow/synth.hpp"

namespace specflow {

inline constexpr const char* kDatasetFormat = "specflow-ds-v1";

// Line-oriented dataset file: version line, one JSON header record with the
// generator config and split counts, then one JSON scenario per line
// (train records first, then val). Numeric fields round-trip exactly.
std::string serialize_dataset(const DatasetSplit& ds);
void save_dataset(const DatasetSplit& ds, const std::string& path);

// Throws VERSION_MISMATCH on an unknown version line and DS_COUNT_MISMATCH
// when the header counts disagree with the number of records.
DatasetSplit load_dataset(const std::string& path);

ojson generator_config_to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const ojson& j);

}  // namespace specflow
