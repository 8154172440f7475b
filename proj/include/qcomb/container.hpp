#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "qcomb/analytic.hpp"
#include "qcomb/comb.hpp"
#include "qcomb/strategy.hpp"

namespace qcomb::container {

inline constexpr const char* kFormat = "qcomb-container";
inline constexpr int kVersion = 1;

using Json = nlohmann::json;

Json tensor_to_json(const LabeledTensor& t);
LabeledTensor tensor_from_json(const Json& j);
Json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const Json& j);

Json to_json(const Strategy& s);
Json to_json(const Comb& c);
Json to_json(const KrausStrategy& k);
Json to_json(const IsometrySequence& v);

// Checks the header and returns the "kind" field.
std::string kind_of(const Json& j);

Strategy strategy_from_json(const Json& j);
Comb comb_from_json(const Json& j);
KrausStrategy kraus_strategy_from_json(const Json& j);
IsometrySequence isometries_from_json(const Json& j);

Json read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Json& j);

}  // namespace qcomb::container
