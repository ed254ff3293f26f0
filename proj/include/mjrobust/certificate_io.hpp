#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mjrobust/lmi.hpp"

namespace mjrobust {

using Json = nlohmann::json;

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view data);
/// Hash of the canonical (sorted-key, compact) dump of a document.
std::string json_hash(const Json& doc);

/// Row-major nested arrays.
Json matrix_to_json(const Matrix& m);
/// `where` names the location in the enclosing document for error messages.
Matrix matrix_from_json(const Json& j, const std::string& where);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& where);

/// Numbers are written with 17 significant digits, so a load reproduces every
/// double exactly.
Json certificate_to_json(const Certificate& cert, const std::string& model_hash);
/// Throws InvalidInput naming the offending field.
Certificate certificate_from_json(const Json& j, std::string* model_hash = nullptr);

void save_json(const std::filesystem::path& path, const Json& doc);
Json load_json(const std::filesystem::path& path);

}  // namespace mjrobust
