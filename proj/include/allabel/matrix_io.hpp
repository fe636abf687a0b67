#pragma once

#include <filesystem>
#include <string>

#include "allabel/similarity.hpp"
#include "json.hpp"

namespace allabel {

// Binary container, all integers little-endian:
//   "ALSM" | u16 version | u32 n_rows | u32 n_cols | u8 flags (bit 0: normalized)
//   n_rows x (u32 byte length | UTF-8 id)      row id table
//   n_cols x (u32 byte length | UTF-8 id)      column id table
//   n_rows * n_cols IEEE-754 binary64, row-major, NaN at masked cells
inline constexpr std::uint16_t kMatrixFormatVersion = 1;

std::string encode_matrix(const SimilarityMatrix& matrix);
SimilarityMatrix decode_matrix(const std::string& bytes, const std::string& source = "<memory>");

void save_matrix(const SimilarityMatrix& matrix, const std::filesystem::path& path);
SimilarityMatrix load_matrix(const std::filesystem::path& path);

/// Lossless debug dump: masked cells become null, doubles use round-trip
/// precision.
nlohmann::json matrix_to_json(const SimilarityMatrix& matrix);
SimilarityMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace allabel
