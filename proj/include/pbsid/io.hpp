#pragma once

#include "pbsid/core.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace pbsid::io {

/// Shortest decimal text that parses back to the same double; locale independent.
[[nodiscard]] std::string format_double(double value);

/// Parses a full field as a double; throws DataError naming `where` on failure.
[[nodiscard]] double parse_double(std::string_view text, const std::string& where);

// ---- CSV datasets: header `t,u1..um,y1..yr`, one row per sample ----------

void write_csv(std::ostream& os, const core::SignalDataset& dataset);
[[nodiscard]] std::string to_csv(const core::SignalDataset& dataset);

/// Parse errors carry `source:line`. Columns named u* are inputs, y* outputs;
/// all inputs must precede the outputs. The sample period is taken from the
/// first two timestamps (1 s for shorter files).
[[nodiscard]] core::SignalDataset read_csv(std::istream& is, const std::string& source = "<csv>");
[[nodiscard]] core::SignalDataset parse_csv(const std::string& text,
                                            const std::string& source = "<csv>");

[[nodiscard]] core::SignalDataset load_csv(const std::filesystem::path& path);
void save_csv(const std::filesystem::path& path, const core::SignalDataset& dataset);

// ---- files ----------------------------------------------------------------

[[nodiscard]] std::string read_text(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

/// Identification/validation CSVs of a replay directory: identification.csv
/// and validation.csv, else the single *.csv whose name contains "ident"
/// resp. "valid".
[[nodiscard]] std::pair<std::filesystem::path, std::filesystem::path> find_replay_pair(
    const std::filesystem::path& dir);

/// FNV-1a 64-bit.
[[nodiscard]] std::uint64_t fnv1a(std::string_view bytes);
[[nodiscard]] std::string dataset_hash(const core::SignalDataset& dataset);

// ---- model JSON -------------------------------------------------------------

struct Provenance {
  std::string dataset_hash;
  std::string tool_version;
  char method = 'A';
  nlohmann::json scores = nlohmann::json::object();
};

struct StoredModel {
  core::InnovationModel model;
  std::optional<Vector> output_offset;  // subtracted from y before identification
  std::optional<Vector> input_offset;
  Provenance provenance;
};

[[nodiscard]] nlohmann::json matrix_to_json(const Matrix& m);
[[nodiscard]] Matrix matrix_from_json(const nlohmann::json& j, Index rows, Index cols,
                                      const std::string& name);

[[nodiscard]] nlohmann::json model_to_json(const StoredModel& stored);
[[nodiscard]] StoredModel model_from_json(const nlohmann::json& j);

[[nodiscard]] StoredModel load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const StoredModel& stored);

/// Two-space indented dump with a trailing newline.
[[nodiscard]] std::string dump(const nlohmann::json& j);

}  // namespace pbsid::io
