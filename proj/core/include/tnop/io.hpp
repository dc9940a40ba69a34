#pragma once

#include <filesystem>
#include <string>

#include "tnop/dataset.hpp"
#include "tnop/models.hpp"

namespace tnop {

inline constexpr int kDatasetSchemaVersion = 1;

/// Writes meta.json, inputs.bin, outputs.bin and, when present, ic.bin and
/// coords.bin (irregular grids). Arrays are raw little-endian float64, sample-major.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Reads a container, validating every file size against meta.json.
Dataset read_dataset(const std::filesystem::path& dir);

/// meta.json text for a dataset (pretty-printed, stable key order).
std::string dataset_meta_json(const Dataset& data);

/// Checkpoint: a magic line, a "header_bytes=<n>" line, a key=value header of
/// that many bytes (configuration, normalizer, param_count) and then the
/// flattened float64 parameters in depth-first order, little-endian.
void write_checkpoint(const Model& model, const std::filesystem::path& file);
Model read_checkpoint(const std::filesystem::path& file);

/// Header text alone; also used to compare checkpoints.
std::string checkpoint_header(const Model& model);

void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

}  // namespace tnop
