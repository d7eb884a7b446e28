#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "asymloss/core.hpp"

namespace asymloss {

enum class SynthKind { gaussians, rings };

SynthKind synth_kind_from_string(const std::string& name);

/// Desk-scale stand-in for an image benchmark. Labels cycle 0..K-1 so class
/// counts differ by at most one; all samples start clean.
///
///   gaussians  K unit-variance isotropic clusters. Centers sit at radius
///              `separation` from the origin: evenly spaced on the circle when
///              D = 2, random unit directions when D > 2, spaced
///              `separation` apart on the line when D = 1.
///   rings      K concentric annuli in the first two coordinates with radii
///              separation * (k + 1) and unit radial jitter; further
///              coordinates are N(0, 1). Needs D >= 2.
Dataset synth_dataset(SynthKind kind, std::size_t n, std::size_t num_classes, std::size_t feature_dim,
                      double separation, std::uint64_t seed);

/// Reads an IDX image file (magic 0x00000803, u8 pixels, N x rows x cols) and
/// label file (magic 0x00000801). Pixels are scaled to [0, 1] and flattened;
/// K is one more than the largest label (at least 2).
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes the two IDX files for a dataset whose features are bytes / 255
/// (rounded) laid out as rows x cols.
void write_idx(const Dataset& data, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// JSON dataset file:
///   {"num_classes": K, "feature_dim": D, "features": [[...], ...],
///    "labels": [clean...], "observed": [observed...]}
/// "observed" may be omitted (clean data).
nlohmann::json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const nlohmann::json& j);
void save_dataset(const Dataset& data, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace asymloss
