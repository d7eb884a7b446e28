#include "asymloss/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

#include "asymloss/error.hpp"
#include "asymloss/rng.hpp"

namespace asymloss {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    raise(ErrorKind::format, path.string() + ": truncated header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>(v & 0xFF));
}

std::string hex32(std::uint32_t v) {
  std::ostringstream s;
  s << "0x" << std::hex << v;
  return s.str();
}

}  // namespace

SynthKind synth_kind_from_string(const std::string& name) {
  if (name == "gaussians") return SynthKind::gaussians;
  if (name == "rings") return SynthKind::rings;
  raise(ErrorKind::config, "unknown synthetic dataset kind '" + name + "'");
}

Dataset synth_dataset(SynthKind kind, std::size_t n, std::size_t K, std::size_t D, double separation,
                      std::uint64_t seed) {
  if (K < 2) raise(ErrorKind::config, "synthetic data needs K >= 2");
  if (n < K) raise(ErrorKind::config, "synthetic data needs N >= K");
  if (D < 1) raise(ErrorKind::config, "feature dimension must be positive");
  if (!(separation > 0.0) || !std::isfinite(separation)) raise(ErrorKind::config, "separation must be positive");
  if (kind == SynthKind::rings && D < 2) raise(ErrorKind::config, "rings need at least 2 feature dimensions");

  Rng layout_rng = Rng::substream(seed, 0);
  Rng rng = Rng::substream(seed, 1);

  std::vector<std::vector<double>> centers(K, std::vector<double>(D, 0.0));
  if (kind == SynthKind::gaussians) {
    for (std::size_t k = 0; k < K; ++k) {
      if (D == 1) {
        centers[k][0] = separation * static_cast<double>(k);
      } else if (D == 2) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(K);
        centers[k][0] = separation * std::cos(angle);
        centers[k][1] = separation * std::sin(angle);
      } else {
        double norm = 0.0;
        for (double& c : centers[k]) {
          c = layout_rng.normal();
          norm += c * c;
        }
        norm = std::sqrt(norm);
        for (double& c : centers[k]) c *= separation / norm;
      }
    }
  }

  Dataset data;
  data.num_classes = K;
  data.feature_dim = D;
  data.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % K;
    Sample s;
    s.features.resize(D);
    if (kind == SynthKind::gaussians) {
      for (std::size_t d = 0; d < D; ++d) s.features[d] = centers[k][d] + rng.normal();
    } else {
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      const double radius = separation * static_cast<double>(k + 1) + rng.normal();
      s.features[0] = radius * std::cos(angle);
      s.features[1] = radius * std::sin(angle);
      for (std::size_t d = 2; d < D; ++d) s.features[d] = rng.normal();
    }
    s.clean_label = ClassLabel{k};
    s.observed_label = ClassLabel{k};
    data.samples.push_back(std::move(s));
  }
  return data;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto images = read_bytes(images_path);
  const auto labels = read_bytes(labels_path);

  const std::uint32_t img_magic = read_be32(images, 0, images_path);
  if (img_magic != kIdxImagesMagic) {
    raise(ErrorKind::format, images_path.string() + ": bad magic " + hex32(img_magic) +
                                 " at byte offset 0 (expected 0x803)");
  }
  const std::uint32_t lbl_magic = read_be32(labels, 0, labels_path);
  if (lbl_magic != kIdxLabelsMagic) {
    raise(ErrorKind::format, labels_path.string() + ": bad magic " + hex32(lbl_magic) +
                                 " at byte offset 0 (expected 0x801)");
  }
  const std::size_t n = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t n_labels = read_be32(labels, 4, labels_path);
  if (n != n_labels) {
    raise(ErrorKind::format, "image count " + std::to_string(n) + " does not match label count " +
                                 std::to_string(n_labels));
  }
  const std::size_t pixels = rows * cols;
  constexpr std::size_t kImageHeader = 16;
  constexpr std::size_t kLabelHeader = 8;
  if (images.size() < kImageHeader + n * pixels) {
    raise(ErrorKind::format, images_path.string() + ": truncated pixel data at byte offset " +
                                 std::to_string(images.size()));
  }
  if (labels.size() < kLabelHeader + n) {
    raise(ErrorKind::format, labels_path.string() + ": truncated label data at byte offset " +
                                 std::to_string(labels.size()));
  }

  Dataset data;
  data.feature_dim = pixels;
  std::size_t max_label = 1;
  data.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.features.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) {
      s.features[p] = static_cast<double>(images[kImageHeader + i * pixels + p]) / 255.0;
    }
    const std::size_t y = labels[kLabelHeader + i];
    max_label = std::max(max_label, y);
    s.clean_label = ClassLabel{y};
    s.observed_label = ClassLabel{y};
    data.samples.push_back(std::move(s));
  }
  data.num_classes = max_label + 1;
  return data;
}

void write_idx(const Dataset& data, std::size_t rows, std::size_t cols, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  if (rows * cols != data.feature_dim) raise(ErrorKind::invalid_input, "rows * cols must equal feature_dim");
  std::string img;
  append_be32(img, kIdxImagesMagic);
  append_be32(img, static_cast<std::uint32_t>(data.size()));
  append_be32(img, static_cast<std::uint32_t>(rows));
  append_be32(img, static_cast<std::uint32_t>(cols));
  std::string lbl;
  append_be32(lbl, kIdxLabelsMagic);
  append_be32(lbl, static_cast<std::uint32_t>(data.size()));
  for (const Sample& s : data.samples) {
    for (double v : s.features) {
      img.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
    }
    if (s.clean_label.index > 255) raise(ErrorKind::invalid_input, "IDX labels must fit in one byte");
    lbl.push_back(static_cast<char>(static_cast<unsigned char>(s.clean_label.index)));
  }
  write_text_file(images_path, img);
  write_text_file(labels_path, lbl);
}

nlohmann::json dataset_to_json(const Dataset& data) {
  nlohmann::json features = nlohmann::json::array();
  std::vector<std::size_t> labels;
  std::vector<std::size_t> observed;
  for (const Sample& s : data.samples) {
    features.push_back(s.features);
    labels.push_back(s.clean_label.index);
    observed.push_back(s.observed_label.index);
  }
  return {{"num_classes", data.num_classes},
          {"feature_dim", data.feature_dim},
          {"features", features},
          {"labels", labels},
          {"observed", observed}};
}

Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset data;
  try {
    data.num_classes = j.at("num_classes").get<std::size_t>();
    data.feature_dim = j.at("feature_dim").get<std::size_t>();
    const auto& features = j.at("features");
    const auto labels = j.at("labels").get<std::vector<std::size_t>>();
    const auto observed =
        j.contains("observed") ? j.at("observed").get<std::vector<std::size_t>>() : labels;
    if (features.size() != labels.size() || observed.size() != labels.size()) {
      raise(ErrorKind::format, "dataset arrays have different lengths");
    }
    data.samples.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      Sample& s = data.samples[i];
      s.features = features[i].get<std::vector<double>>();
      s.clean_label = ClassLabel{labels[i]};
      s.observed_label = ClassLabel{observed[i]};
      s.flipped = labels[i] != observed[i];
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::format, std::string("malformed dataset file: ") + e.what());
  }
  data.validate();
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  write_text_file(path, dataset_to_json(data).dump() + "\n");
}

Dataset load_dataset(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorKind::format, path.string() + ": " + e.what());
  }
  return dataset_from_json(j);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) raise(ErrorKind::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::io, "cannot write " + path.string());
  out << text;
  if (!out) raise(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace asymloss
