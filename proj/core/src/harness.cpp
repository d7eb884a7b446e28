#include "asymloss/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "asymloss/dataset_io.hpp"
#include "asymloss/error.hpp"
#include "asymloss/rng.hpp"

#ifndef ASYMLOSS_VERSION_STRING
#define ASYMLOSS_VERSION_STRING "dev"
#endif

namespace asymloss {

namespace {

using nlohmann::json;

std::string fmt_double(double v, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string noise_kind_name(NoiseKind kind) { return to_json(NoiseSpec{.kind = kind}).at("kind"); }

// Runs `body`, re-raising any failure with the stage name attached.
template <typename F>
auto staged(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("[") + stage + "] " + e.message());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::numeric, std::string("[") + stage + "] " + e.what());
  }
}

json dataset_config_json(const DatasetConfig& d) {
  json j{{"kind", d.kind}};
  if (d.kind == "gaussians" || d.kind == "rings") {
    j["n_train"] = d.n_train;
    j["n_test"] = d.n_test;
    j["num_classes"] = d.num_classes;
    j["feature_dim"] = d.feature_dim;
    j["separation"] = d.separation;
    j["seed"] = d.seed;
  } else if (d.kind == "idx") {
    j["train_images"] = d.train_images;
    j["train_labels"] = d.train_labels;
    j["test_images"] = d.test_images;
    j["test_labels"] = d.test_labels;
  } else {
    j["train"] = d.train_file;
    j["test"] = d.test_file;
  }
  return j;
}

TrainReport report_from_json(const json& j) {
  TrainReport r;
  for (const auto& e : j.at("per_epoch")) {
    r.per_epoch.push_back({.epoch = e.at("epoch"),
                           .lr = e.at("lr"),
                           .train_loss = e.at("train_loss"),
                           .train_acc_noisy = e.at("train_acc_noisy"),
                           .train_acc_clean = e.at("train_acc_clean"),
                           .test_acc = e.at("test_acc")});
  }
  r.final_test_acc = j.at("final_test_acc");
  for (const auto& h : j.value("histograms", json::array())) {
    r.histograms.push_back({.epoch = h.at("epoch"),
                            .counts_clean = h.at("counts_clean").get<std::vector<std::size_t>>(),
                            .counts_flipped = h.at("counts_flipped").get<std::vector<std::size_t>>()});
  }
  return r;
}

}  // namespace

std::string version_string() { return "asymloss " ASYMLOSS_VERSION_STRING; }

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) raise(ErrorKind::config, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("dataset")) {
      const json& d = j.at("dataset");
      DatasetConfig& ds = c.dataset;
      ds.kind = d.value("kind", ds.kind);
      ds.n_train = d.value("n_train", ds.n_train);
      ds.n_test = d.value("n_test", ds.n_test);
      ds.num_classes = d.value("num_classes", ds.num_classes);
      ds.feature_dim = d.value("feature_dim", ds.feature_dim);
      ds.separation = d.value("separation", ds.separation);
      ds.seed = d.value("seed", ds.seed);
      ds.train_images = d.value("train_images", std::string{});
      ds.train_labels = d.value("train_labels", std::string{});
      ds.test_images = d.value("test_images", std::string{});
      ds.test_labels = d.value("test_labels", std::string{});
      ds.train_file = d.value("train", std::string{});
      ds.test_file = d.value("test", std::string{});
      if (ds.kind != "gaussians" && ds.kind != "rings" && ds.kind != "idx" && ds.kind != "file") {
        raise(ErrorKind::config, "unknown dataset kind '" + ds.kind + "'");
      }
    }
    if (j.contains("noise")) c.noise = noise_from_json(j.at("noise"));
    if (j.contains("loss")) c.loss = loss_from_json(j.at("loss"));
    if (j.contains("mlp")) c.mlp.hidden = j.at("mlp").value("hidden", c.mlp.hidden);
    OptConfig opt_defaults;
    opt_defaults.seed = c.seed;
    c.opt = opt_from_json(j.value("opt", json::object()), opt_defaults);
    c.outputs = j.value("outputs", c.outputs);
    c.histogram_epochs = j.value("histogram_epochs", c.histogram_epochs);
  } catch (const json::exception& e) {
    raise(ErrorKind::config, std::string("malformed experiment config: ") + e.what());
  }
  c.loss.validate();
  return c;
}

ExperimentConfig config_from_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  c.source_text = text;
  return c;
}

json to_json(const ExperimentConfig& c) {
  return {{"dataset", dataset_config_json(c.dataset)},
          {"noise", to_json(c.noise)},
          {"loss", to_json(c.loss)},
          {"mlp", {{"hidden", c.mlp.hidden}}},
          {"opt", to_json(c.opt)},
          {"seed", c.seed},
          {"outputs", c.outputs},
          {"histogram_epochs", c.histogram_epochs}};
}

std::string run_id(const ExperimentConfig& config) {
  json canon = to_json(config);
  canon.erase("outputs");
  const std::string text = canon.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::pair<Dataset, Dataset> build_datasets(const DatasetConfig& d) {
  if (d.kind == "gaussians" || d.kind == "rings") {
    const SynthKind kind = synth_kind_from_string(d.kind);
    return {synth_dataset(kind, d.n_train, d.num_classes, d.feature_dim, d.separation, d.seed),
            synth_dataset(kind, d.n_test, d.num_classes, d.feature_dim, d.separation,
                          splitmix_mix(d.seed))};
  }
  if (d.kind == "idx") {
    Dataset train = load_idx(d.train_images, d.train_labels);
    Dataset test = load_idx(d.test_images, d.test_labels);
    const std::size_t K = std::max(train.num_classes, test.num_classes);
    train.num_classes = test.num_classes = K;
    return {std::move(train), std::move(test)};
  }
  if (d.kind == "file") return {load_dataset(d.train_file), load_dataset(d.test_file)};
  raise(ErrorKind::config, "unknown dataset kind '" + d.kind + "'");
}

std::string metrics_csv(const TrainReport& report) {
  std::ostringstream out;
  out << "epoch,lr,train_loss,train_acc_noisy,train_acc_clean,test_acc\n";
  for (const auto& m : report.per_epoch) {
    out << m.epoch << ',' << fmt_double(m.lr) << ',' << fmt_double(m.train_loss) << ','
        << fmt_double(m.train_acc_noisy) << ',' << fmt_double(m.train_acc_clean) << ','
        << fmt_double(m.test_acc) << '\n';
  }
  return out.str();
}

RunRecord run_experiment(const ExperimentConfig& config, bool persist) {
  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.run_id = run_id(config);
  record.config = to_json(config);
  record.config_text = config.source_text.empty() ? record.config.dump(2) + "\n" : config.source_text;
  record.loss_name = loss_name(config.loss);
  record.noise = config.noise;
  record.dataset = dataset_config_json(config.dataset);
  record.version = version_string();

  staged("config", [&] {
    config.loss.validate();
    config.opt.validate();
  });
  auto [train_clean, test_set] = staged("data", [&] { return build_datasets(config.dataset); });
  Dataset train_noisy = staged("noise", [&] {
    Dataset noisy = inject(train_clean, config.noise, config.seed);
    record.transition = empirical_rates(train_clean, noisy, config.noise);
    return noisy;
  });
  record.train = staged("train", [&] {
    return train(train_noisy, test_set, config.mlp, config.opt, config.loss, config.histogram_epochs);
  });
  record.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (persist) {
    const std::filesystem::path dir = std::filesystem::path(config.outputs) / record.run_id;
    try {
      staged("persist", [&] {
        write_text_file(dir / "config.json", record.config_text);
        write_text_file(dir / "metrics.csv", metrics_csv(record.train));
        json hist = json::array();
        for (const auto& h : record.train.histograms) hist.push_back(to_json(h));
        write_text_file(dir / "histograms.json", hist.dump(2) + "\n");
        write_text_file(dir / "transition.json", to_json(record.transition).dump(2) + "\n");
        write_text_file(dir / "record.json", to_json(record).dump(2) + "\n");
      });
    } catch (...) {
      std::error_code ec;
      std::filesystem::remove_all(dir, ec);
      throw;
    }
  }
  return record;
}

json to_json(const RunRecord& r) {
  return {{"run_id", r.run_id},
          {"version", r.version},
          {"duration_s", r.duration_s},
          {"loss_name", r.loss_name},
          {"config", r.config},
          {"config_text", r.config_text},
          {"dataset", r.dataset},
          {"noise", to_json(r.noise)},
          {"final_test_acc", r.train.final_test_acc},
          {"train", to_json(r.train)},
          {"transition", to_json(r.transition)}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  try {
    r.run_id = j.at("run_id");
    r.version = j.value("version", std::string{});
    r.duration_s = j.value("duration_s", 0.0);
    r.loss_name = j.at("loss_name");
    r.config = j.at("config");
    r.config_text = j.value("config_text", r.config.dump(2) + "\n");
    r.dataset = j.at("dataset");
    r.noise = noise_from_json(j.at("noise"));
    r.train = report_from_json(j.at("train"));
    const json& t = j.at("transition");
    if (!t.at("matrix").is_null()) r.transition.matrix = t.at("matrix").get<std::vector<std::vector<double>>>();
    r.transition.empirical_matrix = t.at("empirical_matrix").get<std::vector<std::vector<double>>>();
    r.transition.row_counts = t.at("row_counts").get<std::vector<std::size_t>>();
    r.transition.max_abs_diff = t.at("max_abs_diff");
  } catch (const json::exception& e) {
    raise(ErrorKind::format, std::string("malformed run record: ") + e.what());
  }
  return r;
}

RunRecord load_run_record(const std::filesystem::path& path) {
  const std::filesystem::path file = std::filesystem::is_directory(path) ? path / "record.json" : path;
  json j;
  try {
    j = json::parse(read_text_file(file));
  } catch (const json::parse_error& e) {
    raise(ErrorKind::format, file.string() + ": " + e.what());
  }
  return record_from_json(j);
}

ComparisonTable compare_runs(const std::vector<RunRecord>& records) {
  if (records.empty()) raise(ErrorKind::invalid_input, "compare_runs needs at least one record");
  for (const auto& r : records) {
    if (r.dataset != records.front().dataset) {
      raise(ErrorKind::invalid_input, "run " + r.run_id + " uses a different dataset than run " +
                                          records.front().run_id);
    }
  }
  // Runs pair on the full loss spec; the label only adds the AMSE magnitude.
  using Key = std::tuple<double, std::string, std::string>;
  std::map<Key, std::vector<double>> groups;
  std::map<std::string, std::string> labels;
  for (const auto& r : records) {
    std::string canonical = r.loss_name;  // records without a stored loss spec
    if (r.config.is_object() && r.config.contains("loss")) {
      const LossSpec spec = loss_from_json(r.config.at("loss"));
      canonical = to_json(spec).dump();
      labels.emplace(canonical, loss_label(spec));
    } else {
      labels.emplace(canonical, r.loss_name);
    }
    groups[{r.noise.rate(), noise_kind_name(r.noise.kind), canonical}].push_back(r.train.final_test_acc);
  }
  ComparisonTable table;
  for (const auto& [key, accs] : groups) {
    ComparisonRow row;
    row.noise_rate = std::get<0>(key);
    row.noise_kind = std::get<1>(key);
    row.loss = labels.at(std::get<2>(key));
    row.runs = accs.size();
    double sum = 0.0;
    for (double a : accs) sum += a;
    row.mean_acc = sum / static_cast<double>(accs.size());
    if (accs.size() > 1) {
      double ss = 0.0;
      for (double a : accs) ss += (a - row.mean_acc) * (a - row.mean_acc);
      row.std_acc = std::sqrt(ss / static_cast<double>(accs.size() - 1));
    }
    table.rows.push_back(row);
  }
  return table;
}

std::string ComparisonTable::csv() const {
  std::ostringstream out;
  out << "noise,rate,loss,runs,mean_acc,std_acc\n";
  for (const auto& r : rows) {
    out << r.noise_kind << ',' << fmt_double(r.noise_rate) << ',' << r.loss << ',' << r.runs << ','
        << fmt_double(r.mean_acc) << ',' << fmt_double(r.std_acc) << '\n';
  }
  return out.str();
}

std::string ComparisonTable::text() const {
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"noise", "rate", "loss", "runs", "last-epoch test acc (%)"});
  for (const auto& r : rows) {
    char acc[64];
    std::snprintf(acc, sizeof acc, "%.2f±%.2f", 100.0 * r.mean_acc, 100.0 * r.std_acc);
    cells.push_back({r.noise_kind, fmt_double(r.noise_rate, 4), r.loss, std::to_string(r.runs), acc});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < 5; ++c) {
      out << row[c];
      if (c + 1 < 5) out << std::string(width[c] - row[c].size() + 2, ' ');
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace asymloss
