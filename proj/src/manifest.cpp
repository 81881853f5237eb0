#include "beamsep/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "beamsep/wav.hpp"

namespace beamsep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::vector<std::string>> resolve_grid(const json& arr,
                                                   const fs::path& base,
                                                   int sources, int channels,
                                                   const std::string& what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != sources)
    throw IoError(what + " must list " + std::to_string(sources) + " sources");
  std::vector<std::vector<std::string>> out;
  for (const auto& row : arr) {
    if (!row.is_array() || static_cast<int>(row.size()) != channels)
      throw IoError(what + " rows must list " + std::to_string(channels) +
                    " channels");
    std::vector<std::string> paths;
    for (const auto& p : row)
      paths.push_back((base / p.get<std::string>()).string());
    out.push_back(std::move(paths));
  }
  return out;
}

SourceImageSet load_grid(const std::vector<std::vector<std::string>>& grid,
                         int sample_rate) {
  SourceImageSet set;
  for (const auto& row : grid) {
    MultichannelWaveform image;
    image.sample_rate = sample_rate;
    for (const auto& path : row) {
      MultichannelWaveform mono = read_wav(path);
      if (mono.channels() != 1)
        throw IoError(path + ": expected a mono image file");
      if (mono.sample_rate != sample_rate)
        throw IoError(path + ": sample rate does not match manifest");
      image.samples.push_back(std::move(mono.samples[0]));
    }
    set.images.push_back(std::move(image));
  }
  set.validate();
  return set;
}

}  // namespace

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open manifest");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path + ": manifest is not valid JSON: " + e.what());
  }
  const fs::path base = fs::path(path).parent_path();

  Manifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    m.sample_rate = j.at("sample_rate").get<int>();
    m.channels = j.at("channels").get<int>();
    m.sources = j.at("sources").get<int>();
    m.mixture_path = (base / j.at("mixture").get<std::string>()).string();
    if (j.contains("truth") && !j["truth"].empty())
      m.truth_paths =
          resolve_grid(j["truth"], base, m.sources, m.channels, "truth");
    if (j.contains("external_estimates"))
      for (const auto& entry : j["external_estimates"]) {
        const StageTag tag{entry.at("stage").get<int>(),
                           entry.at("iteration").get<int>()};
        m.external_paths[tag] =
            resolve_grid(entry.at("files"), base, m.sources, m.channels,
                         "external estimate");
      }
    if (j.contains("rirs") && !j["rirs"].empty())
      m.rir_paths = resolve_grid(j["rirs"], base, m.sources, m.channels, "rirs");
    if (j.contains("metrics") && !j["metrics"].is_null())
      m.metrics_path = (base / j["metrics"].get<std::string>()).string();
    if (j.contains("sir_db") && !j["sir_db"].is_null())
      m.sir_db = j["sir_db"].get<double>();
    if (j.contains("seed") && !j["seed"].is_null())
      m.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw IoError(path + ": manifest field error: " + e.what());
  }
  if (m.schema_version != 1)
    throw IoError(path + ": unsupported schema_version " +
                  std::to_string(m.schema_version));
  if (m.channels < 1 || m.sources < 1)
    throw IoError(path + ": channels and sources must be >= 1");
  return m;
}

void Manifest::save(const std::string& path) const {
  const fs::path base = fs::path(path).parent_path();
  auto rel = [&](const std::string& p) {
    return fs::path(p).lexically_proximate(base).string();
  };
  json j;
  j["schema_version"] = schema_version;
  j["sample_rate"] = sample_rate;
  j["channels"] = channels;
  j["sources"] = sources;
  j["mixture"] = rel(mixture_path);
  if (!truth_paths.empty()) {
    json truth = json::array();
    for (const auto& row : truth_paths) {
      json r = json::array();
      for (const auto& p : row) r.push_back(rel(p));
      truth.push_back(r);
    }
    j["truth"] = truth;
  }
  if (!external_paths.empty()) {
    json ext = json::array();
    for (const auto& [tag, grid] : external_paths) {
      json files = json::array();
      for (const auto& row : grid) {
        json r = json::array();
        for (const auto& p : row) r.push_back(rel(p));
        files.push_back(r);
      }
      ext.push_back({{"stage", tag.stage},
                     {"iteration", tag.iteration},
                     {"files", files}});
    }
    j["external_estimates"] = ext;
  }
  if (!rir_paths.empty()) {
    json rirs = json::array();
    for (const auto& row : rir_paths) {
      json r = json::array();
      for (const auto& p : row) r.push_back(rel(p));
      rirs.push_back(r);
    }
    j["rirs"] = rirs;
  }
  if (metrics_path) j["metrics"] = rel(*metrics_path);
  if (sir_db) j["sir_db"] = *sir_db;
  if (seed) j["seed"] = *seed;

  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot write manifest");
  out << j.dump(2) << "\n";
}

MultichannelWaveform Manifest::load_mixture() const {
  MultichannelWaveform mix = read_wav(mixture_path);
  if (mix.channels() != channels)
    throw IoError(mixture_path + ": expected " + std::to_string(channels) +
                  " channels, found " + std::to_string(mix.channels()));
  if (mix.sample_rate != sample_rate)
    throw IoError(mixture_path + ": sample rate does not match manifest");
  return mix;
}

SourceImageSet Manifest::load_truth() const {
  if (!has_truth()) throw IoError("manifest has no ground-truth entries");
  SourceImageSet truth = load_grid(truth_paths, sample_rate);
  truth.provenance = Provenance::ground_truth;
  truth.stage_tag = {0, 0};
  return truth;
}

std::map<StageTag, SourceImageSet> Manifest::load_external() const {
  std::map<StageTag, SourceImageSet> out;
  for (const auto& [tag, grid] : external_paths) {
    SourceImageSet set = load_grid(grid, sample_rate);
    set.stage_tag = tag;
    out.emplace(tag, std::move(set));
  }
  return out;
}

}  // namespace beamsep
