#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "beamsep/estimator.hpp"
#include "beamsep/signal.hpp"

namespace beamsep {

// File index tying a mixture to its ground-truth images and any externally
// produced estimates. Paths inside the JSON are relative to the manifest's
// directory and resolved at load time.
struct Manifest {
  int schema_version = 1;
  int sample_rate = 8000;
  int channels = 0;
  int sources = 0;
  std::string mixture_path;
  std::vector<std::vector<std::string>> truth_paths;  // [s][c], may be empty
  std::map<StageTag, std::vector<std::vector<std::string>>> external_paths;
  std::vector<std::vector<std::string>> rir_paths;  // [s][c], informational
  std::optional<std::string> metrics_path;
  std::optional<double> sir_db;
  std::optional<std::uint64_t> seed;

  static Manifest load(const std::string& path);
  void save(const std::string& path) const;

  MultichannelWaveform load_mixture() const;
  bool has_truth() const { return !truth_paths.empty(); }
  SourceImageSet load_truth() const;
  // Eagerly loads every external entry into an estimator spec.
  std::map<StageTag, SourceImageSet> load_external() const;
};

}  // namespace beamsep
