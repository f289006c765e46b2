#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rootscore/image.hpp"

namespace rootscore {

struct ManifestEntry {
  std::string image;
  std::string mask;
};

// Newline-delimited JSON, one {"image":...,"mask":...} per line. Relative
// paths are interpreted against the manifest's own directory on load.
std::vector<ManifestEntry> load_manifest(const std::string& path);
void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

struct TruthRow {
  std::string path;
  double true_percentage = 0;
  std::string category;
};

// CSV `path,true_percentage,category` with a header row.
std::vector<TruthRow> load_truth_csv(const std::string& path);
void write_truth_csv(const std::string& path, const std::vector<TruthRow>& rows);

// Seeded shuffle, then the tail becomes validation. Deterministic; the two
// parts partition the input.
std::pair<std::vector<ManifestEntry>, std::vector<ManifestEntry>> split_dataset(
    std::vector<ManifestEntry> entries, double val_fraction, uint64_t seed);

struct Sample {
  RgbImage image;
  LabelMask mask;
};

// Reads both files; dimension mismatch is a DataError naming the sample.
Sample load_sample(const ManifestEntry& entry);

}  // namespace rootscore
