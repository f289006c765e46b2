#include "rootscore/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rootscore/error.hpp"
#include "rootscore/rng.hpp"

namespace rootscore {

using nlohmann::json;

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open manifest: " + path);
  // Relative entries are resolved against the manifest's directory, so a
  // dataset directory can be moved or renamed as a unit.
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string p) {
    if (!base.empty() && !std::filesystem::path(p).is_absolute())
      return (base / p).string();
    return p;
  };
  std::vector<ManifestEntry> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({resolve(j.at("image").get<std::string>()),
                     resolve(j.at("mask").get<std::string>())});
    } catch (const json::exception& e) {
      fail(ErrorKind::ParseError, path + ":" + std::to_string(lineno) + ": " +
                                      e.what());
    }
  }
  return out;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write manifest: " + path);
  for (const auto& e : entries) {
    out << json{{"image", e.image}, {"mask", e.mask}}.dump() << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

std::vector<TruthRow> load_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open truth csv: " + path);
  std::vector<TruthRow> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("path,", 0) == 0) continue;  // header
    std::istringstream ss(line);
    TruthRow row;
    std::string pct;
    if (!std::getline(ss, row.path, ',') || !std::getline(ss, pct, ',') ||
        !std::getline(ss, row.category)) {
      fail(ErrorKind::ParseError,
           path + ":" + std::to_string(lineno) + ": expected 3 CSV fields");
    }
    try {
      row.true_percentage = std::stod(pct);
    } catch (const std::exception&) {
      fail(ErrorKind::ParseError,
           path + ":" + std::to_string(lineno) + ": bad percentage: " + pct);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_truth_csv(const std::string& path, const std::vector<TruthRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot write truth csv: " + path);
  out << "path,true_percentage,category\n";
  char buf[40];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.9g", r.true_percentage);
    out << r.path << ',' << buf << ',' << r.category << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

std::pair<std::vector<ManifestEntry>, std::vector<ManifestEntry>> split_dataset(
    std::vector<ManifestEntry> entries, double val_fraction, uint64_t seed) {
  if (entries.size() < 2) {
    fail(ErrorKind::InsufficientData, "need at least 2 samples to split");
  }
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    fail(ErrorKind::ConfigError, "val_fraction must be in (0,1)");
  }
  Rng rng(mix_seed(seed, 0x73706c6974ull));  // "split"
  for (size_t i = entries.size() - 1; i > 0; --i) {
    std::swap(entries[i], entries[rng.below(i + 1)]);
  }
  size_t val_n = (size_t)std::llround(entries.size() * val_fraction);
  val_n = std::max<size_t>(1, std::min(val_n, entries.size() - 1));
  std::vector<ManifestEntry> val(entries.end() - (ptrdiff_t)val_n, entries.end());
  entries.resize(entries.size() - val_n);
  return {std::move(entries), std::move(val)};
}

Sample load_sample(const ManifestEntry& entry) {
  Sample s{read_image_png(entry.image), read_mask_png(entry.mask)};
  if (s.image.width != s.mask.width || s.image.height != s.mask.height) {
    fail(ErrorKind::DataError,
         "image/mask dimensions differ for sample " + entry.image);
  }
  return s;
}

}  // namespace rootscore
