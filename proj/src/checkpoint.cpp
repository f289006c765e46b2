#include "rootscore/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rootscore/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace rootscore::nn {

using nlohmann::json;

void save_checkpoint(const std::string& path,
                     const std::vector<NamedTensor>& tensors) {
  json header;
  header["format_version"] = 1;
  json list = json::array();
  uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    json entry;
    entry["name"] = name;
    entry["offset"] = offset;
    entry["shape"] = t->shape;
    list.push_back(std::move(entry));
    offset += t->numel() * sizeof(float);
  }
  header["tensors"] = std::move(list);
  const std::string head = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  const uint32_t head_len = (uint32_t)head.size();
  out.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  out.write(head.data(), (std::streamsize)head.size());
  for (const auto& [name, t] : tensors) {
    out.write(reinterpret_cast<const char*>(t->data.data()),
              (std::streamsize)(t->data.size() * sizeof(float)));
  }
  if (!out) fail(ErrorKind::IoError, "write failed: " + path);
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open: " + path);
  uint32_t head_len = 0;
  in.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  if (!in) fail(ErrorKind::ParseError, "truncated checkpoint header: " + path);
  std::string head(head_len, '\0');
  in.read(head.data(), head_len);
  if (!in) fail(ErrorKind::ParseError, "truncated checkpoint header: " + path);

  json header;
  try {
    header = json::parse(head);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("bad checkpoint header: ") + e.what());
  }
  if (header.value("format_version", 0) != 1) {
    fail(ErrorKind::ParseError, "unsupported checkpoint format_version");
  }

  std::string payload((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  std::vector<NamedTensor> out;
  try {
    for (const auto& entry : header.at("tensors")) {
      NamedTensor nt;
      nt.name = entry.at("name").get<std::string>();
      const uint64_t offset = entry.at("offset").get<uint64_t>();
      std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
      auto t = make_tensor(std::move(shape));
      const size_t bytes = t->numel() * sizeof(float);
      if (offset + bytes > payload.size()) {
        fail(ErrorKind::ParseError, "checkpoint payload too short for tensor " +
                                        nt.name);
      }
      std::memcpy(t->data.data(), payload.data() + offset, bytes);
      nt.tensor = std::move(t);
      out.push_back(std::move(nt));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError,
         std::string("bad checkpoint tensor table: ") + e.what());
  }
  return out;
}

}  // namespace rootscore::nn
