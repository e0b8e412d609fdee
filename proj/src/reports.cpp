#include <fstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "json.hpp"
#include "nndx/experiments.hpp"

namespace nndx {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

namespace {

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

std::string manifest_json(const ReportBundle& bundle, const std::vector<ManifestEntry>& entries) {
  nlohmann::ordered_json j;
  j["bundle"] = bundle.name;
  j["failed_stage"] = bundle.failed_stage ? nlohmann::ordered_json(*bundle.failed_stage) : nlohmann::ordered_json();
  auto& files = j["files"] = nlohmann::ordered_json::array();
  for (const auto& e : entries) files.push_back({{"file", e.file}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  return j.dump(2) + "\n";
}

std::vector<ManifestEntry> emit_reports(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());
  std::vector<ManifestEntry> entries;
  for (const auto& [name, content] : bundle.files) {
    write_file(dir / name, content);
    entries.push_back({name, content.size(), sha256_hex(content)});
  }
  write_file(dir / "manifest.json", manifest_json(bundle, entries));
  return entries;
}

}  // namespace nndx
