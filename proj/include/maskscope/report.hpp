#pragma once

// Report tables rendered as CSV or aligned text, SHA-256 file digests and
// all-or-nothing output directories.

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "maskscope/error.hpp"

namespace maskscope {

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size())
      throw Error(Errc::shape_mismatch, "table " + name + ": row has " + std::to_string(row.size()) +
                                            " cells, expected " + std::to_string(columns.size()));
    rows.push_back(std::move(row));
  }
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string render_csv(const Table& t) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(cells[i]);
    }
    out += '\n';
  };
  line(t.columns);
  for (const auto& r : t.rows) line(r);
  return out;
}

inline std::string render_text(const Table& t) {
  std::vector<std::size_t> width(t.columns.size());
  for (std::size_t i = 0; i < t.columns.size(); ++i) width[i] = t.columns[i].size();
  for (const auto& r : t.rows)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  std::string out = t.name + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    std::string l;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) l += "  ";
      l += cells[i];
      if (i + 1 < cells.size()) l.append(width[i] - cells[i].size(), ' ');
    }
    out += l + '\n';
  };
  line(t.columns);
  std::size_t rule = 0;
  for (std::size_t i = 0; i < width.size(); ++i) rule += width[i] + (i ? 2 : 0);
  out += std::string(rule, '-') + '\n';
  for (const auto& r : t.rows) line(r);
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("SHA-256 initialisation failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  void update(const std::string& s) { update(s.data(), s.size()); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 0xf];
    }
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string sha256_hex(const std::string& s) {
  Sha256 h;
  h.update(s);
  return h.hex();
}

inline std::string sha256_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + p.string() + "'");
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

/// Builds a directory beside its final location and renames it into place,
/// so readers never observe a partial result. Abandoned staging
/// directories are removed on destruction.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path final_path)
      : final_(std::move(final_path)), staging_(staging_name(final_)) {
    std::filesystem::remove_all(staging_);
    std::filesystem::create_directories(staging_);
  }
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;
  ~StagedDirectory() {
    if (!committed_) {
      std::error_code ec;
      std::filesystem::remove_all(staging_, ec);
    }
  }

  const std::filesystem::path& path() const { return staging_; }

  void write_file(const std::string& name, const std::string& contents) const {
    std::ofstream out(staging_ / name, std::ios::binary);
    out << contents;
    if (!out) throw Error(Errc::io, "cannot write '" + (staging_ / name).string() + "'");
  }

  void commit() {
    if (std::filesystem::exists(final_)) {
      const auto old = final_.string() + ".old";
      std::filesystem::remove_all(old);
      std::filesystem::rename(final_, old);
      std::filesystem::rename(staging_, final_);
      std::filesystem::remove_all(old);
    } else {
      if (final_.has_parent_path()) std::filesystem::create_directories(final_.parent_path());
      std::filesystem::rename(staging_, final_);
    }
    committed_ = true;
  }

 private:
  static std::filesystem::path staging_name(const std::filesystem::path& p) {
    auto s = p;
    if (!s.has_filename()) s = s.parent_path();
    return s.string() + ".partial";
  }

  std::filesystem::path final_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

/// Writes a file via a sibling temporary and rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const auto tmp = path.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << contents;
    if (!out) throw Error(Errc::io, "cannot write '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

enum class OutputFormat { csv, text, both };

struct ReportBundle {
  std::vector<Table> tables;
  nlohmann::ordered_json metadata;

  const Table* find(const std::string& name) const {
    for (const auto& t : tables)
      if (t.name == name) return &t;
    return nullptr;
  }
};

inline void write_bundle(StagedDirectory& dir, const ReportBundle& b, OutputFormat fmt) {
  std::string text;
  for (const auto& t : b.tables) {
    if (fmt != OutputFormat::text) dir.write_file(t.name + ".csv", render_csv(t));
    if (fmt != OutputFormat::csv) text += render_text(t) + "\n";
  }
  if (fmt != OutputFormat::csv) dir.write_file("report.txt", text);
  dir.write_file("metadata.json", b.metadata.dump(2) + "\n");
}

}  // namespace maskscope
