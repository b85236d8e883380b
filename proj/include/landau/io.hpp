#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace landau {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// 17 significant digits, '.' decimal point.
std::string fmt(double v);
std::string fmt(long v);
inline std::string fmt(int v) { return fmt(long(v)); }
inline std::string fmt(std::size_t v) { return fmt(long(v)); }

/// Comma-separated file with LF line endings; cells with ',', '"' or LF are quoted.
class CsvWriter
{
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  /// Comment line "# text" (before or between rows).
  void comment(const std::string& text);
  void close();

 private:
  std::ofstream out_;
  std::size_t columns_;
  fs::path path_;
};

/// Two-space indented, key order as inserted, trailing newline.
void write_json(const fs::path& path, const ojson& j);

ojson read_json(const fs::path& path);

/// Lower-case hex SHA-256 of a file or a string.
std::string sha256_file(const fs::path& path);
std::string sha256_string(const std::string& data);

/**
 * @brief Row-major little-endian float64 container at `base.bin` with a JSON sidecar
 *        `base.json` holding the shape and the caller's metadata.
 */
void write_matrix(const fs::path& base, const Eigen::MatrixXd& m, const ojson& meta);
Eigen::MatrixXd read_matrix(const fs::path& base);

/// Output directory that records every emitted file and writes manifest.json last.
class ArtifactWriter
{
 public:
  ArtifactWriter(const fs::path& dir, std::string command, std::string config_hash);

  const fs::path& dir() const { return dir_; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  /// Records a file written below dir() (relative name).
  void add(const std::string& name);
  void timing(const std::string& stage, double seconds);

  /// Writes manifest.json with SHA-256 of every recorded file; returns its path.
  fs::path finalize(const ojson& summary = ojson::object());

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::string command_;
  std::string config_hash_;
  std::vector<std::string> files_;
  std::vector<std::pair<std::string, double>> timings_;
};

/// Wall-clock stopwatch.
class Stopwatch
{
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const
  {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace landau
