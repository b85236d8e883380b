#include "landau/io.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <memory>

#include <openssl/evp.h>

#include "landau/error.hpp"

namespace landau {

std::string fmt(double v)
{
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(long v) { return std::to_string(v); }

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()), path_(path)
{
  if (!out_) throw Error("cannot open " + path.string() + " for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells)
{
  if (cells.size() != columns_)
    throw Error("csv row width " + std::to_string(cells.size()) + " != " +
                std::to_string(columns_) + " in " + path_.string());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\n") == std::string::npos) {
      out_ << c;
    } else {
      out_ << '"';
      for (char ch : c) {
        if (ch == '"') out_ << '"';
        out_ << ch;
      }
      out_ << '"';
    }
  }
  out_ << '\n';
}

void CsvWriter::comment(const std::string& text) { out_ << "# " << text << '\n'; }

void CsvWriter::close()
{
  out_.close();
  if (!out_) throw Error("write failed for " + path_.string());
}

void write_json(const fs::path& path, const ojson& j)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

ojson read_json(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return ojson::parse(in);
}

namespace {

struct MdCtxDeleter
{
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

class Sha256
{
 public:
  Sha256() : ctx_(EVP_MD_CTX_new())
  {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw Error("SHA-256 initialization failed");
  }
  void update(const void* data, std::size_t n)
  {
    if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) throw Error("SHA-256 update failed");
  }
  std::string hex()
  {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) throw Error("SHA-256 final failed");
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) s += digits[md[i] >> 4], s += digits[md[i] & 15];
    return s;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

}  // namespace

std::string sha256_file(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.update(buf, std::size_t(in.gcount()));
  }
  return h.hex();
}

std::string sha256_string(const std::string& data)
{
  Sha256 h;
  h.update(data.data(), data.size());
  return h.hex();
}

void write_matrix(const fs::path& base, const Eigen::MatrixXd& m, const ojson& meta)
{
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  fs::path bin = base;
  bin += ".bin";
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + bin.string());
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
  out.write(reinterpret_cast<const char*>(r.data()), std::streamsize(r.size() * sizeof(double)));
  if (!out) throw Error("write failed for " + bin.string());
  ojson side;
  side["format"] = "float64-le-row-major";
  side["rows"] = m.rows();
  side["cols"] = m.cols();
  side["data"] = bin.filename().string();
  side["meta"] = meta;
  fs::path js = base;
  js += ".json";
  write_json(js, side);
}

Eigen::MatrixXd read_matrix(const fs::path& base)
{
  fs::path js = base;
  js += ".json";
  const ojson side = read_json(js);
  const long rows = side.at("rows").get<long>(), cols = side.at("cols").get<long>();
  fs::path bin = base;
  bin += ".bin";
  std::ifstream in(bin, std::ios::binary);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r(rows, cols);
  in.read(reinterpret_cast<char*>(r.data()), std::streamsize(r.size() * sizeof(double)));
  if (in.gcount() != std::streamsize(r.size() * sizeof(double)))
    throw Error("truncated matrix file " + bin.string());
  return r;
}

ArtifactWriter::ArtifactWriter(const fs::path& dir, std::string command, std::string config_hash)
    : dir_(dir), command_(std::move(command)), config_hash_(std::move(config_hash))
{
  fs::create_directories(dir_);
}

void ArtifactWriter::add(const std::string& name)
{
  if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
}

void ArtifactWriter::timing(const std::string& stage, double seconds)
{
  timings_.emplace_back(stage, seconds);
}

fs::path ArtifactWriter::finalize(const ojson& summary)
{
  ojson m;
  m["command"] = command_;
  m["config_sha256"] = config_hash_;
  ojson files = ojson::array();
  std::vector<std::string> sorted = files_;
  std::sort(sorted.begin(), sorted.end());
  for (const auto& f : sorted) {
    ojson e;
    e["path"] = f;
    e["sha256"] = sha256_file(dir_ / f);
    e["bytes"] = fs::file_size(dir_ / f);
    files.push_back(e);
  }
  m["files"] = files;
  ojson t = ojson::object();
  for (const auto& [k, v] : timings_) t[k] = v;
  m["timings_s"] = t;
  m["summary"] = summary;
  const fs::path p = dir_ / "manifest.json";
  write_json(p, m);
  return p;
}

}  // namespace landau
