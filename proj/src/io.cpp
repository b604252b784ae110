#include "hamlearn/io.hpp"

#include <cstdio>

#include "hamlearn/errors.hpp"

namespace hamlearn {

BlobWriter::BlobWriter(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw ConfigError("BlobWriter: cannot open " + path.string());
}

TensorRef BlobWriter::put(std::span<const double> data) {
  TensorRef ref{offset_, data.size()};
  out_.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out_) throw ConfigError("BlobWriter: write failed");
  offset_ += data.size();
  return ref;
}

BlobReader::BlobReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw ConfigError("BlobReader: cannot open " + path.string());
}

std::vector<double> BlobReader::get(const TensorRef& ref) {
  std::vector<double> data(ref.count);
  in_.seekg(static_cast<std::streamoff>(ref.offset * sizeof(double)));
  in_.read(reinterpret_cast<char*>(data.data()),
           static_cast<std::streamsize>(ref.count * sizeof(double)));
  if (!in_) throw ConfigError("BlobReader: short read");
  return data;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted += "\"\"";
    else quoted += c;
  }
  quoted += '"';
  return quoted;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw ConfigError("CsvWriter: cannot open " + path.string());
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_escape(fields[i]);
  }
  out_ << "\r\n";
}

}  // namespace hamlearn
