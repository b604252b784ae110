#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

namespace hamlearn {

// Reference into a float64 blob: element offset and count.
struct TensorRef {
  std::uint64_t offset = 0;
  std::uint64_t count = 0;
};

class BlobWriter {
 public:
  explicit BlobWriter(const std::filesystem::path& path);
  TensorRef put(std::span<const double> data);
  std::uint64_t size() const { return offset_; }

 private:
  std::ofstream out_;
  std::uint64_t offset_ = 0;
};

class BlobReader {
 public:
  explicit BlobReader(const std::filesystem::path& path);
  std::vector<double> get(const TensorRef& ref);

 private:
  std::ifstream in_;
};

// Formats a double with 17 significant digits (round-trips exactly).
std::string format_double(double v);

// RFC 4180 field quoting.
std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);
  void row(const std::vector<std::string>& fields);

 private:
  std::ofstream out_;
};

}  // namespace hamlearn
