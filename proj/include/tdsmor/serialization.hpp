#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tdsmor/delay_system.hpp"

namespace tdsmor {

/// Everything stored in a model file. Full systems leave v, w empty and reduced false.
struct ModelRecord {
  std::string name;
  DelaySystem system;
  InitialData init;
  bool reduced = false;
  Method method = Method::walsh;
  Eigen::MatrixXd v;
  Eigen::MatrixXd w;
  ReductionInfo info;
};

ModelRecord make_record(std::string name, DelaySystem system, InitialData init);
ModelRecord make_record(const ReducedSystem& reduced);
ReducedSystem to_reduced(const ModelRecord& record);

enum class FileFormat { binary, json };

FileFormat parse_format(const std::string& name);

/// Little-endian binary container (see docs/file-format.md).
std::vector<std::uint8_t> encode_binary(const ModelRecord& record);
ModelRecord decode_binary(const std::vector<std::uint8_t>& bytes);

std::string encode_json(const ModelRecord& record);
ModelRecord decode_json(const std::string& text);

/// Writes atomically (temporary file + rename).
void save_model(const std::filesystem::path& path, const ModelRecord& record, FileFormat format);
/// Detects the format from the magic bytes.
ModelRecord load_model(const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace tdsmor
