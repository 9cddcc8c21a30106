#include "tdsmor/serialization.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "tdsmor/errors.hpp"

namespace tdsmor {

namespace {

constexpr char kMagic[8] = {'T', 'D', 'S', 'M', 'O', 'R', '1', '\0'};
constexpr std::uint32_t kKindSystem = 0;
constexpr std::uint32_t kKindReduced = 1;

class Writer {
 public:
  void raw(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  void u32(std::uint32_t value) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<std::uint8_t>(value >> (8 * k)));
  }
  void u64(std::uint64_t value) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<std::uint8_t>(value >> (8 * k)));
  }
  void f64(double value) { u64(std::bit_cast<std::uint64_t>(value)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void matrix(const Eigen::MatrixXd& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  void raw(void* out, std::size_t size) {
    need(size);
    std::memcpy(out, bytes_.data() + at_, size);
    at_ += size;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes_[at_ + k]) << (8 * k);
    at_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes_[at_ + k]) << (8 * k);
    at_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t size = u32();
    std::string s(size, '\0');
    raw(s.data(), size);
    return s;
  }
  Eigen::MatrixXd matrix() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    need(static_cast<std::size_t>(rows) * cols * 8);
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = f64();
    return m;
  }
  bool done() const { return at_ == bytes_.size(); }

 private:
  void need(std::size_t size) const {
    if (at_ + size > bytes_.size()) throw IoError("model file truncated at byte " + std::to_string(at_));
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t at_ = 0;
};

void write_info(Writer& out, const ReductionInfo& info) {
  const auto write_map = [&](const std::map<std::string, double>& m) {
    out.u32(static_cast<std::uint32_t>(m.size()));
    for (const auto& [key, value] : m) {
      out.str(key);
      out.f64(value);
    }
  };
  write_map(info.parameters);
  write_map(info.diagnostics);
  out.u32(static_cast<std::uint32_t>(info.singular_values.size()));
  for (double s : info.singular_values) out.f64(s);
  out.u32(static_cast<std::uint32_t>(info.phase_seconds.size()));
  for (const auto& [phase, seconds] : info.phase_seconds) {
    out.str(phase);
    out.f64(seconds);
  }
  out.u32(static_cast<std::uint32_t>(info.warnings.size()));
  for (const auto& w : info.warnings) out.str(w);
}

ReductionInfo read_info(Reader& in) {
  ReductionInfo info;
  const auto read_map = [&](std::map<std::string, double>& m) {
    const std::uint32_t count = in.u32();
    for (std::uint32_t k = 0; k < count; ++k) {
      std::string key = in.str();
      m[key] = in.f64();
    }
  };
  read_map(info.parameters);
  read_map(info.diagnostics);
  const std::uint32_t sv = in.u32();
  for (std::uint32_t k = 0; k < sv; ++k) info.singular_values.push_back(in.f64());
  const std::uint32_t phases = in.u32();
  for (std::uint32_t k = 0; k < phases; ++k) {
    std::string phase = in.str();
    info.phase_seconds.emplace_back(std::move(phase), in.f64());
  }
  const std::uint32_t warnings = in.u32();
  for (std::uint32_t k = 0; k < warnings; ++k) info.warnings.push_back(in.str());
  return info;
}

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd json_matrix(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw IoError("matrix row count mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = data.at(i);
    if (static_cast<Eigen::Index>(row.size()) != cols) throw IoError("matrix column count mismatch");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = row.at(k).get<double>();
  }
  return m;
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

ModelRecord make_record(std::string name, DelaySystem system, InitialData init) {
  ModelRecord record;
  record.name = std::move(name);
  record.system = std::move(system);
  record.init = std::move(init);
  return record;
}

ModelRecord make_record(const ReducedSystem& reduced) {
  ModelRecord record;
  record.name = method_name(reduced.method);
  record.system = reduced.system;
  record.init = reduced.init;
  record.reduced = true;
  record.method = reduced.method;
  record.v = reduced.v;
  record.w = reduced.w;
  record.info = reduced.info;
  return record;
}

ReducedSystem to_reduced(const ModelRecord& record) {
  if (!record.reduced) throw ArgumentError("model '" + record.name + "' is not a reduced model");
  ReducedSystem reduced;
  reduced.system = record.system;
  reduced.init = record.init;
  reduced.v = record.v;
  reduced.w = record.w;
  reduced.method = record.method;
  reduced.info = record.info;
  return reduced;
}

FileFormat parse_format(const std::string& name) {
  if (name == "binary" || name == "bin") return FileFormat::binary;
  if (name == "json") return FileFormat::json;
  throw ArgumentError("unknown model format '" + name + "' (expected binary or json)");
}

std::vector<std::uint8_t> encode_binary(const ModelRecord& record) {
  Writer out;
  const DelaySystem& sys = record.system;
  out.raw(kMagic, sizeof kMagic);
  out.u32(record.reduced ? kKindReduced : kKindSystem);
  out.str(record.name);
  out.u32(static_cast<std::uint32_t>(sys.states()));
  out.u32(static_cast<std::uint32_t>(sys.inputs()));
  out.u32(static_cast<std::uint32_t>(sys.outputs()));
  out.u32(static_cast<std::uint32_t>(sys.delayed().size()));
  for (const auto& term : sys.delayed()) out.u32(static_cast<std::uint32_t>(term.delay));
  out.matrix(sys.a0());
  for (const auto& term : sys.delayed()) out.matrix(term.matrix);
  out.matrix(sys.b());
  out.matrix(sys.c());
  out.u32(static_cast<std::uint32_t>(record.init.max_lag() + 1));
  for (int j = 0; j <= record.init.max_lag(); ++j) {
    out.matrix(record.init.at(-j));
    out.matrix(record.init.basis(-j));
  }
  if (record.reduced) {
    out.u32(static_cast<std::uint32_t>(record.method));
    out.matrix(record.v);
    out.matrix(record.w);
    write_info(out, record.info);
  }
  return out.take();
}

ModelRecord decode_binary(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  char magic[8];
  in.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("not a tdsmor binary model file");
  const std::uint32_t kind = in.u32();
  if (kind != kKindSystem && kind != kKindReduced) throw IoError("unknown model kind");
  ModelRecord record;
  record.name = in.str();
  const std::uint32_t n = in.u32();
  const std::uint32_t m = in.u32();
  const std::uint32_t p = in.u32();
  const std::uint32_t terms = in.u32();
  std::vector<int> delays;
  for (std::uint32_t l = 0; l < terms; ++l) delays.push_back(static_cast<int>(in.u32()));
  Eigen::MatrixXd a0 = in.matrix();
  std::vector<DelayTerm> delayed;
  for (int d : delays) delayed.push_back({in.matrix(), d});
  Eigen::MatrixXd b = in.matrix();
  Eigen::MatrixXd c = in.matrix();
  if (a0.rows() != n || b.cols() != m || c.rows() != p) throw IoError("header dimensions disagree");
  try {
    record.system = DelaySystem(std::move(a0), std::move(delayed), std::move(b), std::move(c));
    const std::uint32_t lags = in.u32();
    std::vector<Eigen::VectorXd> history;
    std::vector<Eigen::MatrixXd> bases;
    for (std::uint32_t j = 0; j < lags; ++j) {
      history.push_back(in.matrix());
      bases.push_back(in.matrix());
    }
    record.init = InitialData(std::move(history), std::move(bases));
  } catch (const ArgumentError& e) {
    throw IoError(std::string("invalid model file: ") + e.what());
  }
  if (kind == kKindReduced) {
    record.reduced = true;
    const std::uint32_t method = in.u32();
    if (method > static_cast<std::uint32_t>(Method::lifted_walsh)) throw IoError("unknown method tag");
    record.method = static_cast<Method>(method);
    record.v = in.matrix();
    record.w = in.matrix();
    record.info = read_info(in);
  }
  if (!in.done()) throw IoError("trailing bytes after model record");
  return record;
}

std::string encode_json(const ModelRecord& record) {
  using nlohmann::json;
  const DelaySystem& sys = record.system;
  json j;
  j["format"] = "tdsmor-text";
  j["version"] = 1;
  j["kind"] = record.reduced ? "reduced" : "system";
  j["name"] = record.name;
  j["n"] = sys.states();
  j["m"] = sys.inputs();
  j["p"] = sys.outputs();
  json delays = json::array();
  json delayed = json::array();
  for (const auto& term : sys.delayed()) {
    delays.push_back(term.delay);
    delayed.push_back(matrix_json(term.matrix));
  }
  j["delays"] = delays;
  j["A0"] = matrix_json(sys.a0());
  j["delayed"] = delayed;
  j["B"] = matrix_json(sys.b());
  j["C"] = matrix_json(sys.c());
  json history = json::array();
  for (int lag = 0; lag <= record.init.max_lag(); ++lag) {
    history.push_back({{"j", -lag},
                       {"value", vector_json(record.init.at(-lag))},
                       {"basis", matrix_json(record.init.basis(-lag))}});
  }
  j["initial"] = history;
  if (record.reduced) {
    j["method"] = method_name(record.method);
    j["V"] = matrix_json(record.v);
    j["W"] = matrix_json(record.w);
    json info;
    info["parameters"] = record.info.parameters;
    info["diagnostics"] = record.info.diagnostics;
    info["singular_values"] = record.info.singular_values;
    json phases = json::array();
    for (const auto& [phase, seconds] : record.info.phase_seconds) {
      phases.push_back({{"phase", phase}, {"seconds", seconds}});
    }
    info["phase_seconds"] = phases;
    info["warnings"] = record.info.warnings;
    j["info"] = info;
  }
  return j.dump(1) + "\n";
}

ModelRecord decode_json(const std::string& text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "tdsmor-text") throw IoError("not a tdsmor text model");
    ModelRecord record;
    record.name = j.value("name", std::string{});
    std::vector<DelayTerm> delayed;
    const auto& delays = j.at("delays");
    const auto& mats = j.at("delayed");
    if (delays.size() != mats.size()) throw IoError("delay list and matrices disagree");
    for (std::size_t l = 0; l < delays.size(); ++l) {
      delayed.push_back({json_matrix(mats.at(l)), delays.at(l).get<int>()});
    }
    record.system = DelaySystem(json_matrix(j.at("A0")), std::move(delayed), json_matrix(j.at("B")),
                                json_matrix(j.at("C")));
    std::vector<Eigen::VectorXd> history;
    std::vector<Eigen::MatrixXd> bases;
    for (const auto& entry : j.at("initial")) {
      history.push_back(json_vector(entry.at("value")));
      bases.push_back(json_matrix(entry.at("basis")));
    }
    record.init = InitialData(std::move(history), std::move(bases));
    if (j.at("kind") == "reduced") {
      record.reduced = true;
      record.method = parse_method(j.at("method").get<std::string>());
      record.v = json_matrix(j.at("V"));
      record.w = json_matrix(j.at("W"));
      const auto& info = j.at("info");
      record.info.parameters = info.at("parameters").get<std::map<std::string, double>>();
      record.info.diagnostics = info.at("diagnostics").get<std::map<std::string, double>>();
      record.info.singular_values = info.at("singular_values").get<std::vector<double>>();
      for (const auto& p : info.at("phase_seconds")) {
        record.info.phase_seconds.emplace_back(p.at("phase").get<std::string>(),
                                               p.at("seconds").get<double>());
      }
      record.info.warnings = info.at("warnings").get<std::vector<std::string>>();
    }
    return record;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed text model: ") + e.what());
  } catch (const ArgumentError& e) {
    throw IoError(std::string("invalid text model: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return buffer.str();
}

void save_model(const std::filesystem::path& path, const ModelRecord& record, FileFormat format) {
  if (format == FileFormat::json) {
    write_file_atomic(path, encode_json(record));
    return;
  }
  const std::vector<std::uint8_t> bytes = encode_binary(record);
  write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

ModelRecord load_model(const std::filesystem::path& path) {
  const std::string contents = read_file(path);
  if (contents.size() >= sizeof kMagic && std::memcmp(contents.data(), kMagic, sizeof kMagic) == 0) {
    return decode_binary(std::vector<std::uint8_t>(contents.begin(), contents.end()));
  }
  return decode_json(contents);
}

}  // namespace tdsmor
