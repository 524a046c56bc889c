#include "artifacts.hpp"
#include "stochact/error.hpp"
#include "stochact/runner.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace stochact {

using nlohmann::json;

namespace detail {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::string CsvTable::str() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
  return out.str();
}

std::vector<double> CsvData::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] != name) continue;
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row.at(c));
    return out;
  }
  throw Error(ErrorCode::parse, "csv: no column '" + name + "'");
}

CsvData read_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  CsvData data;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::parse, "csv: empty file " + path);
  std::istringstream head(line);
  for (std::string cell; std::getline(head, cell, ',');) data.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    for (std::string cell; std::getline(cells, cell, ',');) row.push_back(std::stod(cell));
    if (row.size() != data.header.size()) {
      throw Error(ErrorCode::parse, "csv: ragged row in " + path);
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace detail

json RunReport::to_json() const {
  json doc;
  doc["version"] = kVersion;
  doc["command"] = command;
  doc["status"] = status;
  doc["seed"] = seed;
  doc["scalars"] = json::object();
  for (const auto& [k, v] : scalars) {
    doc["scalars"][k] = std::isfinite(v) ? json(v) : json(nullptr);
  }
  doc["notes"] = notes;
  doc["config"] = config_echo;
  return doc;
}

RunReport RunReport::from_json(const json& doc) {
  RunReport r;
  try {
    r.command = doc.at("command").get<std::string>();
    r.status = doc.at("status").get<std::string>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : doc.at("scalars").items()) {
      r.scalars[k] = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    }
    r.notes = doc.at("notes").get<std::map<std::string, std::string>>();
    r.config_echo = doc.at("config");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, std::string("report: malformed document: ") + e.what());
  }
  return r;
}

std::string RunReport::serialize() const { return to_json().dump(2) + "\n"; }

void write_file_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + tmp + "'");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::io, "write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename '" + tmp + "': " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_report(const RunReport& report, const std::string& directory) {
  detail::ensure_directory(directory);
  write_file_atomic(detail::join_path(directory, "report.json"), report.serialize());
  json timings = report.wall_times;
  write_file_atomic(detail::join_path(directory, "timings.json"), timings.dump(2) + "\n");
}

RunReport load_report(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return RunReport::from_json(json::parse(text));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("report: invalid JSON: ") + e.what());
  }
}

namespace {

constexpr std::array<char, 8> kMagic{'S', 'T', 'A', 'C', 'T', '0', '1', '\0'};

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((v >> (8 * b)) & 0xFFu) << (8 * (7 - b));
    return out;
  }
}

}  // namespace

void write_eta_binary(const std::string& path, const TerminalField& eta) {
  std::string bytes(kMagic.begin(), kMagic.end());
  bytes.reserve(8 + 8 * static_cast<std::size_t>(eta.values.size()));
  for (Eigen::Index leaf = 0; leaf < eta.values.cols(); ++leaf) {
    for (Eigen::Index i = 0; i < eta.values.rows(); ++i) {
      const std::uint64_t raw = to_little_endian(std::bit_cast<std::uint64_t>(eta.values(i, leaf)));
      char chunk[8];
      std::memcpy(chunk, &raw, 8);
      bytes.append(chunk, 8);
    }
  }
  write_file_atomic(path, bytes);
}

TerminalField read_eta_binary(const std::string& path, int rows, long leaves) {
  const std::string bytes = read_file(path);
  const std::size_t expected = 8 + 8 * static_cast<std::size_t>(rows) * static_cast<std::size_t>(leaves);
  if (bytes.size() != expected || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::parse, "eta binary: bad magic or size in '" + path + "'");
  }
  TerminalField eta{LevelField(rows, leaves)};
  std::size_t offset = 8;
  for (long leaf = 0; leaf < leaves; ++leaf) {
    for (int i = 0; i < rows; ++i) {
      std::uint64_t raw = 0;
      std::memcpy(&raw, bytes.data() + offset, 8);
      offset += 8;
      eta.values(i, leaf) = std::bit_cast<double>(to_little_endian(raw));
    }
  }
  return eta;
}

}  // namespace stochact
