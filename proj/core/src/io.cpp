#include "metricprop/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace mprop {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};

std::uint32_t read_u32_le(std::istream& in, const std::string& path, const char* field) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(path + ": truncated before " + field);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float f32_from_le(const unsigned char* b) {
  std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                    (static_cast<std::uint32_t>(b[2]) << 16) |
                    (static_cast<std::uint32_t>(b[3]) << 24);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

void f32_to_le(float f, unsigned char* b) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  b[0] = static_cast<unsigned char>(u & 0xff);
  b[1] = static_cast<unsigned char>((u >> 8) & 0xff);
  b[2] = static_cast<unsigned char>((u >> 16) & 0xff);
  b[3] = static_cast<unsigned char>((u >> 24) & 0xff);
}

std::ifstream open_input(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_output(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

// Parses a nonnegative base-10 integer field; rejects junk and overflow.
long long parse_int_field(const std::string& s, const std::string& path, std::size_t line) {
  if (s.empty()) throw FormatError(path + ":" + std::to_string(line) + ": empty integer field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno == ERANGE || end == s.c_str() || *end != '\0')
    throw FormatError(path + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

double parse_real_field(const std::string& s, const std::string& path, std::size_t line) {
  if (s.empty()) throw FormatError(path + ":" + std::to_string(line) + ": empty real field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw FormatError(path + ":" + std::to_string(line) + ": bad real '" + s + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

// Strips a trailing '\r' so CRLF files parse identically.
std::string chomp(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

EmbeddingMatrix read_embeddings(const std::string& path) {
  auto in = open_input(path, std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError(path + ": truncated before magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError(path + ": bad magic (expected EMB1)");
  const std::uint32_t n = read_u32_le(in, path, "row count");
  const std::uint32_t d = read_u32_le(in, path, "column count");
  if (n < 1 || d < 1)
    throw FormatError(path + ": header declares empty matrix " + std::to_string(n) + "x" +
                      std::to_string(d));
  const std::size_t count = static_cast<std::size_t>(n) * d;
  std::vector<unsigned char> raw(count * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw FormatError(path + ": truncated payload (expected " + std::to_string(count) +
                      " values)");
  char extra;
  if (in.read(&extra, 1))
    throw FormatError(path + ": trailing bytes after payload");
  std::vector<float> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = f32_from_le(raw.data() + i * 4);
  try {
    return EmbeddingMatrix::from_data(static_cast<Index>(n), static_cast<Index>(d),
                                      std::move(data));
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  auto out = open_output(path, std::ios::binary);
  out.write(kMagic, 4);
  write_u32_le(out, static_cast<std::uint32_t>(m.n()));
  write_u32_le(out, static_cast<std::uint32_t>(m.d()));
  const std::size_t count = static_cast<std::size_t>(m.n()) * static_cast<std::size_t>(m.d());
  std::vector<unsigned char> raw(count * 4);
  for (std::size_t i = 0; i < count; ++i) f32_to_le(m.data()[i], raw.data() + i * 4);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("short write to " + path);
}

LabeledSet read_labels(const std::string& path, int num_classes, Index num_points) {
  auto in = open_input(path, std::ios::in);
  std::vector<LabeledEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(std::move(line));
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected `index,class_id`, got " + std::to_string(fields.size()) +
                        " fields");
    const long long idx = parse_int_field(fields[0], path, lineno);
    const long long cls = parse_int_field(fields[1], path, lineno);
    if (num_points >= 0 && idx >= num_points)
      throw FormatError(path + ":" + std::to_string(lineno) + ": index " + std::to_string(idx) +
                        " >= point count " + std::to_string(num_points));
    entries.push_back({static_cast<Index>(idx), static_cast<int>(cls)});
  }
  return LabeledSet(std::move(entries), num_classes);
}

void write_labels(const LabeledSet& labels, const std::string& path) {
  auto out = open_output(path, std::ios::out);
  for (const auto& e : labels.entries())
    out << e.index << ',' << e.class_id << '\n';
  if (!out) throw IoError("short write to " + path);
}

PseudoLabelSet read_pseudo_labels(const std::string& path) {
  auto in = open_input(path, std::ios::in);
  std::vector<PseudoLabelRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(std::move(line));
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw FormatError(path + ":" + std::to_string(lineno) +
                        ": expected `index,pseudo_label,confidence`");
    const long long idx = parse_int_field(fields[0], path, lineno);
    const long long cls = parse_int_field(fields[1], path, lineno);
    const double conf = parse_real_field(fields[2], path, lineno);
    records.push_back({static_cast<Index>(idx), static_cast<int>(cls), conf});
  }
  return PseudoLabelSet(std::move(records));
}

void write_pseudo_labels(const PseudoLabelSet& set, const std::string& path) {
  auto out = open_output(path, std::ios::out);
  for (const auto& r : set.records())
    out << r.index << ',' << r.pseudo_label << ',' << format_double(r.confidence) << '\n';
  if (!out) throw IoError("short write to " + path);
}

std::string format_double(double v) {
  // shortest %.g form that round-trips; 17 digits always does, fewer often do
  char buf[40];
  for (int prec = 9; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

std::vector<Index> read_index_list(const std::string& path) {
  auto in = open_input(path, std::ios::in);
  std::vector<Index> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(std::move(line));
    if (line.empty()) continue;
    out.push_back(static_cast<Index>(parse_int_field(line, path, lineno)));
  }
  return out;
}

void write_index_list(const std::vector<Index>& indices, const std::string& path) {
  auto out = open_output(path, std::ios::out);
  for (const Index i : indices) out << i << '\n';
  if (!out) throw IoError("short write to " + path);
}

}  // namespace mprop
