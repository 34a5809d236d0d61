#include "modalkin/io.hpp"

#include "modalkin/calibration.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace modalkin {

namespace csv {

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view row, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = row.find(sep, begin);
    out.push_back(trim(row.substr(begin, pos == std::string_view::npos ? pos : pos - begin)));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

bool parse(const std::string& field, double& out) {
  if (field.empty()) return false;
  const char* first = field.data();
  const char* last = first + field.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse(const std::string& field, long& out) {
  if (field.empty()) return false;
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), last, out);
  return ec == std::errc() && ptr == last;
}

std::string format(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("csv::format: conversion failed");
  return std::string(buf, ptr);
}

}  // namespace csv

void write_pose_stream(std::ostream& out, const std::vector<PoseSample>& samples) {
  out << "t,q,x,z,theta\n";
  for (const auto& s : samples) {
    out << s.t << ',' << csv::format(s.q) << ',' << csv::format(s.pose.x) << ','
        << csv::format(s.pose.z) << ',' << csv::format(s.pose.theta) << '\n';
  }
}

void write_shape(std::ostream& out, const Shape& shape) {
  out << "s,x,z,theta\n";
  for (std::size_t k = 0; k < shape.poses.size(); ++k) {
    const auto& p = shape.poses[k];
    out << csv::format(shape.stations[k]) << ',' << csv::format(p.x) << ',' << csv::format(p.z)
        << ',' << csv::format(p.theta) << '\n';
  }
}

void write_centrode(std::ostream& out, const CentrodeTrace& trace) {
  out << "t,valid,cx,cz\n";
  for (const auto& c : trace) {
    out << c.t << ',' << (c.valid ? 1 : 0) << ',' << csv::format(c.x) << ',' << csv::format(c.z)
        << '\n';
  }
}

void write_resolved_rates_trace(std::ostream& out, const std::vector<ResolvedRatesStep>& trace) {
  out << "iter,q,x,z,err\n";
  for (const auto& s : trace) {
    out << s.iter << ',' << csv::format(s.q) << ',' << csv::format(s.x) << ','
        << csv::format(s.z) << ',' << csv::format(s.err) << '\n';
  }
}

std::vector<PoseSample> read_pose_stream(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw CsvError("empty pose stream", 0);
  ++line_no;
  if (csv::split(csv::trim(line)) != std::vector<std::string>{"t", "q", "x", "z", "theta"}) {
    throw CsvError("expected header t,q,x,z,theta", line_no);
  }
  std::vector<PoseSample> out;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string row = csv::trim(line);
    if (row.empty()) continue;
    const auto f = csv::split(row);
    if (f.size() != 5) throw CsvError("expected 5 fields, got " + std::to_string(f.size()), line_no);
    long t = 0;
    PoseSample s;
    if (!csv::parse(f[0], t) || !csv::parse(f[1], s.q) || !csv::parse(f[2], s.pose.x) ||
        !csv::parse(f[3], s.pose.z) || !csv::parse(f[4], s.pose.theta)) {
      throw CsvError("malformed number", line_no);
    }
    s.t = t;
    out.push_back(s);
  }
  return out;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace modalkin
