#pragma once

#include "modalkin/centrode.hpp"
#include "modalkin/kinematics.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace modalkin {

namespace csv {

std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view row, char sep = ',');
bool parse(const std::string& field, double& out);
bool parse(const std::string& field, long& out);

/// %.17g formatting; parses back to the identical double.
std::string format(double value);

}  // namespace csv

// CSV writers: header row, comma separators, LF endings.
void write_pose_stream(std::ostream& out, const std::vector<PoseSample>& samples);
void write_shape(std::ostream& out, const Shape& shape);
void write_centrode(std::ostream& out, const CentrodeTrace& trace);
void write_resolved_rates_trace(std::ostream& out, const std::vector<ResolvedRatesStep>& trace);

/// Reads a `t,q,x,z,theta` pose stream.
std::vector<PoseSample> read_pose_stream(std::istream& in);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

/// Pretty-printed JSON text with a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace modalkin
