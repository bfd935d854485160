#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "delayvax/errors.hpp"
#include "delayvax/reward.hpp"

namespace delayvax {

// Shortest round-trip decimal form; locale-free and platform-stable.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_failure, "cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(Errc::io_failure, "error while reading " + path);
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) fail(Errc::io_failure, "cannot create directory " + p.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_failure, "cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) fail(Errc::io_failure, "error while writing " + path);
}

// Plan CSV: optional `# note` lines, a header, then one row per pick in
// selection order. Gains are written in shortest round-trip form.
inline std::string format_plan(const VaccinationPlan& plan) {
  std::string out;
  for (const auto& note : plan.notes) out += "# " + note + "\n";
  out += "rank,node_id,marginal_gain\n";
  for (std::size_t i = 0; i < plan.nodes.size(); ++i)
    out += std::to_string(i + 1) + "," + std::to_string(plan.nodes[i]) + "," +
           format_double(plan.gains[i]) + "\n";
  return out;
}

inline VaccinationPlan parse_plan(std::string_view text) {
  VaccinationPlan plan;
  std::size_t pos = 0;
  bool saw_header = false;
  long expected_rank = 1;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::size_t start = line.find_first_not_of("# ");
      plan.notes.emplace_back(start == std::string_view::npos ? "" : line.substr(start));
      continue;
    }
    if (!saw_header) {
      if (line != "rank,node_id,marginal_gain")
        fail(Errc::io_failure, "unexpected plan header: " + std::string(line));
      saw_header = true;
      continue;
    }
    std::size_t c1 = line.find(','), c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos)
      fail(Errc::io_failure, "malformed plan row: " + std::string(line));
    auto field = [&](std::size_t a, std::size_t b) { return line.substr(a, b - a); };
    long rank = 0;
    int node = 0;
    double gain = 0.0;
    auto fv1 = field(0, c1);
    auto fv2 = field(c1 + 1, c2);
    auto fv3 = line.substr(c2 + 1);
    auto r1 = std::from_chars(fv1.data(), fv1.data() + fv1.size(), rank);
    auto r2 = std::from_chars(fv2.data(), fv2.data() + fv2.size(), node);
    auto r3 = std::from_chars(fv3.data(), fv3.data() + fv3.size(), gain);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r3.ec != std::errc{} ||
        r1.ptr != fv1.data() + fv1.size() || r2.ptr != fv2.data() + fv2.size() ||
        r3.ptr != fv3.data() + fv3.size() || rank != expected_rank)
      fail(Errc::io_failure, "malformed plan row: " + std::string(line));
    ++expected_rank;
    plan.nodes.push_back(node);
    plan.gains.push_back(gain);
  }
  if (!saw_header) fail(Errc::io_failure, "plan file has no header row");
  return plan;
}

}  // namespace delayvax
