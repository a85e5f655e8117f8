#include "permtest/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace permtest {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

CsvTable CsvTable::parse(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = split_line(body);
    if (t.header_.empty()) {
      t.header_ = std::move(fields);
      continue;
    }
    if (fields.size() != t.header_.size())
      throw std::invalid_argument("csv line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(t.header_.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    t.cells_.push_back(std::move(fields));
  }
  if (t.header_.empty()) throw std::invalid_argument("csv: missing header row");
  return t;
}

CsvTable CsvTable::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return parse(in);
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header_)
    if (h == name) return true;
  return false;
}

std::size_t CsvTable::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i)
    if (header_[i] == name) return i;
  throw std::invalid_argument("csv: no column named '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numeric(std::size_t col) const {
  if (col >= header_.size()) throw std::invalid_argument("csv: column out of range");
  std::vector<double> out;
  out.reserve(cells_.size());
  for (std::size_t r = 0; r < cells_.size(); ++r) {
    const auto& s = cells_[r][col];
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
      throw std::invalid_argument("csv: non-numeric value '" + s + "' in column " + header_[col]);
    out.push_back(v);
  }
  return out;
}

std::vector<int> CsvTable::categories(std::size_t col) const {
  if (col >= header_.size()) throw std::invalid_argument("csv: column out of range");
  std::vector<int> out;
  out.reserve(cells_.size());
  for (const auto& row : cells_) {
    const auto& s = row[col];
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < 1)
      throw std::invalid_argument("csv: '" + s + "' in column " + header_[col] +
                                  " is not a positive integer category");
    out.push_back(v);
  }
  return out;
}

nlohmann::json outcome_json(std::string_view test, const TestOutcome& o) {
  nlohmann::json j;
  j["test"] = std::string(test);
  j["statistic"] = o.statistic;
  j["critical_value"] = o.critical_value;
  j["p_value"] = o.p_value;
  j["reject"] = o.reject;
  j["alpha"] = o.alpha;
  if (o.plan.mode == PlanMode::Exact)
    j["B"] = nullptr;
  else
    j["B"] = o.plan.replicates;
  j["seed"] = o.plan.seed;
  j["replicates"] = o.replicate_count;
  j["mode"] = o.plan.mode == PlanMode::Exact ? "exact" : "monte-carlo";
  return j;
}

void write_csv_preamble(std::ostream& out, std::string_view experiment) {
  out << "# permtest-csv v1 experiment=" << experiment << '\n';
}

}  // namespace permtest
