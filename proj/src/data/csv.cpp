#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "uqbot/data.hpp"
#include "uqbot/error.hpp"

namespace uqbot {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> expected_features) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MissingLabelColumn, "empty file");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  const auto header = split_fields(line);
  if (header.back() != "label") {
    throw Error(ErrorCode::MissingLabelColumn,
                "last header column is '" + std::string(header.back()) + "'");
  }
  const std::size_t f = header.size() - 1;
  if (expected_features && *expected_features != f) {
    throw Error(ErrorCode::FeatureCountMismatch, "expected " + std::to_string(*expected_features) +
                                                     ", found " + std::to_string(f));
  }
  std::vector<std::string> names(header.begin(), header.end() - 1);

  std::vector<double> feats;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != f + 1) {
      throw Error(ErrorCode::FeatureCountMismatch,
                  "row " + std::to_string(row) + ": expected " + std::to_string(f + 1) +
                      " columns, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < f; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw Error(ErrorCode::UnparseableValue,
                    "row " + std::to_string(row) + ", column " + std::to_string(j) + " ('" +
                        std::string(fields[j]) + "')");
      }
      feats.push_back(v);
    }
    double lv = 0.0;
    if (!parse_double(fields[f], lv) || lv != std::floor(lv)) {
      throw Error(ErrorCode::UnparseableValue,
                  "row " + std::to_string(row) + ", column label ('" + std::string(fields[f]) +
                      "')");
    }
    if (lv != 0.0 && lv != 1.0) {
      throw Error(ErrorCode::NonBinaryLabel,
                  "row " + std::to_string(row) + " has label " + std::string(fields[f]));
    }
    labels.push_back(static_cast<int>(lv));
    ++row;
  }
  return Dataset(path.stem().string(), std::move(names), std::move(feats), std::move(labels));
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& n : d.feature_names()) out << n << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (double v : d.row(i)) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << d.label(i) << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace uqbot
