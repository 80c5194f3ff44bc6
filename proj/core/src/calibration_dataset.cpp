#include "loopdyn/calibration_dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>

#include "loopdyn/error.hpp"

namespace loopdyn {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t pos = 0;
  for (;;) {
    const auto tab = line.find('\t', pos);
    cols.push_back(line.substr(pos, tab == std::string_view::npos ? tab : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return cols;
}

double parse_number(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse, where + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

}  // namespace

CalibrationDataset read_calibration_tsv(const std::filesystem::path& path,
                                        EmbeddingBackend* embedder) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open calibration dataset " + path.string());

  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<double> raws;
  std::vector<double> scores;
  CalibrationDataset out;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    const auto cols = split_tabs(line);
    if (columns == 0) {
      columns = cols.size();
      if (columns != 2 && columns != 3) {
        throw Error(ErrorKind::Parse, where + ": header must have 2 or 3 tab-separated columns");
      }
      out.sentence_pairs = columns == 3;
      if (out.sentence_pairs && embedder == nullptr) {
        throw Error(ErrorKind::InvalidConfig,
                    "sentence-pair calibration data needs an embedding backend");
      }
      continue;
    }
    if (cols.size() != columns) {
      throw Error(ErrorKind::Parse, where + ": expected " + std::to_string(columns) +
                                        " columns, found " + std::to_string(cols.size()));
    }
    if (columns == 2) {
      const double raw = parse_number(cols[0], where);
      if (raw < -1.0 || raw > 1.0) {
        throw Error(ErrorKind::Parse, where + ": raw cosine outside [-1, 1]");
      }
      raws.push_back(raw);
    } else {
      try {
        raws.push_back(raw_cosine(embed_text(*embedder, cols[0]), embed_text(*embedder, cols[1])));
      } catch (const Error& e) {
        throw Error(e.kind(), where + ": " + e.what());
      }
    }
    scores.push_back(parse_number(cols.back(), where));
  }
  if (columns == 0) throw Error(ErrorKind::Parse, path.string() + ": missing header row");
  if (scores.empty()) return out;

  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo;
  const double span = *hi - *lo;
  if (span <= 0.0) throw Error(ErrorKind::Parse, path.string() + ": human scores are all equal");
  out.pairs.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.pairs.push_back({raws[i], std::clamp((scores[i] - min) / span, 0.0, 1.0)});
  }
  return out;
}

}  // namespace loopdyn
