#pragma once

#include <filesystem>
#include <vector>

#include "loopdyn/backends.hpp"
#include "loopdyn/calibration.hpp"

namespace loopdyn {

struct CalibrationDataset {
  std::vector<CalibrationPair> pairs;
  bool sentence_pairs = false;
};

// UTF-8 TSV with a header row and either (raw_cosine, human_score) or
// (sentence_a, sentence_b, human_score) columns. Human scores are min-max
// normalized to [0, 1]. Sentence rows need `embedder`.
// Throws Io, Parse (with line numbers) or InvalidConfig.
CalibrationDataset read_calibration_tsv(const std::filesystem::path& path,
                                        EmbeddingBackend* embedder = nullptr);

}  // namespace loopdyn
