#ifndef LATE_DATASET_IO_H_
#define LATE_DATASET_IO_H_

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "late/estimator.h"

namespace late {

struct ColumnMap {
  std::string outcome = "y";
  std::string receipt = "d";
  std::string assignment = "t";
  std::vector<std::string> covariates;
  std::optional<std::string> block;
  std::optional<std::string> cluster;
  std::optional<std::string> weight;
};

// Comma-separated text with a header row. Every failure is a DataError
// naming the 1-based data row and the column; nothing partial is returned.
// Empty fields and NA are missing values.
Dataset parse_dataset(std::istream& in, const ColumnMap& columns);
Dataset load_dataset(const std::filesystem::path& path, const ColumnMap& columns);

}  // namespace late

#endif  // LATE_DATASET_IO_H_
