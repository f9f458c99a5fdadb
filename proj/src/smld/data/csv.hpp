#pragma once

#include <string>
#include <vector>

#include "smld/data/dataset.hpp"

namespace smld::data {

// Long-format CSV: header `subject,label,t,ch_0..ch_{C-1}`, UTF-8, comma
// separated, '.' decimal point, rows sorted by (subject, t).
struct CsvSchema {
  int expected_channels = -1;  // -1 infers from the header
  int declared_classes = -1;   // -1 accepts any non-negative label
};

void write_csv(const std::string& path, const std::vector<LabeledStream>& streams);

// Errors name the offending line: malformed rows, decreasing t within a
// subject, interleaved subject blocks, out-of-range labels.
std::vector<LabeledStream> load_csv_dataset(const std::string& path, const CsvSchema& schema = {});

}  // namespace smld::data
