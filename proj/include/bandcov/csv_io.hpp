#pragma once

#include <iosfwd>
#include <string>

#include "bandcov/types.hpp"

namespace bandcov {

// Read an observations-by-variables matrix from comma-separated text.
// Every row must have the same number of cells; cells must parse fully as
// finite decimal numbers. Blank lines are skipped; a UTF-8 BOM on the first
// line and a trailing '\r' per line are tolerated. When header is true the
// first non-blank line is discarded. Throws data_error with the offending
// row/column on any violation, and also when the result has fewer than 4
// rows or fewer than 2 columns. `name` labels the source in messages.
DataMatrix read_csv_matrix(std::istream& in, bool header,
                           const std::string& name);

// Same, reading from a path ("-" means standard input).
DataMatrix read_csv_file(const std::string& path, bool header);

}  // namespace bandcov
