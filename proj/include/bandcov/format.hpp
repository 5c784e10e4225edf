#pragma once

#include <string>
#include <vector>

namespace bandcov {

// Shortest-faithful decimal for a double: printf %.17g round-trips every
// finite value. Also used verbatim for CSV cells and JSON numbers.
std::string fmt17(double v);

// JSON number token: like fmt17, except non-finite values (which JSON has
// no literal for) become a quoted string ("inf", "-inf", "nan").
std::string json_number(double v);

std::string json_quote(const std::string& s);

std::string json_number_array(const std::vector<double>& v);
std::string json_int_array(const std::vector<long long>& v);

}  // namespace bandcov
