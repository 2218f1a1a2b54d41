#pragma once

#include <string>

namespace sgnlg::eval {

// Porter's 1980 suffix-stripping algorithm, original rule set. Input is
// expected lowercase; non-alphabetic tokens pass through unchanged.
std::string porter_stem(const std::string& word);

}  // namespace sgnlg::eval
