#include <charconv>
#include <cstdio>
#include <string>

#include "rbsde/errors.hpp"
#include "rbsde/ext_real.hpp"

namespace rbsde {

std::string to_string(Node n) {
  return "(level " + std::to_string(n.level) + ", index " + std::to_string(n.index) + ")";
}

Error::Error(const std::string& what, std::optional<Node> node)
    : std::runtime_error(node ? what + " at node " + to_string(*node) : what), node_(node) {}

std::string to_string(ExtReal x) {
  if (x.is_neg_inf()) return "-inf";
  if (x.is_pos_inf()) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x.value());
  return buf;
}

ExtReal parse_ext_real(const std::string& text) {
  if (text == "inf" || text == "+inf") return ExtReal::pos_inf();
  if (text == "-inf") return ExtReal::neg_inf();
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) throw std::invalid_argument("not an extended real: '" + text + "'");
  return ExtReal::from_double(v);
}

}  // namespace rbsde
