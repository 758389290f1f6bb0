#pragma once

#include <string>
#include <vector>

#include "aquactrl/network.hpp"

namespace aquactrl {

// Parses the JSON network document. Quantities carry unit-tag suffixes on
// their keys (head_ft, demand_base_GPM, ...) and are converted to internal
// base units here. Throws InputError with a JSON-pointer-style position on
// syntax errors, unknown unit tags, and missing referenced elements.
Network parse_network(const std::string& text);

Network load_network(const std::string& path);

// Inverse of parse_network up to key ordering; parse(serialize(net))
// equals net field by field.
std::string serialize_network(const Network& net);

struct Diagnostic {
  std::string element;  // offending element id
  std::string message;
};

// Structural and invariant checks. Empty result means the network is valid:
// all type invariants hold and every pump can reach a source. Diagnostics
// are returned, never thrown.
std::vector<Diagnostic> validate_network(const Network& net);

}  // namespace aquactrl
