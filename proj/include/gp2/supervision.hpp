#pragma once

#include <stdexcept>
#include <string>

namespace gp2 {

// How much of a sample's ground truth can be trusted metrically:
//   Absolute - true metric depth;
//   Uts      - depth correct up to an unknown positive scale;
//   Utss     - disparity correct up to unknown positive scale and shift.
enum class SupervisionClass { Absolute, Uts, Utss };

// Absolute ground truth is a special case of up-to-scale (scale = 1), so both
// contribute the scale-invariant term; up-to-shift-and-scale samples cannot.
inline bool uses_uts_term(SupervisionClass cls) { return cls != SupervisionClass::Utss; }

inline const char* to_string(SupervisionClass cls) {
  switch (cls) {
    case SupervisionClass::Absolute: return "ABSOLUTE";
    case SupervisionClass::Uts: return "UTS";
    case SupervisionClass::Utss: return "UTSS";
  }
  return "unknown";
}

inline SupervisionClass supervision_from_string(const std::string& s) {
  if (s == "ABSOLUTE") return SupervisionClass::Absolute;
  if (s == "UTS") return SupervisionClass::Uts;
  if (s == "UTSS") return SupervisionClass::Utss;
  throw std::invalid_argument("unknown supervision class: " + s);
}

}  // namespace gp2
