#pragma once

#include <string>

namespace geoforge {

enum class Verdict { consistent, suspicious, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::consistent: return "consistent";
    case Verdict::suspicious: return "suspicious";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

/// Worst of two verdicts: suspicious > inconclusive > consistent.
inline Verdict worst(Verdict a, Verdict b) {
  auto rank = [](Verdict v) { return v == Verdict::suspicious ? 2 : v == Verdict::inconclusive ? 1 : 0; };
  return rank(a) >= rank(b) ? a : b;
}

}  // namespace geoforge
