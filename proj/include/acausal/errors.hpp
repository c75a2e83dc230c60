#pragma once

#include <stdexcept>
#include <string>

namespace acausal {

// Base type for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LabelCollision : Error { using Error::Error; };
struct BadPermutation : Error { using Error::Error; };
struct UnknownLabel : Error { using Error::Error; };
struct NotHermitian : Error { using Error::Error; };
struct NotPSD : Error { using Error::Error; };
struct BadDimension : Error { using Error::Error; };
struct BadKraus : Error { using Error::Error; };
struct BadBasis : Error { using Error::Error; };
struct NotUnitary : Error { using Error::Error; };
struct NotCPTP : Error { using Error::Error; };
struct BadParameter : Error { using Error::Error; };
struct InvalidProcessMatrix : Error { using Error::Error; };
struct DegenerateProcess : Error { using Error::Error; };
struct NoComplement : Error { using Error::Error; };
struct NullOutcome : Error { using Error::Error; };
struct BadCut : Error { using Error::Error; };
struct BadForm : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };

}  // namespace acausal
