#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace svgtok {

enum class Errc {
  MalformedMarkup,
  UnsupportedElement,
  BadPathData,
  RejectedContent,
  DanglingReference,
  SingularTransform,
  DegenerateViewBox,
  UnstableSample,
  OutOfRange,
  UnsupportedTag,
  ArityViolation,
  UnbalancedStructure,
  UnknownToken,
  EmptyCorpus,
  UnknownComposite,
  DomainError,
  IdOutOfRange,
  EmptyDescription,
  BadFormat,
  Io,
};

inline std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedMarkup: return "MalformedMarkup";
    case Errc::UnsupportedElement: return "UnsupportedElement";
    case Errc::BadPathData: return "BadPathData";
    case Errc::RejectedContent: return "RejectedContent";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::SingularTransform: return "SingularTransform";
    case Errc::DegenerateViewBox: return "DegenerateViewBox";
    case Errc::UnstableSample: return "UnstableSample";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::UnsupportedTag: return "UnsupportedTag";
    case Errc::ArityViolation: return "ArityViolation";
    case Errc::UnbalancedStructure: return "UnbalancedStructure";
    case Errc::UnknownToken: return "UnknownToken";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::UnknownComposite: return "UnknownComposite";
    case Errc::DomainError: return "DomainError";
    case Errc::IdOutOfRange: return "IdOutOfRange";
    case Errc::EmptyDescription: return "EmptyDescription";
    case Errc::BadFormat: return "BadFormat";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library. `stage()` is empty unless the error
/// crossed a pipeline boundary that tagged it (see preprocess()).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail, std::string stage = {})
      : std::runtime_error(format(code, detail, stage)),
        code_(code),
        detail_(detail),
        stage_(std::move(stage)) {}

  Errc code() const noexcept { return code_; }
  std::string_view name() const noexcept { return errc_name(code_); }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const { return Error(code_, detail_, std::move(stage)); }

 private:
  static std::string format(Errc code, const std::string& detail, const std::string& stage) {
    std::string out;
    if (!stage.empty()) out += "[" + stage + "] ";
    out += errc_name(code);
    if (!detail.empty()) out += ": " + detail;
    return out;
  }

  Errc code_;
  std::string detail_;
  std::string stage_;
};

}  // namespace svgtok
