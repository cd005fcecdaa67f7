#ifndef SPANAGG_ERROR_HPP
#define SPANAGG_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace spanagg {

enum class ErrorKind {
  invalid_judgment,
  conflict,
  domain,
  undefined_spectrum,
  no_data,
  resource,
  escalate,
  not_found,
  version_conflict,
  parse,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_judgment: return "invalid-judgment";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::domain: return "domain";
    case ErrorKind::undefined_spectrum: return "undefined-spectrum";
    case ErrorKind::no_data: return "no-data";
    case ErrorKind::resource: return "resource";
    case ErrorKind::escalate: return "escalate-to-facilitator";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::version_conflict: return "version-conflict";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so that front-ends can
/// map it onto exit codes or HTTP statuses without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace spanagg

#endif  // SPANAGG_ERROR_HPP
