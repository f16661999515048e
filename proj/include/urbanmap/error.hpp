#pragma once

#include <stdexcept>
#include <string>

namespace urbanmap {

enum class ErrorCode {
    Io = 1,
    Format,
    Unsupported,
    Argument,
    Shape,
    Contract,
    Assembly,
    Alignment,
    Crs,
    Numeric,
    Pairing,
    EmptyDataset,
    Placement,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so the
// C layer can map it onto a stable status value.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace urbanmap
