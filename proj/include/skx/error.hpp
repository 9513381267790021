#pragma once

#include <stdexcept>
#include <string>

namespace skx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define SKX_DEFINE_ERROR(Name)                      \
    class Name : public Error {                     \
    public:                                         \
        explicit Name(const std::string& what_arg)  \
            : Error(#Name ": " + what_arg) {}       \
    }

SKX_DEFINE_ERROR(NotUnitary);
SKX_DEFINE_ERROR(DegenerateRotation);
SKX_DEFINE_ERROR(UnknownSymbol);
SKX_DEFINE_ERROR(CapacityExceeded);
SKX_DEFINE_ERROR(FormatError);
SKX_DEFINE_ERROR(LibraryMismatch);
SKX_DEFINE_ERROR(EmptyIndex);
SKX_DEFINE_ERROR(EmptyDatabase);
SKX_DEFINE_ERROR(ParseError);

#undef SKX_DEFINE_ERROR

}  // namespace skx
