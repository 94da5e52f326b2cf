#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace midicls {

// Broad failure categories; the CLI maps each one to its own exit code.
enum class ErrorCategory : int {
    io = 3,
    parse = 4,
    data = 5,
    shape = 6,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}
    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

#define MIDICLS_DEFINE_ERROR(Name, Category)                                   \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what)                                 \
            : Error(ErrorCategory::Category, #Name ": " + what) {}             \
    };

MIDICLS_DEFINE_ERROR(IOError, io)
MIDICLS_DEFINE_ERROR(EmptyTrackError, parse)
MIDICLS_DEFINE_ERROR(UnknownTokenError, parse)
MIDICLS_DEFINE_ERROR(DanglingNoteError, parse)
MIDICLS_DEFINE_ERROR(UnterminatedError, parse)
MIDICLS_DEFINE_ERROR(FormatError, parse)
MIDICLS_DEFINE_ERROR(ShapeError, shape)
MIDICLS_DEFINE_ERROR(CacheError, shape)
MIDICLS_DEFINE_ERROR(EmptySequenceError, data)
MIDICLS_DEFINE_ERROR(DataError, data)
MIDICLS_DEFINE_ERROR(DegenerateDataError, data)
MIDICLS_DEFINE_ERROR(PlanError, data)
MIDICLS_DEFINE_ERROR(EmptyError, data)

#undef MIDICLS_DEFINE_ERROR

class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string& what)
        : Error(ErrorCategory::parse,
                "ParseError at byte " + std::to_string(offset) + ": " + what),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class PolyphonyError : public Error {
public:
    explicit PolyphonyError(std::uint64_t tick)
        : Error(ErrorCategory::parse,
                "PolyphonyError: overlapping notes at tick " + std::to_string(tick)),
          tick_(tick) {}
    std::uint64_t tick() const noexcept { return tick_; }

private:
    std::uint64_t tick_;
};

} // namespace midicls
