#ifndef TEMPANCHOR_ERROR_HPP
#define TEMPANCHOR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace tempanchor {

/// A caller-side contract was violated (bad argument, bad configuration,
/// inputs that cannot support the requested operation).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An input file is missing, unreadable, or malformed.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& message) {
    if (!ok) throw PreconditionError(message);
}

} // namespace detail
} // namespace tempanchor

#endif // TEMPANCHOR_ERROR_HPP
