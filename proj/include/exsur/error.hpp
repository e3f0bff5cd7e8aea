#ifndef EXSUR_ERROR_HPP
#define EXSUR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace exsur {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    /// Short machine-readable tag, e.g. "SingularSystem".
    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define EXSUR_DEFINE_ERROR(Name)                                           \
    class Name : public Error {                                            \
    public:                                                                \
        explicit Name(const std::string& what) : Error(#Name, what) {}     \
    }

EXSUR_DEFINE_ERROR(InvalidArgument);
EXSUR_DEFINE_ERROR(OrderMismatch);
EXSUR_DEFINE_ERROR(SingularSystem);
EXSUR_DEFINE_ERROR(DuplicatePoint);
EXSUR_DEFINE_ERROR(DegenerateVariance);
EXSUR_DEFINE_ERROR(ExhaustedCandidates);
EXSUR_DEFINE_ERROR(NonFiniteValue);
EXSUR_DEFINE_ERROR(FactorizationFailure);
EXSUR_DEFINE_ERROR(ConfigError);
EXSUR_DEFINE_ERROR(IoError);

#undef EXSUR_DEFINE_ERROR

}  // namespace exsur

#endif  // EXSUR_ERROR_HPP
