#pragma once

#include <stdexcept>
#include <string>

namespace dald {

// Error taxonomy. The category drives the CLI exit code:
// config errors -> 2, data errors -> 3, degenerate-scorer errors -> 4.
enum class ErrorKind {
    EmptyInput,
    SupportMismatch,
    EmptyCorpus,
    InvalidBlend,
    AllMasked,
    NotTrainable,
    EmptyPromptSet,
    TooShort,
    ZeroVariance,
    DegenerateRank,
    Infeasible,
    SingleClass,
    ParseError,
    InsufficientCorpus,
    Transport,
    ProtocolError,
    VocabMismatch,
    ConfigError,
    IoError,
};

class DaldError : public std::runtime_error {
public:
    DaldError(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::ConfigError:
            case ErrorKind::InvalidBlend:
                return 2;
            case ErrorKind::ZeroVariance:
            case ErrorKind::DegenerateRank:
                return 4;
            default:
                return 3;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
    throw DaldError(kind, msg);
}

}  // namespace dald
