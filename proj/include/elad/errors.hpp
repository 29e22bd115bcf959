#pragma once

#include <stdexcept>
#include <string>

namespace elad {

enum class Errc {
    kind_mismatch,
    parse_failure,
    template_error,
    backend_unavailable,
    protocol_error,
    script_exhausted,
    verdict_parse,
    annotation_failed,
    config_error,
    state_corruption,
    checksum_mismatch,
    io_error,
    trainer_failed,
    usage_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

} // namespace elad
