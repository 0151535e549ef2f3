#pragma once

#include <stdexcept>
#include <string>

namespace cglearn {

// One code per contract failure; the CLI maps codes onto exit statuses.
enum class errc {
    invalid_params,
    dimension_mismatch,
    not_square,
    non_finite,
    empty_filter,
    non_positive_rate,
    unstable_rate,
    invalid_sigma,
    degenerate_covariance,
    infeasible,
    no_feasible_epsilon,
    all_candidates_degenerate,
    singular_input,
    zero_true_norm,
    zero_estimate_trace,
    empty_list,
    parse_error,
    schema_error,
    io_error,
    numeric_failure,
};

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

inline const char* errc_name(errc c) {
    switch (c) {
    case errc::invalid_params: return "InvalidParams";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::not_square: return "NotSquare";
    case errc::non_finite: return "NonFinite";
    case errc::empty_filter: return "EmptyFilter";
    case errc::non_positive_rate: return "NonPositiveRate";
    case errc::unstable_rate: return "UnstableRate";
    case errc::invalid_sigma: return "InvalidSigma";
    case errc::degenerate_covariance: return "DegenerateCovariance";
    case errc::infeasible: return "Infeasible";
    case errc::no_feasible_epsilon: return "NoFeasibleEpsilon";
    case errc::all_candidates_degenerate: return "AllCandidatesDegenerate";
    case errc::singular_input: return "SingularInput";
    case errc::zero_true_norm: return "ZeroTrueNorm";
    case errc::zero_estimate_trace: return "ZeroEstimateTrace";
    case errc::empty_list: return "EmptyList";
    case errc::parse_error: return "ParseError";
    case errc::schema_error: return "SchemaError";
    case errc::io_error: return "IoError";
    case errc::numeric_failure: return "NumericFailure";
    }
    return "Unknown";
}

[[noreturn]] inline void fail(errc code, const std::string& what) {
    throw Error(code, std::string(errc_name(code)) + ": " + what);
}

} // namespace cglearn
