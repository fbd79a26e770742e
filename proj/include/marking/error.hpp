#pragma once

#include <stdexcept>
#include <string>

namespace marking {

enum class Errc {
    unbalanced_delimiter,
    nested_span,
    empty_span,
    invalid_grade,
    schema_error,
    malformed_row,
    empty_hypothesis,
    too_long,
    unknown_encoder,
    empty_corpus,
    non_finite_loss,
    length_mismatch,
    missing_prediction,
    empty_input,
    alignment_mismatch,
    invalid_label,
    io_error,
    checkpoint_mismatch,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::unbalanced_delimiter: return "UnbalancedDelimiter";
        case Errc::nested_span: return "NestedSpan";
        case Errc::empty_span: return "EmptySpan";
        case Errc::invalid_grade: return "InvalidGrade";
        case Errc::schema_error: return "SchemaError";
        case Errc::malformed_row: return "MalformedRow";
        case Errc::empty_hypothesis: return "EmptyHypothesis";
        case Errc::too_long: return "TooLong";
        case Errc::unknown_encoder: return "UnknownEncoder";
        case Errc::empty_corpus: return "EmptyCorpus";
        case Errc::non_finite_loss: return "NonFiniteLoss";
        case Errc::length_mismatch: return "LengthMismatch";
        case Errc::missing_prediction: return "MissingPrediction";
        case Errc::empty_input: return "EmptyInput";
        case Errc::alignment_mismatch: return "AlignmentMismatch";
        case Errc::invalid_label: return "InvalidLabel";
        case Errc::io_error: return "IoError";
        case Errc::checkpoint_mismatch: return "CheckpointMismatch";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace marking
