#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tbp {

// Base class for every error this library throws deliberately.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Input / parsing
// ---------------------------------------------------------------------------

class MissingColumn : public Error {
public:
    explicit MissingColumn(std::string column)
        : Error("missing column: " + column), column(std::move(column)) {}
    std::string column;
};

class UnparsableRow : public Error {
public:
    UnparsableRow(std::size_t line, const std::string& detail)
        : Error("unparsable row at line " + std::to_string(line) + ": " + detail),
          line(line) {}
    std::size_t line;
};

class NonPositivePrice : public Error {
public:
    explicit NonPositivePrice(std::size_t line)
        : Error("non-positive price at line " + std::to_string(line)), line(line) {}
    std::size_t line;
};

class DuplicateDate : public Error {
public:
    explicit DuplicateDate(std::string date)
        : Error("duplicate date: " + date), date(std::move(date)) {}
    std::string date;
};

class MisalignedCalendars : public Error {
public:
    explicit MisalignedCalendars(std::string asset)
        : Error("calendar misaligned for asset: " + asset), asset(std::move(asset)) {}
    std::string asset;
};

class TooFewMonths : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Numerics / model
// ---------------------------------------------------------------------------

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class StaleCache : public Error {
public:
    using Error::Error;
};

class EmptyTrainSet : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

class SchemaMismatch : public Error {
public:
    using Error::Error;
};

class CorruptFile : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Evaluation / portfolio / frontier
// ---------------------------------------------------------------------------

class EmptyRecords : public Error {
public:
    using Error::Error;
};

class MissingReturn : public Error {
public:
    explicit MissingReturn(std::string asset)
        : Error("missing realized return for asset: " + asset), asset(std::move(asset)) {}
    std::string asset;
};

class MisalignedPredictions : public Error {
public:
    using Error::Error;
};

class ReturnBelowMinusOne : public Error {
public:
    using Error::Error;
};

class WindowTooShort : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

class TargetOutOfRange : public Error {
public:
    TargetOutOfRange(const std::string& msg, double nearest_theta, double nearest_risk,
                     double nearest_return)
        : Error(msg), nearest_theta(nearest_theta), nearest_risk(nearest_risk),
          nearest_return(nearest_return) {}
    double nearest_theta;
    double nearest_risk;
    double nearest_return;
};

class NonBracketable : public Error {
public:
    NonBracketable(const std::string& msg, std::vector<double> candidate_thetas)
        : Error(msg), candidate_thetas(std::move(candidate_thetas)) {}
    std::vector<double> candidate_thetas;
};

}  // namespace tbp
