#pragma once

// Seeded synthetic daily OHLCV universe in the ingestion schema. Closes
// follow a geometric random walk whose monthly drift is an AR(1) process
// (the momentum gives predictors a learnable signal); opens lag the prior
// close, highs/lows pad the day's range, volumes are lognormal.
//
// Per asset a (stream (seed, "asset", a)):
//   drift_m  = momentum * drift_{m-1} + drift_sigma * N(0,1) + asset_drift_a
//   close_d  = close_{d-1} * exp(drift_m / days + daily_sigma * N(0,1))
//   volume_d = round(base_a * exp(0.3 * N(0,1)))

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tbp {

struct SyntheticSpec {
    std::size_t assets = 10;
    std::size_t months = 240;
    std::size_t days_per_month = 21;
    std::uint64_t seed = 0;
    int start_year = 1997;
    double momentum = 0.7;
    double drift_sigma = 0.012;
    double daily_sigma = 0.01;
};

std::vector<std::string> synthetic_asset_names(std::size_t count);

// Writes one `<ASSET>.csv` per asset into `dir` (created if missing).
// Returns the file paths in asset order.
std::vector<std::filesystem::path> write_synthetic_universe(const std::filesystem::path& dir,
                                                            const SyntheticSpec& spec);

// Same bars, in memory, as CSV text per asset (used by tests).
std::vector<std::string> synthetic_universe_csv(const SyntheticSpec& spec);

}  // namespace tbp
