#include "tbp/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "tbp/calendar.hpp"
#include "tbp/io.hpp"
#include "tbp/rng.hpp"

namespace tbp {

std::vector<std::string> synthetic_asset_names(std::size_t count) {
    std::vector<std::string> names;
    names.reserve(count);
    for (std::size_t a = 0; a < count; ++a) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "SYN%02u", static_cast<unsigned>(a));
        names.push_back(buf);
    }
    return names;
}

std::vector<std::string> synthetic_universe_csv(const SyntheticSpec& spec) {
    std::vector<std::string> files;
    files.reserve(spec.assets);

    for (std::size_t a = 0; a < spec.assets; ++a) {
        Rng rng(derive_stream(spec.seed, "asset", a));
        const double asset_drift = 0.002 + 0.0008 * static_cast<double>(a);
        const double base_volume = 1.0e6 * (1.0 + static_cast<double>(a));

        std::ostringstream out;
        out << "Date,Open,High,Low,Close,Adj Close,Volume\n";

        double close = 20.0 + 5.0 * static_cast<double>(a);
        double drift = 0.0;
        for (std::size_t m = 0; m < spec.months; ++m) {
            drift = spec.momentum * drift + spec.drift_sigma * rng.normal() + asset_drift;
            YearMonth month{spec.start_year + static_cast<int>(m / 12),
                            1 + static_cast<int>(m % 12)};
            for (std::size_t d = 0; d < spec.days_per_month; ++d) {
                const double open = close;
                const double step = drift / static_cast<double>(spec.days_per_month) +
                                    spec.daily_sigma * rng.normal();
                close = close * std::exp(step);
                const double pad_hi = 0.002 + 0.004 * std::abs(rng.normal());
                const double pad_lo = 0.002 + 0.004 * std::abs(rng.normal());
                const double high = std::max(open, close) * (1.0 + pad_hi);
                const double low = std::min(open, close) * (1.0 - pad_lo);
                const double volume = std::round(base_volume * std::exp(0.3 * rng.normal()));

                Date date{month.year, month.month, static_cast<int>(d) + 1};
                out << date.to_string() << ',' << format_double(open) << ','
                    << format_double(high) << ',' << format_double(low) << ','
                    << format_double(close) << ',' << format_double(close) << ','
                    << format_double(volume) << '\n';
            }
        }
        files.push_back(out.str());
    }
    return files;
}

std::vector<std::filesystem::path> write_synthetic_universe(const std::filesystem::path& dir,
                                                            const SyntheticSpec& spec) {
    std::filesystem::create_directories(dir);
    const std::vector<std::string> names = synthetic_asset_names(spec.assets);
    const std::vector<std::string> files = synthetic_universe_csv(spec);
    std::vector<std::filesystem::path> paths;
    paths.reserve(files.size());
    for (std::size_t a = 0; a < files.size(); ++a) {
        std::filesystem::path path = dir / (names[a] + ".csv");
        atomic_write_file(path, files[a]);
        paths.push_back(std::move(path));
    }
    return paths;
}

}  // namespace tbp
