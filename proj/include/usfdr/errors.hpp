#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace usfdr {

/// Thrown when a per-feature variance estimate is exactly zero (the test and
/// screening statistics divide by it). Carries the offending feature index
/// when the caller knows it.
class DegenerateVariance : public std::runtime_error {
public:
    static constexpr std::size_t kNoFeature = static_cast<std::size_t>(-1);

    explicit DegenerateVariance(const std::string& what,
                                std::size_t feature = kNoFeature)
        : std::runtime_error(feature == kNoFeature
                                 ? what
                                 : what + " (feature " + std::to_string(feature) + ")"),
          feature_(feature) {}

    std::size_t feature() const noexcept { return feature_; }

private:
    std::size_t feature_;
};

} // namespace usfdr
