#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "perco/estimators.hpp"

namespace perco {

std::uint64_t fnv1a64(std::string_view data);
std::string hash_hex(std::uint64_t h);

// Long-format CSV: one row per (trial, observable), schema
// {trial_id, seed, name, value, aux}; the first line carries the resolved
// config hash so artifacts from different configs are distinguishable.
void write_observables_csv(const std::string& path, const std::vector<TrialObservable>& rows,
                           const std::string& config_hash);

// Shape plot for d = 2: estimated hull, per-direction boundary points with
// error bars along the ray, and the l1 unit diamond as the lower-bound
// reference.
void write_shape_svg(const std::string& path, const ShapeEstimate& shape, const std::string& config_hash = "");

std::string format_double(double v);

}  // namespace perco
