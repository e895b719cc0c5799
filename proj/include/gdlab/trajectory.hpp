#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace gdlab {

enum class Outcome { Converged, Diverged, Undecided };

std::string to_string(Outcome o);

struct StabilityVerdict {
    Outcome outcome = Outcome::Undecided;
    double final_error = 0.0;
    std::optional<double> predicted_bound;
    std::optional<double> empirical_boundary;
};

/// Per-iteration record of a simulation. errors[k] is the error before
/// iteration k, so errors.size() == iterations_run + 1.
struct Trajectory {
    std::vector<double> errors;
    std::vector<std::vector<double>> weight_snapshots;  // empty unless a stride was requested
    std::size_t iterations_run = 0;
    StabilityVerdict verdict;
};

/// CSV: header "iter,error", error in scientific notation, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& t);

}  // namespace gdlab
