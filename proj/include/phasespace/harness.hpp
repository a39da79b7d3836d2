#pragma once

#include "phasespace/config.hpp"
#include "phasespace/lattice.hpp"

#include <json.hpp>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace phasespace {

// A pass/fail assertion evaluated at the end of a run.
struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    std::string comparison; // "<=", "<", ">=", "in", ...
    bool passed = false;
    std::string detail;
};

// Tabular result of an experiment. Label columns (strings) come first in the
// CSV, numeric columns after. Every statistical column `c` is paired with a
// `c_se` standard-error column.
struct ObservableRecord {
    std::vector<std::string> label_columns;
    std::vector<std::string> columns;
    std::vector<std::string> units; // one per numeric column
    std::vector<std::vector<std::string>> labels;
    std::vector<std::vector<double>> rows;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<Check> checks;

    bool all_passed() const;
    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

// Errors of a field against a reference over |x| < x_max/2 and the full window.
struct SliceError {
    double t = 0.0;
    double max_central = 0.0;
    double l2_central = 0.0;
    double max_full = 0.0;
    double l2_full = 0.0;
};

SliceError slice_error(std::span<const cplx> field, std::span<const cplx> reference, const Lattice& lattice,
                       double t = 0.0);

// One SliceError per stored field; `oracle(t)` supplies the reference.
std::vector<SliceError> compare_against_oracle(const std::vector<double>& times,
                                               const std::vector<Field>& fields, const Lattice& lattice,
                                               const std::function<Field(double)>& oracle);

// Runs a validated configuration. Throws ConfigError before any computation
// if the configuration is invalid.
ObservableRecord run_experiment(const RunConfig& config);

// Writes <out_dir>/<prefix>.csv and <prefix>.meta.json (plus any extra tables
// held in the summary under "profile"). Returns the written paths.
std::vector<std::string> write_outputs(const ObservableRecord& record, const RunConfig& config,
                                       double wall_time_seconds);

// Peak central intensity error must strictly decrease along fig1..fig4.
Check figure_series_check(const std::vector<std::pair<Experiment, ObservableRecord>>& records);

std::string version_string();

} // namespace phasespace
