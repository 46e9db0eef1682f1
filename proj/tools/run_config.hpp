#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "snep/cournot.hpp"
#include "snep/discretize.hpp"
#include "snep/vi.hpp"

namespace snep::cli {

enum class Mode { deterministic, discretize, oracle, ladder };

const char* to_string(Mode mode) noexcept;
Mode parse_mode(std::string_view name);

struct ModelBlock {
    std::vector<FirmParams> firms;
    double a = 1.0 / 1.1;
    double e = 1e-4;

    friend bool operator==(const ModelBlock&, const ModelBlock&) = default;
};

struct FactorsBlock {
    RandomFactor r = RandomFactor::constant(0.0);
    RandomFactor s = RandomFactor::constant(1.0);
    std::vector<RandomFactor> beta;  ///< empty: every beta_i is the constant 1
    RandomFactor alpha = RandomFactor::constant(0.0);

    friend bool operator==(const FactorsBlock&, const FactorsBlock&) = default;
};

struct RunBlock {
    Mode mode = Mode::discretize;
    unsigned threads = 1;
    std::string out = ".";
    std::uint64_t seed = 1;
    std::size_t n_samples = 100000;
    bool cells_csv = false;
    int ladder_levels = 3;
    int ladder_factor = 2;
    std::size_t cell_cap = kDefaultCellCap;
    double max_flagged_fraction = 0.0;

    friend bool operator==(const RunBlock&, const RunBlock&) = default;
};

struct RunConfig {
    ModelBlock model;
    FactorsBlock factors;
    DiscretizationSpec discretization;
    SolverConfig solver;
    RunBlock run;

    CournotInstance instance() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Schema or invariant violation, addressed by line and JSON pointer.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& pointer,
                const std::string& message);

    int line() const noexcept { return line_; }
    const std::string& pointer() const noexcept { return pointer_; }

private:
    int line_;
    std::string pointer_;
};

/// Parses and validates a configuration document. `source` names it in error messages.
RunConfig parse_run_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunConfig& config);

/// Maps JSON pointers to the 1-based line where their value starts.
class JsonLineIndex {
public:
    explicit JsonLineIndex(std::string_view text);

    /// Line of the pointer, or of its nearest recorded ancestor.
    int line_of(const std::string& pointer) const;

private:
    std::vector<std::pair<std::string, int>> entries_;
};

}  // namespace snep::cli
