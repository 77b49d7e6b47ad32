#ifndef PARSGD_HARNESS_HPP
#define PARSGD_HARNESS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "parsgd/config.hpp"
#include "parsgd/simnet.hpp"
#include "parsgd/trace.hpp"

namespace parsgd::harness {

// exit codes shared by the library entry points and the CLI
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitAborted = 3; // starved-abort or stalled cell

struct Cell {
    RuleConfig rule;
    AttackConfig attack;
    std::optional<int> f_override;
    std::string trace_name; // filename under the output dir
};

// rules x attacks x f-sweep; the sweep applies to attacks with a Byzantine
// kind, attack entries of kind none run once
std::vector<Cell> expand_cells(const ExperimentConfig& config);

struct CellResult {
    Cell cell;
    RunStatus status = RunStatus::Completed;
    std::string trace_path;
    double final_test_loss = 0.0;
    double final_train_loss = 0.0;
};

// run every cell and write one trace file per cell; returns an exit code
int run_experiment(const ExperimentConfig& config, const std::string& output_dir,
                   std::ostream& log, std::vector<CellResult>* results = nullptr);

struct CellSummary {
    std::string rule;
    std::string attack;
    int declared_f = 0;
    std::string run_status;
    double final_test_loss = 0.0;
    double best_test_loss = 0.0;
    double final_top1 = 0.0;
    std::string verdict; // converged | diverged | stalled | aborted | no-baseline
};

// summary table + plot-data files for every trace in the directory
int write_report(const std::string& trace_dir, std::ostream& out,
                 std::vector<CellSummary>* summaries = nullptr);

struct OracleResult {
    std::string name;
    bool pass = false;
    std::string details;
};

// the statistical/analytic oracle suite behind `verify`
std::vector<OracleResult> run_oracles(const std::string& only);
int run_verify(const std::string& only, std::ostream& out);

struct BenchRow {
    int n = 0;
    int d = 0;
    double parsgd_ms = 0.0;
    double krum_ms = 0.0;
    double parsgd_serial_ms = 0.0; // reference implementation
    double krum_serial_ms = 0.0;
    std::uint64_t parsgd_scalar_ops = 0;
    std::uint64_t parsgd_pairwise = 0;
    std::uint64_t krum_pairwise = 0;
};

// wall-clock of the aggregation kernels on random inputs; best of `reps`
std::vector<BenchRow> bench_aggregators(const std::vector<int>& ns, int d, int reps,
                                        bool with_reference);
int run_bench(const std::vector<int>& ns, int d, int reps, bool with_reference,
              std::ostream& out);

// gradient-vs-central-finite-differences check used by verify and the tests;
// returns the worst relative error over `points` random (w, batch) points
double gradient_check_worst_error(const Problem& problem, int points, std::uint64_t seed);

} // namespace parsgd::harness

#endif
