#ifndef PARSGD_TRACE_HPP
#define PARSGD_TRACE_HPP

#include <map>
#include <string>
#include <vector>

#include "parsgd/simnet.hpp"

namespace parsgd {

/*
 * Trace file format: one `# {json}` metadata line, a CSV header, then one
 * row per epoch. Floats are printed with %.17g so a re-run with the same
 * seed produces byte-identical files.
 */
struct TraceMetadata {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string rule;
    std::string attack;
    int declared_f = 0;
    int n_workers = 0;
    int epochs = 0;
    double converged_factor = 1.05;
    std::string run_status; // completed | stalled | starved-abort
    std::string version = "0.1.0";
};

std::string run_status_name(RunStatus status);
std::string epoch_status_name(EpochStatus status);

// full file contents for one cell
std::string render_trace(const TraceMetadata& meta, const std::vector<EpochReport>& epochs);

// write-to-temp + rename so readers never observe a partial trace
void write_file_atomic(const std::string& path, const std::string& contents);

/*
 * Generic parsed trace: every column is kept verbatim (unknown columns are
 * never dropped), with typed accessors for the ones the reporter needs.
 */
struct TraceFile {
    TraceMetadata meta;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column_index(const std::string& name) const; // throws if missing
    double number_at(std::size_t row, const std::string& column) const;
    const std::string& text_at(std::size_t row, const std::string& column) const;

    static TraceFile parse(const std::string& contents);
    static TraceFile load(const std::string& path);
};

} // namespace parsgd

#endif
