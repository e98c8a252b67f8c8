// Raw IO trace records and their fixed-width binned aggregation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wlhmm {

enum class OpKind { Read, Write };

struct TraceRecord {
    std::int64_t timestamp_us = 0;
    OpKind op = OpKind::Read;
    std::int64_t size = 1;  // blocks

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Bin {
    std::int64_t reads = 0;   // read blocks
    std::int64_t writes = 0;  // write blocks

    friend bool operator==(const Bin&, const Bin&) = default;
};

/// Per-bin (read blocks, write blocks) counts over a uniform time grid.
struct BinnedTrace {
    std::int64_t bin_width_us = 0;
    std::vector<Bin> bins;

    std::size_t size() const { return bins.size(); }
    bool empty() const { return bins.empty(); }

    Eigen::VectorXd reads() const;
    Eigen::VectorXd writes() const;
    double bin_width_s() const { return static_cast<double>(bin_width_us) * 1e-6; }
};

class TraceError : public std::runtime_error {
public:
    enum class Kind { MalformedLine, InvalidOp, NonPositiveSize, EmptyTrace, InvalidBinWidth, InvalidKeepSet };

    TraceError(Kind kind, std::size_t line, const std::string& what)
        : std::runtime_error(what), kind_(kind), line_(line) {}

    Kind kind() const { return kind_; }
    /// 1-based line number for parse errors, 0 otherwise.
    std::size_t line() const { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

/// Reads `timestamp_us,op,size_blocks` lines. A non-numeric first line is
/// treated as a header. Output is stably sorted by timestamp.
std::vector<TraceRecord> parse_trace(std::istream& in);

/// Aggregates records into bins of `bin_width_us`. Time is measured from the
/// earliest record, so bin 0 is always populated.
BinnedTrace bin_trace(std::vector<TraceRecord> records, std::int64_t bin_width_us);

/// Keeps bins whose index modulo `period` is in `keep` (zero-based).
BinnedTrace thin_periodic(const BinnedTrace& binned, std::size_t period, const std::set<std::size_t>& keep);

// Binned CSV: header `bin_index,reads,writes`, LF line endings.
void write_binned_csv(std::ostream& out, const BinnedTrace& binned);
BinnedTrace read_binned_csv(std::istream& in, std::int64_t bin_width_us);

}  // namespace wlhmm
