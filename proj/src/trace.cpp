#include "wlhmm/trace.hpp"

#include <algorithm>
#include <charconv>
#include <string_view>

namespace wlhmm {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        fields.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return fields;
}

bool parse_int(std::string_view s, std::int64_t& out)
{
    if (s.empty())
        return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::string at_line(std::size_t line) { return " at line " + std::to_string(line); }

}  // namespace

Eigen::VectorXd BinnedTrace::reads() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(bins.size()));
    for (std::size_t i = 0; i < bins.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = static_cast<double>(bins[i].reads);
    return v;
}

Eigen::VectorXd BinnedTrace::writes() const
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(bins.size()));
    for (std::size_t i = 0; i < bins.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = static_cast<double>(bins[i].writes);
    return v;
}

std::vector<TraceRecord> parse_trace(std::istream& in)
{
    using Kind = TraceError::Kind;
    std::vector<TraceRecord> records;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty())
            continue;
        auto fields = split_commas(line);
        std::int64_t ts = 0;
        if (line_no == 1 && !fields.empty() && !parse_int(fields[0], ts))
            continue;  // header
        if (fields.size() != 3)
            throw TraceError(Kind::MalformedLine, line_no, "expected 3 fields" + at_line(line_no));
        std::int64_t size = 0;
        if (!parse_int(fields[0], ts) || ts < 0 || !parse_int(fields[2], size))
            throw TraceError(Kind::MalformedLine, line_no, "non-numeric field" + at_line(line_no));
        OpKind op;
        if (fields[1] == "R" || fields[1] == "r")
            op = OpKind::Read;
        else if (fields[1] == "W" || fields[1] == "w")
            op = OpKind::Write;
        else
            throw TraceError(Kind::InvalidOp, line_no, "op must be R or W" + at_line(line_no));
        if (size <= 0)
            throw TraceError(Kind::NonPositiveSize, line_no, "size must be positive" + at_line(line_no));
        records.push_back({ts, op, size});
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.timestamp_us < b.timestamp_us; });
    return records;
}

BinnedTrace bin_trace(std::vector<TraceRecord> records, std::int64_t bin_width_us)
{
    if (bin_width_us <= 0)
        throw TraceError(TraceError::Kind::InvalidBinWidth, 0, "bin width must be positive");
    if (records.empty())
        throw TraceError(TraceError::Kind::EmptyTrace, 0, "trace has no records");

    auto [lo, hi] = std::minmax_element(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return a.timestamp_us < b.timestamp_us;
    });
    const std::int64_t origin = lo->timestamp_us;
    const std::int64_t span = hi->timestamp_us - origin;

    BinnedTrace out;
    out.bin_width_us = bin_width_us;
    out.bins.resize(static_cast<std::size_t>(span / bin_width_us + 1));
    for (const auto& rec : records) {
        auto& bin = out.bins[static_cast<std::size_t>((rec.timestamp_us - origin) / bin_width_us)];
        (rec.op == OpKind::Read ? bin.reads : bin.writes) += rec.size;
    }
    return out;
}

BinnedTrace thin_periodic(const BinnedTrace& binned, std::size_t period, const std::set<std::size_t>& keep)
{
    if (period == 0 || keep.empty() || *keep.rbegin() >= period)
        throw TraceError(TraceError::Kind::InvalidKeepSet, 0, "keep set must be nonempty with indices below the period");
    BinnedTrace out;
    out.bin_width_us = binned.bin_width_us;
    out.bins.reserve(binned.size() / period * keep.size() + keep.size());
    for (std::size_t i = 0; i < binned.size(); ++i)
        if (keep.contains(i % period))
            out.bins.push_back(binned.bins[i]);
    return out;
}

void write_binned_csv(std::ostream& out, const BinnedTrace& binned)
{
    out << "bin_index,reads,writes\n";
    for (std::size_t i = 0; i < binned.size(); ++i)
        out << i << ',' << binned.bins[i].reads << ',' << binned.bins[i].writes << '\n';
}

BinnedTrace read_binned_csv(std::istream& in, std::int64_t bin_width_us)
{
    using Kind = TraceError::Kind;
    if (bin_width_us <= 0)
        throw TraceError(Kind::InvalidBinWidth, 0, "bin width must be positive");
    BinnedTrace out;
    out.bin_width_us = bin_width_us;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty())
            continue;
        if (line_no == 1 && line == "bin_index,reads,writes")
            continue;
        auto fields = split_commas(line);
        std::int64_t idx = 0;
        Bin bin;
        if (fields.size() != 3 || !parse_int(fields[0], idx) || !parse_int(fields[1], bin.reads) ||
            !parse_int(fields[2], bin.writes) || bin.reads < 0 || bin.writes < 0)
            throw TraceError(Kind::MalformedLine, line_no, "malformed binned row" + at_line(line_no));
        if (idx != static_cast<std::int64_t>(out.bins.size()))
            throw TraceError(Kind::MalformedLine, line_no, "bin indices must be consecutive from 0" + at_line(line_no));
        out.bins.push_back(bin);
    }
    return out;
}

}  // namespace wlhmm
