#include "maddr/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "json.hpp"

namespace maddr {

OutputFormat format_from_string(const std::string& name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "text") return OutputFormat::text;
    if (name == "json-lines") return OutputFormat::json_lines;
    throw DomainError(fmt::format("unknown output format '{}'", name));
}

const char* extension(OutputFormat format) {
    switch (format) {
        case OutputFormat::csv: return ".csv";
        case OutputFormat::text: return ".txt";
        case OutputFormat::json_lines: return ".jsonl";
    }
    return "";
}

Cell num(double value, int precision) {
    if (!std::isfinite(value)) return {"nan", false};
    // Avoid "-0.000000000" in golden files.
    if (value == 0.0) value = 0.0;
    std::string s = fmt::format("{:.{}f}", value, precision);
    if (s.find_first_not_of("-0.") == std::string::npos) s = fmt::format("{:.{}f}", 0.0, precision);
    return {std::move(s), true};
}

Cell num(std::int64_t value) { return {fmt::format("{}", value), true}; }

Cell num(int value) { return {fmt::format("{}", value), true}; }

Cell str(std::string value) { return {std::move(value), false}; }

Cell flag(bool value) { return {value ? "1" : "0", true}; }

void Table::add(std::vector<Cell> row) {
    if (row.size() != columns.size()) {
        throw Error(fmt::format("row has {} cells for {} columns", row.size(), columns.size()));
    }
    rows.push_back(std::move(row));
}

namespace {

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

void write_table(const Table& table, OutputFormat format, std::ostream& out) {
    switch (format) {
        case OutputFormat::csv: {
            for (std::size_t i = 0; i < table.columns.size(); ++i) {
                out << (i ? "," : "") << csv_escape(table.columns[i]);
            }
            out << '\n';
            for (const auto& row : table.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    out << (i ? "," : "") << csv_escape(row[i].text);
                }
                out << '\n';
            }
            break;
        }
        case OutputFormat::text: {
            std::vector<std::size_t> width(table.columns.size());
            for (std::size_t i = 0; i < width.size(); ++i) width[i] = table.columns[i].size();
            for (const auto& row : table.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) {
                    width[i] = std::max(width[i], row[i].text.size());
                }
            }
            const auto line = [&](auto cell_text, auto right) {
                for (std::size_t i = 0; i < width.size(); ++i) {
                    const std::string s = cell_text(i);
                    const std::string pad(width[i] - s.size(), ' ');
                    out << (i ? "  " : "") << (right(i) ? pad + s : s + pad);
                }
                out << '\n';
            };
            line([&](std::size_t i) { return table.columns[i]; }, [](std::size_t) { return false; });
            for (const auto& row : table.rows) {
                line([&](std::size_t i) { return row[i].text; },
                     [&](std::size_t i) { return row[i].numeric; });
            }
            break;
        }
        case OutputFormat::json_lines: {
            for (const auto& row : table.rows) {
                // Numbers keep their fixed formatting by being spliced in verbatim.
                std::string line = "{";
                for (std::size_t i = 0; i < row.size(); ++i) {
                    if (i) line += ",";
                    line += nlohmann::json(table.columns[i]).dump() + ":";
                    line += row[i].numeric ? row[i].text : nlohmann::json(row[i].text).dump();
                }
                out << line << "}\n";
            }
            break;
        }
    }
}

std::string join_nodes(const std::vector<NodeId>& nodes, char sep) {
    std::string out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(nodes[i].value);
    }
    return out;
}

Table paths_table(const RunMetrics& m) {
    Table t;
    t.columns = {"scenario_hash", "seed",         "source",          "path",
                 "nodes",         "hops",         "tau",             "contention",
                 "quota",         "raw_quota",    "exceeds_bound",   "injected",
                 "delivered",     "arrivals",     "delivery_time",   "mean_queue_wait",
                 "analytic_delay", "analytic_energy"};
    for (const PathMetrics& p : m.paths) {
        t.add({str(m.scenario_hash), num(static_cast<std::int64_t>(m.seed)), num(p.source.value),
               num(p.path_index + 1), str(join_nodes(p.nodes)), num(p.hops), num(p.tau),
               num(p.contention), num(p.quota), num(p.raw_quota), flag(p.exceeds_bound),
               num(p.injected), num(p.delivered), num(p.arrivals), num(p.delivery_time),
               num(p.mean_queue_wait), num(p.analytic_delay), num(p.analytic_energy)});
    }
    return t;
}

Table sources_table(const RunMetrics& m) {
    Table t;
    t.columns = {"scenario_hash", "seed",       "source",          "packets",
                 "scheme",        "completion_time", "energy",     "injected",
                 "delivered",     "duplicates", "dropped_overflow", "dropped_fault",
                 "undeliverable"};
    for (const SourceMetrics& s : m.sources) {
        t.add({str(m.scenario_hash), num(static_cast<std::int64_t>(m.seed)), num(s.id.value),
               num(s.packets), num(static_cast<int>(s.scheme)), num(s.completion_time),
               num(s.energy), num(s.injected), num(s.delivered), num(s.duplicates),
               num(s.dropped_overflow), num(s.dropped_fault), num(s.undeliverable)});
    }
    return t;
}

Table summary_table(const RunMetrics& m) {
    Table t;
    t.columns = {"metric", "value"};
    const auto row = [&](const char* k, Cell v) { t.add({str(k), std::move(v)}); };
    row("scenario", str(m.scenario));
    row("scenario_hash", str(m.scenario_hash));
    row("seed", num(static_cast<std::int64_t>(m.seed)));
    row("data_start", num(m.data_start));
    row("net_completion", num(m.net_completion));
    row("duration", num(m.duration));
    row("total_energy", num(m.total_energy));
    row("transmit_energy", num(m.transmit_energy));
    row("receive_energy", num(m.receive_energy));
    row("control_energy", num(m.control_energy));
    row("sensing_energy", num(m.sensing_energy));
    row("idle_energy", num(m.idle_energy));
    row("injected", num(m.injected));
    row("delivered", num(m.delivered));
    row("duplicates", num(m.duplicates));
    row("dropped_overflow", num(m.dropped_overflow));
    row("dropped_fault", num(m.dropped_fault));
    row("undeliverable", num(m.undeliverable));
    row("control_dropped", num(m.control_dropped));
    row("retransmissions", num(m.retransmissions));
    row("table_refreshes", num(m.table_refreshes));
    row("events", num(m.events));
    return t;
}

Table faults_table(const RunMetrics& m) {
    Table t;
    t.columns = {"node", "fault_time", "detected_at", "detector", "mechanism", "replacement",
                 "abandoned"};
    for (const FaultRecord& f : m.faults) {
        t.add({num(f.node.value), f.fault_time ? num(*f.fault_time) : str(""), num(f.detected_at),
               num(f.detector.value), str(f.mechanism),
               f.replacement.valid() ? num(f.replacement.value) : str(""), flag(f.abandoned)});
    }
    return t;
}

Table choke_table(const RunMetrics& m) {
    Table t;
    t.columns = {"time", "source", "path", "contention", "failed"};
    for (const ChokeSample& c : m.choke_samples) {
        t.add({num(c.time), num(c.source.value), num(c.path_index + 1), num(c.count),
               flag(c.failed)});
    }
    return t;
}

}  // namespace maddr
