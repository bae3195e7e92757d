#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "maddr/engine.hpp"

namespace maddr {

enum class OutputFormat { csv, text, json_lines };

OutputFormat format_from_string(const std::string& name);
const char* extension(OutputFormat format);

struct Cell {
    std::string text;
    bool numeric{false};
};

Cell num(double value, int precision = 9);
Cell num(std::int64_t value);
Cell num(int value);
Cell str(std::string value);
Cell flag(bool value);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

void write_table(const Table& table, OutputFormat format, std::ostream& out);

std::string join_nodes(const std::vector<NodeId>& nodes, char sep = '-');

Table paths_table(const RunMetrics& metrics);
Table sources_table(const RunMetrics& metrics);
Table summary_table(const RunMetrics& metrics);
Table faults_table(const RunMetrics& metrics);
Table choke_table(const RunMetrics& metrics);

}  // namespace maddr
