#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace maddr {

/// Serial number of a sensor node. Unique within a topology; a redundant node
/// that replaces a failed one takes over the failed node's serial.
struct NodeId {
    std::int32_t value{-1};

    constexpr NodeId() = default;
    constexpr explicit NodeId(std::int32_t v) : value(v) {}

    constexpr bool valid() const { return value >= 0; }
    constexpr auto operator<=>(const NodeId&) const = default;
};

inline std::string to_string(NodeId id) { return std::to_string(id.value); }

// Error hierarchy. Every failure the library reports derives from Error so the
// CLI can map categories onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

class ConnectivityError : public ScenarioError {
public:
    ConnectivityError(NodeId source, const std::string& what)
        : ScenarioError(what), source_(source) {}
    NodeId source() const { return source_; }

private:
    NodeId source_;
};

class InvalidPathError : public ScenarioError {
public:
    InvalidPathError(std::size_t hop_index, const std::string& what)
        : ScenarioError(what), hop_index_(hop_index) {}
    std::size_t hop_index() const { return hop_index_; }

private:
    std::size_t hop_index_;
};

class DuplicateNodeError : public ScenarioError {
public:
    DuplicateNodeError(NodeId node, const std::string& what)
        : ScenarioError(what), node_(node) {}
    NodeId node() const { return node_; }

private:
    NodeId node_;
};

class RangeExceededError : public DomainError {
public:
    using DomainError::DomainError;
};

class DegenerateAllocationError : public Error {
public:
    using Error::Error;
};

class UnreachableError : public Error {
public:
    using Error::Error;
};

class ClockError : public DomainError {
public:
    using DomainError::DomainError;
};

class ProbeFailedError : public Error {
public:
    ProbeFailedError(NodeId node, const std::string& what) : Error(what), node_(node) {}
    NodeId node() const { return node_; }

private:
    NodeId node_;
};

class RoutingError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

class LivelockError : public SimulationError {
public:
    using SimulationError::SimulationError;
};

}  // namespace maddr

template <>
struct std::hash<maddr::NodeId> {
    std::size_t operator()(const maddr::NodeId& id) const noexcept {
        return std::hash<std::int32_t>{}(id.value);
    }
};
