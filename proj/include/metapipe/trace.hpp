#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metapipe/errors.hpp"
#include "metapipe/util.hpp"

namespace metapipe {

// One ordered series of related system inputs. Each entry of `inputs` maps a
// system-input name to the file holding that input for one test index.
struct TestGroup {
  std::string id;
  std::string class_tag;
  std::vector<std::map<std::string, std::string>> inputs;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return inputs.size(); }
};

struct FileRef {
  std::string path;
  std::string digest;  // fnv1a64 of the content

  friend bool operator==(const FileRef& a, const FileRef& b) {
    return a.path == b.path && a.digest == b.digest;
  }
};

enum class RecordStatus { Executed, Skipped };

struct VertexRecord {
  RecordStatus status = RecordStatus::Skipped;
  bool failed = false;          // executor ran and reported failure
  std::string diagnostic;       // exit info / skip reason
  std::map<std::string, FileRef> inputs;   // port -> file
  std::map<std::string, FileRef> outputs;  // port -> file

  bool produced_outputs() const {
    return status == RecordStatus::Executed && !failed;
  }
};

// All values recorded while running one test series: per (vertex, test index)
// the routed inputs, produced outputs and execution status.
class ExecutionTrace {
 public:
  ExecutionTrace() = default;
  ExecutionTrace(std::string group_id, std::size_t n_tests)
      : group_id_(std::move(group_id)), n_tests_(n_tests) {}

  const std::string& group_id() const { return group_id_; }
  std::size_t n_tests() const { return n_tests_; }

  void set_record(const std::string& vertex, std::size_t k, VertexRecord rec) {
    if (k >= n_tests_) throw UsageError("test index out of range: " + std::to_string(k));
    auto& rows = records_[vertex];
    rows.resize(n_tests_);
    rows[k] = std::move(rec);
  }

  bool has_record(const std::string& vertex, std::size_t k) const {
    auto it = records_.find(vertex);
    return it != records_.end() && k < it->second.size();
  }

  const VertexRecord& record(const std::string& vertex, std::size_t k) const {
    auto it = records_.find(vertex);
    if (it == records_.end() || k >= it->second.size()) {
      throw UsageError("no record for vertex '" + vertex + "' test " + std::to_string(k));
    }
    return it->second[k];
  }

  bool executed(const std::string& vertex, std::size_t k) const {
    return has_record(vertex, k) && record(vertex, k).status == RecordStatus::Executed;
  }

  std::optional<FileRef> output(const std::string& vertex, const std::string& port,
                                std::size_t k) const {
    if (!has_record(vertex, k)) return std::nullopt;
    const auto& rec = record(vertex, k);
    if (!rec.produced_outputs()) return std::nullopt;
    auto it = rec.outputs.find(port);
    if (it == rec.outputs.end()) return std::nullopt;
    return it->second;
  }

  // File content behind an output port, or nullopt when the value was never
  // produced (vertex skipped or failed). Relation verdicts use this to map
  // missing values onto the NotComputed outcome.
  std::optional<std::string> output_text(const std::string& vertex,
                                         const std::string& port,
                                         std::size_t k) const {
    auto ref = output(vertex, port, k);
    if (!ref) return std::nullopt;
    return slurp(ref->path);
  }

  std::optional<std::string> input_text(const std::string& vertex,
                                        const std::string& port,
                                        std::size_t k) const {
    if (!has_record(vertex, k)) return std::nullopt;
    const auto& rec = record(vertex, k);
    auto it = rec.inputs.find(port);
    if (it == rec.inputs.end()) return std::nullopt;
    return slurp(it->second.path);
  }

  // Output of whichever member of a branch group executed on test k.
  std::optional<std::string> group_output_text(const std::vector<std::string>& members,
                                               const std::string& port,
                                               std::size_t k) const {
    for (const auto& m : members) {
      if (executed(m, k) && record(m, k).produced_outputs()) {
        auto text = output_text(m, port, k);
        if (text) return text;
      }
    }
    return std::nullopt;
  }

  const std::map<std::string, std::vector<VertexRecord>>& records() const {
    return records_;
  }

 private:
  std::string group_id_;
  std::size_t n_tests_ = 0;
  std::map<std::string, std::vector<VertexRecord>> records_;
};

}  // namespace metapipe
