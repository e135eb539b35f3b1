#pragma once

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include "metapipe/errors.hpp"
#include "metapipe/graph.hpp"
#include "metapipe/util.hpp"

namespace metapipe {

struct ExecFailure : std::runtime_error {
  explicit ExecFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct ExecContext {
  std::string vertex;
  std::size_t test_index = 0;
  std::string group_id;
  std::filesystem::path series_dir;  // per-series scratch/input area
  std::map<std::string, std::string> input_paths;   // port -> file
  std::map<std::string, std::string> output_paths;  // port -> file to write
  const nlohmann::json* config = nullptr;
  const nlohmann::json* fault = nullptr;

  const std::string& input(const std::string& port) const {
    auto it = input_paths.find(port);
    if (it == input_paths.end()) throw ExecFailure("missing input port: " + port);
    return it->second;
  }
  const std::string& output(const std::string& port) const {
    auto it = output_paths.find(port);
    if (it == output_paths.end()) throw ExecFailure("missing output port: " + port);
    return it->second;
  }
  std::string input_text(const std::string& port) const { return slurp(input(port)); }
  void write_output(const std::string& port, const std::string& content) const {
    spit(output(port), content);
  }
};

// run: produce every declared output or throw ExecFailure.
// guard: branch-member selection predicate over the routed inputs.
struct Executor {
  std::function<void(const ExecContext&)> run;
  std::function<bool(const ExecContext&)> guard;
};

// Executors declared as "cmd: <template>" spawn a shell command. Placeholders:
// {in:port}, {out:port}, {workdir}. Exit status 0 means success.
inline Executor make_command_executor(const std::string& command_template) {
  return Executor{
      [command_template](const ExecContext& ctx) {
        std::string cmd = command_template;
        auto replace_all = [&cmd](const std::string& what, const std::string& with) {
          std::size_t at = 0;
          while ((at = cmd.find(what, at)) != std::string::npos) {
            cmd.replace(at, what.size(), with);
            at += with.size();
          }
        };
        for (const auto& [port, path] : ctx.input_paths) replace_all("{in:" + port + "}", path);
        for (const auto& [port, path] : ctx.output_paths) {
          std::filesystem::create_directories(std::filesystem::path(path).parent_path());
          replace_all("{out:" + port + "}", path);
        }
        replace_all("{workdir}", ctx.series_dir.string());
        int rc = std::system(cmd.c_str());
        if (rc != 0) {
          throw ExecFailure("command exited with status " + std::to_string(rc) + ": " + cmd);
        }
        for (const auto& [port, path] : ctx.output_paths) {
          if (!std::filesystem::exists(path)) {
            throw ExecFailure("command did not produce output '" + port + "': " + cmd);
          }
        }
      },
      nullptr};
}

class ExecutorRegistry {
 public:
  using Factory = std::function<Executor(const VertexSpec&)>;

  void add(const std::string& name, Factory factory) {
    factories_[name] = std::move(factory);
  }

  bool contains(const std::string& name) const { return factories_.count(name) > 0; }

  Executor make(const VertexSpec& vertex) const {
    const std::string& spec = vertex.executor;
    if (spec.rfind("cmd:", 0) == 0) {
      return make_command_executor(trim(spec.substr(4)));
    }
    std::string name = spec;
    if (name.rfind("builtin:", 0) == 0) name = name.substr(8);
    auto it = factories_.find(name);
    if (it == factories_.end()) {
      throw ConfigError("unknown executor '" + spec + "' for vertex '" + vertex.id + "'");
    }
    return it->second(vertex);
  }

 private:
  std::map<std::string, Factory> factories_;
};

}  // namespace metapipe
