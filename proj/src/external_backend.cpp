#include <csignal>
#include <cstdio>
#include <sys/wait.h>
#include <unistd.h>

#include "cubeagent/agent.hpp"

#include "httplib.h"
#include "json.hpp"

namespace cubeagent {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json memories_json(const std::vector<MemoryObject> &memories) {
  auto arr = ordered_json::array();
  for (const auto &m : memories) {
    ordered_json o;
    o["description"] = m.description;
    o["importance"] = m.importance;
    // Retrieval stamps last_accessed_at with the current tick.
    o["age_ticks"] = m.last_accessed_at - m.created_at;
    arr.push_back(std::move(o));
  }
  return arr;
}

class Transport {
public:
  virtual ~Transport() = default;
  virtual std::string exchange(const std::string &request) = 0;
};

class HttpTransport final : public Transport {
public:
  explicit HttpTransport(const std::string &url) {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end + 3);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    client_ = std::make_unique<httplib::Client>(base_);
    client_->set_connection_timeout(5);
    client_->set_read_timeout(60);
  }

  std::string exchange(const std::string &request) override {
    auto res = client_->Post(path_, request, "application/json");
    if (!res) throw BackendUnreachable("no response from " + base_ + path_ + ": " + httplib::to_string(res.error()));
    if (res->status != 200) throw ProtocolError("HTTP status " + std::to_string(res->status));
    return res->body;
  }

private:
  std::string base_, path_;
  std::unique_ptr<httplib::Client> client_;
};

// Child process speaking one JSON object per line on stdin/stdout.
class StdioTransport final : public Transport {
public:
  explicit StdioTransport(const std::string &command) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) throw BackendUnreachable("pipe failed");
    pid_ = fork();
    if (pid_ < 0) throw BackendUnreachable("fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[1]);
      close(from_child[0]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char *>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    out_ = fdopen(to_child[1], "w");
    in_ = fdopen(from_child[0], "r");
    std::signal(SIGPIPE, SIG_IGN);
  }

  ~StdioTransport() override {
    if (out_) std::fclose(out_);
    if (in_) std::fclose(in_);
    if (pid_ > 0) waitpid(pid_, nullptr, 0);
  }

  std::string exchange(const std::string &request) override {
    if (std::fputs(request.c_str(), out_) < 0 || std::fputc('\n', out_) < 0 || std::fflush(out_) != 0)
      throw BackendUnreachable("planner process closed its input");
    std::string line;
    int c;
    while ((c = std::fgetc(in_)) != EOF && c != '\n') line.push_back(static_cast<char>(c));
    if (c == EOF && line.empty()) throw BackendUnreachable("planner process closed its output");
    return line;
  }

private:
  pid_t pid_ = -1;
  FILE *out_ = nullptr;
  FILE *in_ = nullptr;
};

class ExternalBackend final : public PlannerBackend {
public:
  explicit ExternalBackend(std::unique_ptr<Transport> t) : transport_(std::move(t)) {}

  std::vector<Subtask> decompose(const Task &task, const FaceletState &observation,
                                 const std::vector<MemoryObject> &memories) override {
    ordered_json req;
    req["kind"] = "decompose";
    req["task_id"] = task.id;
    req["facelets"] = observation.stickers;
    req["goal"] = "solved";
    req["memories"] = memories_json(memories);
    return parse_decompose_response(transport_->exchange(req.dump()));
  }

  StepProposal step(const Subtask &subtask, const FaceletState &observation,
                    const std::vector<std::string> &history,
                    const std::vector<MemoryObject> &memories) override {
    ordered_json req;
    req["kind"] = "step";
    req["subtask"] = {{"name", subtask.name}, {"goal", to_string(subtask.goal)}};
    req["facelets"] = observation.stickers;
    const std::size_t from = history.size() > 10 ? history.size() - 10 : 0;
    req["history"] = std::vector<std::string>(history.begin() + static_cast<std::ptrdiff_t>(from), history.end());
    req["memories"] = memories_json(memories);
    return parse_step_response(transport_->exchange(req.dump()));
  }

private:
  std::unique_ptr<Transport> transport_;
};

} // namespace

std::unique_ptr<PlannerBackend> external_backend(const std::string &endpoint) {
  if (endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0)
    return std::make_unique<ExternalBackend>(std::make_unique<HttpTransport>(endpoint));
  if (endpoint.rfind("stdio:", 0) == 0)
    return std::make_unique<ExternalBackend>(std::make_unique<StdioTransport>(endpoint.substr(6)));
  throw BackendUnreachable("endpoint must start with http:// or stdio: (got '" + endpoint + "')");
}

} // namespace cubeagent
