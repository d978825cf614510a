// Command-line front end; talks to the toolkit only through the C API.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "antilimit.h"

namespace {

const std::vector<std::string> kSubcommands = {
    "verify", "scan-fiber", "solve-window", "refine",   "certify",       "rotation-orbit",
    "solve-k", "continue",  "iterate",      "lyapunov", "gradient-flow", "sweep"};

int config_error(const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c;
  }
  std::fprintf(stderr, "{\"status\":%d,\"kind\":\"config\",\"message\":\"%s\"}\n", AL_ERR_CONFIG,
               escaped.c_str());
  return al_exit_code(AL_ERR_CONFIG);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"antilimit: anti-integrable limit toolkit"};
  app.set_version_flag("--version", std::string(al_version()));
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = -1;
  for (const std::string& name : kSubcommands) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--workers", workers, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : al_exit_code(AL_ERR_CONFIG);
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  if (workers < 0) {
    if (const char* env = std::getenv("ANTILIMIT_WORKERS")) {
      char* end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 0) return config_error("ANTILIMIT_WORKERS must be a nonnegative integer");
      workers = static_cast<int>(v);
    }
  }

  std::ifstream in(config_path, std::ios::binary);
  if (!in) return config_error("cannot read config file " + config_path);
  std::ostringstream text;
  text << in.rdbuf();

  char* manifest = nullptr;
  al_status st = al_run(subcommand.c_str(), text.str().c_str(), out_dir.empty() ? nullptr : out_dir.c_str(),
                        workers, &manifest);
  if (st != AL_OK) {
    std::fprintf(stderr, "%s\n", al_last_error_json());
    return al_exit_code(st);
  }
  std::printf("%s\n", manifest);
  al_free_string(manifest);
  return 0;
}
