#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + '"';
}

int fail(int code, const std::string& kind, const std::string& field, const std::string& message) {
  std::cerr << "error kind=" << kind;
  if (!field.empty()) std::cerr << " field=" << field;
  std::cerr << " message=" << quoted(message) << '\n';
  return code;
}

/// Turns leftover "--key value" and "--key=value" arguments into overrides.
void apply_overrides(fracsmooth::cli::Config& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() == 2)
      throw fracsmooth::cli::ConfigError("argument", "unexpected argument " + arg);
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      cfg.set(arg.substr(2, eq - 2), arg.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size())
        throw fracsmooth::cli::ConfigError(arg.substr(2), "missing value for " + arg);
      cfg.set(arg.substr(2), extras[++i]);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fracsmooth;
  CLI::App app{"Fractional smoothness and discrete hedging experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 0;
  for (const auto& [name, fn] : cli::commands()) {
    auto* sub = app.add_subcommand(name);
    sub->allow_extras();
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads; results do not depend on it");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "config", "", e.what());
  }

  auto* sub = app.get_subcommands().front();
  try {
    cli::Config cfg = config_path.empty() ? cli::Config{} : cli::Config::from_file(config_path);
    apply_overrides(cfg, sub->remaining());
    if (sub->count("--seed")) cfg.set("seed", std::to_string(seed));
    set_thread_count(threads);
    const auto summary = cli::commands().at(sub->get_name())(cfg, out_dir);
    std::cout << summary.dump(2) << '\n';
    return 0;
  } catch (const cli::ConfigError& e) {
    return fail(2, "config", e.field(), e.what());
  } catch (const InvalidArgument& e) {
    return fail(2, "argument", "", e.what());
  } catch (const ConvergenceError& e) {
    return fail(3, "convergence", "", e.what());
  } catch (const ExactHedge& e) {
    return fail(3, "exact_hedge", "", e.what());
  } catch (const std::exception& e) {
    return fail(1, "internal", "", e.what());
  }
}
