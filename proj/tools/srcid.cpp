#include <boost/program_options.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "srcid/experiments.hpp"

namespace po = boost::program_options;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRun = 4;

void usage(std::ostream& os) {
  os << "usage:\n"
        "  srcid run <driver> --config <path> [--seed S] [--out DIR] [--workers W]\n"
        "  srcid validate --config <path>\n"
        "  srcid version\n"
        "drivers: separation, mse, hellinger, eh, experiment2\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw srcid::ConfigError("cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

srcid::ExperimentConfig parse(const std::string& path, const std::string& text) {
  std::istringstream in(text);
  return srcid::parse_config(in, path);
}

int cmd_validate(const std::vector<std::string>& args) {
  po::options_description opts("validate");
  opts.add_options()("config", po::value<std::string>()->required(), "config file");
  po::variables_map vm;
  po::store(po::command_line_parser(args).options(opts).run(), vm);
  po::notify(vm);
  const auto path = vm["config"].as<std::string>();
  const auto cfg = parse(path, read_file(path));
  std::cout << path << ": ok (" << cfg.name << ")\n";
  return 0;
}

int cmd_run(const std::vector<std::string>& args) {
  po::options_description opts("run");
  opts.add_options()("driver", po::value<std::string>()->required(), "driver name")(
      "config", po::value<std::string>()->required(), "config file")("seed", po::value<std::uint64_t>(),
                                                                     "master seed (overrides run.seed)")(
      "out", po::value<std::string>(), "output directory (default out/<config name>/<driver>)")(
      "workers", po::value<std::size_t>(), "worker threads (overrides run.workers)");
  po::positional_options_description pos;
  pos.add("driver", 1);
  po::variables_map vm;
  po::store(po::command_line_parser(args).options(opts).positional(pos).run(), vm);
  po::notify(vm);

  srcid::RunRequest req;
  req.driver = vm["driver"].as<std::string>();
  const auto& names = srcid::driver_names();
  if (std::find(names.begin(), names.end(), req.driver) == names.end())
    throw po::error("unknown driver '" + req.driver + "'");
  const auto path = vm["config"].as<std::string>();
  req.config_text = read_file(path);
  req.config = parse(path, req.config_text);
  if (vm.count("workers")) {
    req.config.workers = vm["workers"].as<std::size_t>();
    if (req.config.workers == 0) throw srcid::ConfigError("--workers must be positive");
  }
  req.seed = vm.count("seed") ? vm["seed"].as<std::uint64_t>() : req.config.seed;
  req.out_dir = vm.count("out") ? std::filesystem::path(vm["out"].as<std::string>())
                                : std::filesystem::path("out") / req.config.name / req.driver;

  std::cerr << "srcid " << srcid::kVersion << ": " << req.driver << " on " << path << " seed " << req.seed << '\n';
  const auto files = srcid::run_experiment(req);
  for (const auto& [name, hash] : files) std::cout << (req.out_dir / name).string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage(std::cerr);
    return kExitUsage;
  }
  const std::string cmd = argv[1];
  const std::vector<std::string> rest(argv + 2, argv + argc);
  try {
    if (cmd == "version") {
      std::cout << "srcid " << srcid::kVersion << '\n';
      return 0;
    }
    if (cmd == "validate") return cmd_validate(rest);
    if (cmd == "run") return cmd_run(rest);
    if (cmd == "-h" || cmd == "--help" || cmd == "help") {
      usage(std::cout);
      return 0;
    }
    std::cerr << "unknown command '" << cmd << "'\n";
    usage(std::cerr);
    return kExitUsage;
  } catch (const po::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    usage(std::cerr);
    return kExitUsage;
  } catch (const srcid::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRun;
  }
}
