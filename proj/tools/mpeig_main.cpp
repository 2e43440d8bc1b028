// mpeig solve|spectrum|verify|oracle --config <path> [--out <dir>] [--seed <u64>]

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <boost/program_options.hpp>

#include "mpeig/error.hpp"
#include "mpeig/io.hpp"

namespace po = boost::program_options;

namespace {

constexpr const char* kUsage =
    "usage: mpeig <solve|spectrum|verify|oracle> --config <path> [--out <dir>] [--seed <u64>]";

int run(int argc, char** argv) {
  po::options_description opts("options");
  opts.add_options()
      ("help,h", "show this message")
      ("config", po::value<std::string>(), "run config (JSON)")
      ("out", po::value<std::string>(), "output directory")
      ("seed", po::value<std::uint64_t>(), "random seed");
  po::options_description all;
  all.add(opts).add_options()("command", po::value<std::string>(), "");
  po::positional_options_description pos;
  pos.add("command", 1);

  po::variables_map vm;
  try {
    po::store(po::command_line_parser(argc, argv).options(all).positional(pos).run(), vm);
    po::notify(vm);
  } catch (const po::error& e) {
    std::cerr << "mpeig: " << e.what() << "\n" << kUsage << "\n";
    return mpeig::kExitValidation;
  }
  if (vm.count("help")) {
    std::cout << kUsage << "\n" << opts;
    return mpeig::kExitSuccess;
  }
  if (!vm.count("command") || !vm.count("config")) {
    std::cerr << kUsage << "\n";
    return mpeig::kExitValidation;
  }

  mpeig::RunConfig cfg = mpeig::load_config(vm["config"].as<std::string>());
  cfg.task = mpeig::task_from_string(vm["command"].as<std::string>());
  // Precedence for the output directory: --out, then the environment, then the config.
  if (vm.count("out")) {
    cfg.output_dir = vm["out"].as<std::string>();
  } else if (const char* env = std::getenv(mpeig::kOutputDirEnv); env && *env) {
    cfg.output_dir = env;
  }
  if (vm.count("seed")) {
    cfg.seed = vm["seed"].as<std::uint64_t>();
    cfg.solver.seed = cfg.seed;
  }

  const mpeig::CommandResult result = mpeig::run_task(cfg);
  std::cout << to_string(cfg.task) << ": " << result.summary << "\n";
  for (const auto& f : result.files) std::cout << "  wrote " << f.string() << "\n";
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const mpeig::ValidationError& e) {
    std::cerr << "mpeig: validation error: " << e.what() << "\n";
    return mpeig::kExitValidation;
  } catch (const mpeig::IoError& e) {
    std::cerr << "mpeig: I/O error: " << e.what() << "\n";
    return mpeig::kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "mpeig: I/O error: " << e.what() << "\n";
    return mpeig::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "mpeig: error: " << e.what() << "\n";
    return mpeig::kExitCheckFailure;
  }
}
