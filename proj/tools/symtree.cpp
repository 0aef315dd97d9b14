// Copyright 2026 The symtree Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "symtree/demo.hpp"
#include "symtree/pipeline.hpp"
#include "symtree/service.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitDimension = 3;
constexpr int kExitMerge = 4;
constexpr int kExitIo = 5;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << bytes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derive hierarchical decision trees from feedforward and convolutional networks"};
  app.require_subcommand(1);

  std::string model_path, inputs_path, output_path, tree_path, format = "json", scope = "winner";
  std::vector<std::string> paths_files;
  double theta = 0.5, epsilon = 0.0;
  int port = 8080;
  std::string host = "127.0.0.1";

  auto* import_cmd = app.add_subcommand("import", "Convert a model archive or interchange file to canonical interchange");
  import_cmd->add_option("model", model_path, "Keras-style archive or interchange JSON")->required();
  import_cmd->add_option("-o,--output", output_path, "Output file (default stdout)");

  auto* derive_cmd = app.add_subcommand("derive", "Derive one decision path per input vector");
  derive_cmd->add_option("network", model_path, "Interchange JSON")->required();
  derive_cmd->add_option("inputs", inputs_path, "One comma-separated vector per line")->required();
  derive_cmd->add_option("-o,--output", output_path, "Paths file (default stdout)");
  derive_cmd->add_option("--theta", theta, "Relevance threshold in [0, 1]");
  derive_cmd->add_option("--epsilon", epsilon, "Static pruning threshold (>= 0)");
  derive_cmd->add_option("--scope", scope, "winner|all");

  auto* merge_cmd = app.add_subcommand("merge", "Merge paths files into one decision tree");
  merge_cmd->add_option("paths", paths_files, "Paths files")->required();
  merge_cmd->add_option("-o,--output", output_path, "Tree file (default stdout)");

  auto* export_cmd = app.add_subcommand("export", "Render a tree file as DOT or canonical JSON");
  export_cmd->add_option("tree", tree_path, "Tree file")->required();
  export_cmd->add_option("--format", format, "dot|json");
  export_cmd->add_option("-o,--output", output_path, "Output file (default stdout)");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the inspector HTTP API");
  serve_cmd->add_option("network", model_path, "Interchange JSON")->required();
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--host", host, "Bind address");

  auto* demo_cmd = app.add_subcommand("demo", "Write the landscape demo network and its input grid");
  std::string grid_path;
  demo_cmd->add_option("-o,--output", output_path, "Interchange file (default stdout)");
  demo_cmd->add_option("--grid", grid_path, "Also write the 200-point input grid here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*import_cmd) {
      write_output(output_path, symtree::run_import(read_file(model_path)));
    } else if (*derive_cmd) {
      symtree::RunOptions opt;
      opt.relevance.theta = theta;
      opt.relevance.scope = symtree::parse_scope(scope);
      opt.epsilon = epsilon;
      opt.validate();
      const auto net = symtree::parse_interchange(read_file(model_path));
      const auto inputs = symtree::parse_inputs(read_file(inputs_path));
      write_output(output_path, symtree::serialize_pathset(symtree::run_derive(net, inputs, opt)));
    } else if (*merge_cmd) {
      std::vector<symtree::PathSet> sets;
      for (const auto& p : paths_files) sets.push_back(symtree::read_pathset(read_file(p)));
      write_output(output_path, symtree::to_json(symtree::run_merge(sets)));
    } else if (*export_cmd) {
      symtree::ExportOptions opt;
      opt.format = symtree::parse_format(format);
      write_output(output_path, symtree::export_tree(symtree::read_tree(read_file(tree_path)), opt));
    } else if (*serve_cmd) {
      symtree::Service service(symtree::parse_interchange(read_file(model_path)));
      httplib::Server server;
      symtree::mount(server, service);
      if (!server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
      std::cerr << "listening on http://" << host << ":" << port << std::endl;
      server.listen_after_bind();
    } else if (*demo_cmd) {
      write_output(output_path, symtree::serialize_interchange(symtree::demo::landscape_network()));
      if (!grid_path.empty()) {
        std::string text = "# altitude,temperature,humidity\n";
        for (const auto& x : symtree::demo::landscape_grid()) {
          std::ostringstream line;
          line.precision(17);
          line << x[0] << "," << x[1] << "," << x[2] << "\n";
          text += line.str();
        }
        write_output(grid_path, text);
      }
    }
  } catch (const symtree::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const symtree::MergeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMerge;
  } catch (const symtree::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
