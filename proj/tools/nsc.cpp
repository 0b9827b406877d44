#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "nsc/commands.hpp"
#include "nsc/errors.hpp"

namespace {

// Exit codes are part of the interface: 0 success, 1 usage, 2 data/format
// error, 3 divergence.
int run(const std::function<int()>& body) {
    try {
        return body();
    } catch (const nsc::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const nsc::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nested sparse convnet pipeline"};
    app.require_subcommand(1);
    app.footer(
        "exit codes: 0 success, 1 usage error, 2 data/format error, 3 divergence\n"
        "metrics columns: step frame level value lr\n"
        "  (value is the batch loss for dense/sparse frames, accuracy for eval rows)");

    nsc::DatasetArgs ds;
    CLI::App* cmd_ds = app.add_subcommand("dataset", "generate a toy dataset file");
    cmd_ds->add_option("kind", ds.kind, "blobs, spiral or textures")->required();
    cmd_ds->add_option("out", ds.out_path, "output path")->required();
    cmd_ds->add_option("--samples", ds.samples, "sample count (default 1000)");
    cmd_ds->add_option("--classes", ds.classes, "class count, blobs only (default 2)");
    cmd_ds->add_option("--seed", ds.seed, "rng seed (default 1)");

    std::string config_path;
    CLI::App* cmd_tr = app.add_subcommand("train", "train a model from a config file");
    cmd_tr->add_option("config", config_path, "key=value config file")->required();

    nsc::EncodeArgs enc;
    CLI::App* cmd_en =
        app.add_subcommand("encode", "encode a trained model into NestedCSR form");
    cmd_en->add_option("model", enc.model_path, "trained model container")->required();
    cmd_en->add_option("out", enc.out_path, "encoded output path")->required();
    cmd_en->add_flag("--quantize", enc.quantize, "int8 payload with binary scaling");

    nsc::InferArgs inf;
    CLI::App* cmd_in =
        app.add_subcommand("infer", "run sparse inference at a sparsity level");
    cmd_in->add_option("model", inf.model_path, "encoded model container")->required();
    cmd_in->add_option("data", inf.data_path, "dataset file")->required();
    cmd_in->add_option("--sparsity-level", inf.level,
                       "1-based level, 1 = least sparse (default 1)");
    cmd_in->add_option("--tile", inf.tile_m, "kernel column tile (default 4)");

    nsc::BenchArgs bench;
    CLI::App* cmd_be = app.add_subcommand("bench", "time the sparse kernel per level");
    cmd_be->add_option("model", bench.path, "encoded model container");
    cmd_be->add_option("--synthetic", bench.synthetic_size,
                       "bench a synthetic NxN layer instead of a model file");
    cmd_be->add_option("--repeats", bench.repeats, "timed runs per level (default 5)");
    cmd_be->add_option("--cols", bench.b_cols, "dense operand columns (default 32)");
    cmd_be->add_option("--tile", bench.tile_m, "kernel column tile (default 4)");
    cmd_be->add_option("--threads", bench.threads,
                       "worker threads (default 1 for timing stability)");
    cmd_be->add_option("--seed", bench.seed, "rng seed (default 1)");

    std::string inspect_path;
    CLI::App* cmd_is =
        app.add_subcommand("inspect", "dump headers and check file invariants");
    cmd_is->add_option("path", inspect_path, "dataset, model or NestedCSR file")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (cmd_ds->parsed())
        return run([&] { nsc::cmd_dataset(ds, std::cout); return 0; });
    if (cmd_tr->parsed())
        return run([&] { nsc::cmd_train(config_path, std::cout); return 0; });
    if (cmd_en->parsed())
        return run([&] { nsc::cmd_encode(enc, std::cout); return 0; });
    if (cmd_in->parsed())
        return run([&] { nsc::cmd_infer(inf, std::cout); return 0; });
    if (cmd_be->parsed())
        return run([&] { nsc::cmd_bench(bench, std::cout); return 0; });
    if (cmd_is->parsed())
        return run([&] { return nsc::cmd_inspect(inspect_path, std::cout); });
    return 1;
}
