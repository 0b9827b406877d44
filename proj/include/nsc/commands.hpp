#ifndef NSC_COMMANDS_HPP
#define NSC_COMMANDS_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nsc/config.hpp"
#include "nsc/container.hpp"
#include "nsc/net.hpp"

namespace nsc {

/// Named layer-chain presets. input_dims is the dataset feature shape,
/// classes the label arity. Throws UsageError on an unknown preset or a
/// shape the preset cannot consume.
std::vector<LayerSpec> make_architecture(const std::string& preset,
                                         const std::vector<int>& input_dims, int classes);

struct DatasetArgs {
    std::string kind;  // blobs, spiral, textures
    std::string out_path;
    int samples = 1000;
    int classes = 2;  // blobs only
    uint64_t seed = 1;
};

struct EncodeArgs {
    std::string model_path;
    std::string out_path;
    bool quantize = false;
};

struct InferArgs {
    std::string model_path;
    std::string data_path;
    int level = 1;  // 1-based, 1 = least sparse
    int tile_m = 4;
};

struct BenchArgs {
    std::string path;       // encoded model; empty when synthetic_size is set
    int synthetic_size = 0;  // square layer side, 0 = load from path
    int repeats = 5;
    int b_cols = 32;
    int tile_m = 4;
    int threads = 1;
    uint64_t seed = 1;
};

/// Per-level outcome of one benchmark run, kept for in-process assertions.
struct BenchRow {
    int level = 0;
    uint16_t sparsity_pm = 0;
    size_t macs = 0;
    double mac_ratio = 1.0;
    double median_ms = 0.0;
    double normalized = 1.0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    bool storage_stable = false;  // payload pointers unchanged across level switches
};

/// Per-level summary row recorded in the run manifest.
struct ManifestRow {
    int level = 0;          // 0 = dense
    float sparsity = 0.0f;  // configured level, 0 for dense
    float accuracy = 0.0f;
    uint64_t macs_per_sample = 0;
    uint64_t bytes = 0;
};

struct RunManifest {
    std::vector<std::pair<std::string, std::string>> config;
    uint64_t seed = 0;
    std::string model_sha1;
    std::vector<ManifestRow> rows;
};

std::string render_manifest(const RunManifest& m);

struct InferReport {
    float accuracy = 0.0f;
    std::vector<uint64_t> layer_macs;  // per weighted layer, per sample
    uint64_t total_macs = 0;           // per sample
};

void cmd_dataset(const DatasetArgs& args, std::ostream& out);
RunManifest cmd_train(const std::string& config_path, std::ostream& out);
void cmd_encode(const EncodeArgs& args, std::ostream& out);
InferReport cmd_infer(const InferArgs& args, std::ostream& out);
BenchReport cmd_bench(const BenchArgs& args, std::ostream& out);

/// Returns 0 when every invariant check passes, 2 otherwise. Never throws
/// on corrupt content (IO failures still raise IoError).
int cmd_inspect(const std::string& path, std::ostream& out);

}  // namespace nsc

#endif
