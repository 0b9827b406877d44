#include "nsc/commands.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <utility>

#include "nsc/dataset.hpp"
#include "nsc/errors.hpp"
#include "nsc/hash.hpp"
#include "nsc/kernels.hpp"
#include "nsc/nested_csr.hpp"
#include "nsc/pruning.hpp"
#include "nsc/quantization.hpp"
#include "nsc/rng.hpp"

namespace nsc {

namespace {

// Shortest float form that round-trips, for reproducible text output.
std::string g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string g4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

// Sparsity levels are per-mille quantized, so three decimals are exact.
std::string level_str(float s) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3f", std::lround(s * 1000.0f) / 1000.0);
    return buf;
}

std::string shape_string(const std::vector<int>& dims) {
    std::string s;
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(dims[i]);
    }
    return s;
}

std::string layer_label(int index, const LayerSpec& spec) {
    std::string s = "layer " + std::to_string(index) + " (" + layer_kind_name(spec.kind);
    if (spec.weighted())
        s += " " + std::to_string(spec.weight_rows()) + "x" +
             std::to_string(spec.weight_cols());
    if (spec.prunable) s += ", prunable";
    return s + ")";
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("write failed on " + path);
}

std::vector<const LayerSpec*> weighted_specs(const std::vector<LayerSpec>& layers) {
    std::vector<const LayerSpec*> out;
    for (const LayerSpec& spec : layers)
        if (spec.weighted()) out.push_back(&spec);
    return out;
}

uint64_t count_kept(const BlockMask& mask) {
    uint64_t kept = 0;
    for (uint8_t b : mask.bits) kept += b;
    return kept;
}

int argmax_row(const Matrix& m, int row) {
    int best = 0;
    for (int j = 1; j < m.cols; ++j)
        if (m.at(row, j) > m.at(row, best)) best = j;
    return best;
}

// Identical to the forward-pass conv output layout: channel-major CHW rows.
Matrix scatter_conv(const Matrix& p, const LayerSpec& conv, int batch) {
    const int positions = conv.out_h() * conv.out_w();
    Matrix out(batch, conv.out_channels * positions);
    for (int b = 0; b < batch; ++b)
        for (int pos = 0; pos < positions; ++pos)
            for (int oc = 0; oc < conv.out_channels; ++oc)
                out.at(b, oc * positions + pos) = p.at(b * positions + pos, oc);
    return out;
}

Int8Matrix transpose_i8(const Int8Matrix& m) {
    Int8Matrix t(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
    return t;
}

// Single-CSR byte size of one level viewed on its own: values plus one
// column index per block plus one count per matrix row.
uint64_t level_csr_bytes(const NestedCSRMatrix& m, int level, int value_bytes,
                         int index_bytes) {
    const int bands = m.bands_for_level(level);
    const uint64_t blocks = m.block_offsets[static_cast<size_t>(bands) * m.block_rows()];
    const uint64_t values = blocks * m.block_size();
    return values * value_bytes + blocks * index_bytes +
           static_cast<uint64_t>(m.rows) * index_bytes;
}

uint64_t band_block_count(const NestedCSRMatrix& m, int band) {
    return m.block_offsets[static_cast<size_t>(band) * m.block_rows()] -
           m.block_offsets[static_cast<size_t>(band - 1) * m.block_rows()];
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<LayerSpec> make_architecture(const std::string& preset,
                                         const std::vector<int>& input_dims, int classes) {
    int width = 1;
    for (int d : input_dims) width *= d;
    if (preset == "mlp") {
        return {LayerSpec::fc(width, 32, false), LayerSpec::relu(),
                LayerSpec::fc(32, 32, true),     LayerSpec::relu(),
                LayerSpec::fc(32, classes, true), LayerSpec::softmax_ce()};
    }
    if (preset == "linear") {
        return {LayerSpec::fc(width, classes, false), LayerSpec::softmax_ce()};
    }
    if (preset == "tiny-conv") {
        if (input_dims != std::vector<int>{1, 8, 8})
            throw UsageError("tiny-conv expects 1x8x8 features, dataset has " +
                             shape_string(input_dims));
        return {LayerSpec::conv2d(1, 8, 3, 3, 1, 1, 8, 8, false), LayerSpec::relu(),
                LayerSpec::conv2d(8, 16, 3, 3, 2, 1, 8, 8, true), LayerSpec::relu(),
                LayerSpec::fc(256, classes, true), LayerSpec::softmax_ce()};
    }
    throw UsageError("unknown architecture '" + preset + "' (mlp, tiny-conv, linear)");
}

void cmd_dataset(const DatasetArgs& args, std::ostream& out) {
    Dataset d;
    if (args.kind == "blobs") d = make_blobs(args.samples, args.classes, args.seed);
    else if (args.kind == "spiral") d = make_spiral(args.samples, args.seed);
    else if (args.kind == "textures") d = make_textures(args.samples, args.seed);
    else
        throw UsageError("unknown dataset kind '" + args.kind +
                         "' (blobs, spiral, textures)");
    save_dataset(d, args.out_path);
    out << "wrote " << d.sample_count() << " samples, shape " << shape_string(d.dims)
        << ", " << d.class_count << " classes to " << args.out_path << "\n";
}

std::string render_manifest(const RunManifest& m) {
    std::string s = "# nsc run manifest\n";
    for (const auto& [key, value] : m.config) s += "config." + key + " = " + value + "\n";
    s += "seed = " + std::to_string(m.seed) + "\n";
    s += "model_sha1 = " + m.model_sha1 + "\n";
    s += "# level sparsity accuracy macs_per_sample bytes\n";
    for (const ManifestRow& row : m.rows)
        s += std::to_string(row.level) + " " + level_str(row.sparsity) + " " + g9(row.accuracy) +
             " " + std::to_string(row.macs_per_sample) + " " + std::to_string(row.bytes) +
             "\n";
    return s;
}

RunManifest cmd_train(const std::string& config_path, std::ostream& out) {
    const RunConfig cfg = parse_config_file(config_path);
    const Dataset full = load_dataset(cfg.data_path);

    TrainData train_data;
    TrainData eval_data;
    if (!cfg.eval_path.empty()) {
        train_data = full.as_train_data();
        eval_data = load_dataset(cfg.eval_path).as_train_data();
    } else {
        auto [tr, ev] = split_dataset(full, cfg.train_fraction, cfg.train.seed);
        train_data = tr.as_train_data();
        eval_data = ev.as_train_data();
    }

    const std::vector<LayerSpec> specs =
        make_architecture(cfg.arch, full.dims, full.class_count);
    ToyNetwork net = ToyNetwork::create(specs);
    net.init_weights(cfg.train.seed);

    const TrainedModel model = train(net, train_data, eval_data, cfg.train);

    const ModelContainer container = container_from_trained(model, cfg.train.levels);
    save_model(container, cfg.out_model);

    std::string metrics = "# nsc training metrics\n# columns: step frame level value lr\n";
    for (const HistoryRecord& rec : model.history) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d %s %d %.9g %.9g\n", rec.step,
                      frame_name(rec.frame).c_str(), rec.level,
                      static_cast<double>(rec.value), static_cast<double>(rec.lr));
        metrics += buf;
    }
    write_text_file(cfg.out_metrics, metrics);

    RunManifest manifest;
    manifest.seed = cfg.train.seed;
    const PruneSchedule sched = cfg.train.resolved_schedule();
    const OptimizerConfig opt = cfg.train.resolved_optimizer();
    std::string level_list;
    for (size_t i = 0; i < cfg.train.levels.levels.size(); ++i)
        level_list += (i ? "," : "") + level_str(cfg.train.levels.levels[i]);
    manifest.config = {
        {"arch", cfg.arch},
        {"mode", train_mode_name(cfg.train.mode)},
        {"levels", level_list},
        {"block", std::to_string(cfg.train.levels.block_m) + "x" +
                      std::to_string(cfg.train.levels.block_n)},
        {"steps", std::to_string(cfg.train.steps)},
        {"batch_size", std::to_string(cfg.train.batch_size)},
        {"warmup_steps", std::to_string(sched.warmup_steps)},
        {"period", std::to_string(sched.period)},
        {"eval_interval", std::to_string(cfg.train.eval_interval)},
        {"lr", g9(opt.base_lr)},
        {"momentum", g9(opt.momentum)},
        {"weight_decay", g9(opt.weight_decay)},
        {"distill", cfg.train.distill ? "true" : "false"},
        {"data", cfg.data_path},
        {"eval", cfg.eval_path},
        {"train_fraction", g9(cfg.train_fraction)},
    };
    manifest.model_sha1 = git_blob_hash_file(cfg.out_model);

    const std::vector<const LayerSpec*> wspecs = weighted_specs(model.net.layers);
    auto dense_row = [&](int level) {
        ManifestRow row;
        row.level = level;
        for (const LayerSpec* spec : wspecs) {
            const uint64_t positions =
                spec->kind == LayerKind::Conv2D
                    ? static_cast<uint64_t>(spec->out_h()) * spec->out_w()
                    : 1;
            const uint64_t elems =
                static_cast<uint64_t>(spec->weight_rows()) * spec->weight_cols();
            row.macs_per_sample += elems * positions;
            row.bytes += elems * 4;
        }
        return row;
    };
    if (model.masks.empty()) {
        ManifestRow row = dense_row(0);
        row.accuracy = evaluate(model.net, {}, 0, eval_data);
        manifest.rows.push_back(row);
    } else {
        for (int li = 0; li < cfg.train.levels.count(); ++li) {
            ManifestRow row;
            row.level = li + 1;
            row.sparsity = cfg.train.levels.levels[li];
            row.accuracy = evaluate(model.net, model.masks, li, eval_data);
            const int bm = cfg.train.levels.block_m;
            const int bn = cfg.train.levels.block_n;
            for (size_t wi = 0; wi < wspecs.size(); ++wi) {
                const LayerSpec* spec = wspecs[wi];
                const uint64_t positions =
                    spec->kind == LayerKind::Conv2D
                        ? static_cast<uint64_t>(spec->out_h()) * spec->out_w()
                        : 1;
                if (model.masks[wi].count() > 0) {
                    const uint64_t kept = count_kept(model.masks[wi].masks[li]);
                    row.macs_per_sample += kept * positions;
                    row.bytes += kept * 4 + kept / (static_cast<uint64_t>(bm) * bn) * 4 +
                                 static_cast<uint64_t>(spec->weight_rows()) * 4;
                } else {
                    const uint64_t elems =
                        static_cast<uint64_t>(spec->weight_rows()) * spec->weight_cols();
                    row.macs_per_sample += elems * positions;
                    row.bytes += elems * 4;
                }
            }
            manifest.rows.push_back(row);
        }
    }
    write_text_file(cfg.out_model + ".manifest", render_manifest(manifest));

    out << "trained " << train_mode_name(cfg.train.mode) << " model, " << cfg.train.steps
        << " steps on " << train_data.sample_count() << " samples\n";
    for (const ManifestRow& row : manifest.rows)
        out << "  level " << row.level << " (sparsity " << level_str(row.sparsity)
            << "): accuracy " << g4(row.accuracy) << ", " << row.macs_per_sample
            << " MACs/sample\n";
    out << "model: " << cfg.out_model << " (sha1 " << manifest.model_sha1 << ")\n";
    out << "metrics: " << cfg.out_metrics << "\n";
    out << "manifest: " << cfg.out_model << ".manifest\n";
    return manifest;
}

void cmd_encode(const EncodeArgs& args, std::ostream& out) {
    const ModelContainer c = load_model(args.model_path);
    if (c.kind != ModelKind::Trained)
        throw UsageError("encode expects a trained model container, got " +
                         model_kind_name(c.kind));
    if (c.level_count() == 0)
        throw UsageError("model has no nested masks; train with a sparse mode first");

    ModelContainer enc;
    enc.kind = args.quantize ? ModelKind::EncodedI8 : ModelKind::EncodedF32;
    enc.layers = c.layers;
    enc.levels = c.levels;

    const std::vector<const LayerSpec*> specs = weighted_specs(c.layers);
    for (size_t wi = 0; wi < specs.size(); ++wi) {
        EncodedLayer layer;
        if (specs[wi]->prunable) {
            if (!masks_nested(c.masks[wi]))
                throw NestingViolationError("weighted layer " + std::to_string(wi) +
                                            ": masks are not nested");
            layer.encoded = true;
            if (args.quantize) {
                QuantizedLayer q = encode_quantized(c.weights[wi], c.masks[wi]);
                layer.sparse = std::move(q.weights);
                layer.exponent = q.scale_exponent;
            } else {
                layer.sparse = encode(c.weights[wi], c.masks[wi]);
            }
        } else {
            layer.dense = c.weights[wi];
        }
        enc.encoded.push_back(std::move(layer));
    }
    save_model(enc, args.out_path);

    const int value_bytes = args.quantize ? 1 : 4;
    const int index_bytes = 4;
    int li = 0;
    uint64_t total_values = 0, total_iidx = 0, total_jidx = 0, total_dense = 0;
    out << "footprint (value " << value_bytes << " B, index " << index_bytes << " B):\n";
    for (size_t i = 0; i < c.layers.size(); ++i) {
        if (!c.layers[i].weighted()) continue;
        const EncodedLayer& layer = enc.encoded[li++];
        if (!layer.encoded) {
            const uint64_t raw = layer.dense.data.size() * 4;
            out << "  " << layer_label(static_cast<int>(i), c.layers[i])
                << ": dense, not encoded, " << raw << " B raw\n";
            total_dense += raw;
            continue;
        }
        const FootprintReport fp = footprint(layer.sparse, value_bytes, index_bytes);
        out << "  " << layer_label(static_cast<int>(i), c.layers[i]) << ": values "
            << fp.values_bytes << " B, iidx " << fp.iidx_bytes << " B, jidx "
            << fp.jidx_bytes << " B, total " << fp.total_bytes << " B\n";
        total_values += fp.values_bytes;
        total_iidx += fp.iidx_bytes;
        total_jidx += fp.jidx_bytes;
    }
    out << "  total: values " << total_values << " B, iidx " << total_iidx << " B, jidx "
        << total_jidx << " B, dense " << total_dense << " B, all "
        << (total_values + total_iidx + total_jidx + total_dense) << " B\n";

    out << "per-level single-CSR equivalent:\n";
    for (int level = 1; level <= enc.level_count(); ++level) {
        uint64_t bytes = 0;
        for (const EncodedLayer& layer : enc.encoded)
            bytes += layer.encoded
                         ? level_csr_bytes(layer.sparse, level, value_bytes, index_bytes)
                         : layer.dense.data.size() * 4;
        out << "  level " << level << " (sparsity "
            << level_str(enc.levels.levels[level - 1]) << "): " << bytes << " B\n";
    }
    out << "wrote " << model_kind_name(enc.kind) << " container to " << args.out_path
        << "\n";
}

InferReport cmd_infer(const InferArgs& args, std::ostream& out) {
    const ModelContainer c = load_model(args.model_path);
    if (c.kind == ModelKind::Trained)
        throw UsageError("infer expects an encoded model; run encode first");
    if (args.level < 1 || args.level > c.level_count())
        throw UsageError("level " + std::to_string(args.level) +
                         " out of range (model has " + std::to_string(c.level_count()) +
                         " levels)");
    if (args.tile_m < 1) throw UsageError("tile must be >= 1");

    const Dataset d = load_dataset(args.data_path);
    const int want_width = c.layers.front().input_size();
    if (d.features.cols != want_width)
        throw DimensionError("model expects " + std::to_string(want_width) +
                             " features, dataset has " +
                             std::to_string(d.features.cols));

    KernelConfig kcfg;
    kcfg.tile_M = args.tile_m;
    kcfg.selected_level = args.level;
    const bool int8_path = c.kind == ModelKind::EncodedI8;

    Matrix x = d.features;
    int wi = 0;
    for (const LayerSpec& spec : c.layers) {
        switch (spec.kind) {
            case LayerKind::FullyConnected: {
                const EncodedLayer& layer = c.encoded[wi++];
                if (!layer.encoded) {
                    x = matmul_nt(x, layer.dense);
                } else if (!int8_path) {
                    x = transpose(spmm(layer.sparse, transpose(x), kcfg));
                } else {
                    const int in_exp = activation_exponent(x);
                    const Int8Matrix xq = quantize_activations(x, in_exp);
                    const Int32Matrix acc = spmm_q(layer.sparse, transpose_i8(xq), kcfg);
                    Matrix y(x.rows, layer.sparse.rows);
                    for (int b = 0; b < y.rows; ++b)
                        for (int j = 0; j < y.cols; ++j)
                            y.at(b, j) = std::ldexp(static_cast<float>(acc.at(j, b)),
                                                    layer.exponent + in_exp);
                    x = std::move(y);
                }
                break;
            }
            case LayerKind::Conv2D: {
                const EncodedLayer& layer = c.encoded[wi++];
                if (!layer.encoded) {
                    const Matrix cols = im2col(x, spec);
                    const Matrix p = matmul_nt(cols, layer.dense);
                    x = scatter_conv(p, spec, x.rows);
                } else if (!int8_path) {
                    x = conv_sparse(spec, layer.sparse, x, kcfg);
                } else {
                    const Matrix cols = im2col(x, spec);
                    const int in_exp = activation_exponent(cols);
                    const Int8Matrix colsq = quantize_activations(cols, in_exp);
                    const Int32Matrix acc = spmm_q(layer.sparse, transpose_i8(colsq), kcfg);
                    const int positions = spec.out_h() * spec.out_w();
                    Matrix y(x.rows, spec.out_channels * positions);
                    for (int b = 0; b < x.rows; ++b)
                        for (int pos = 0; pos < positions; ++pos)
                            for (int oc = 0; oc < spec.out_channels; ++oc)
                                y.at(b, oc * positions + pos) =
                                    std::ldexp(static_cast<float>(
                                                   acc.at(oc, b * positions + pos)),
                                               layer.exponent + in_exp);
                    x = std::move(y);
                }
                break;
            }
            case LayerKind::ReLU:
                for (float& v : x.data) v = v > 0.0f ? v : 0.0f;
                break;
            case LayerKind::SoftmaxCE:
                break;
        }
    }

    int correct = 0;
    for (int r = 0; r < x.rows; ++r)
        if (argmax_row(x, r) == d.labels[r]) ++correct;

    InferReport report;
    report.accuracy = static_cast<float>(correct) / static_cast<float>(x.rows);

    out << "MACs per sample at level " << args.level << ":\n";
    wi = 0;
    for (size_t i = 0; i < c.layers.size(); ++i) {
        const LayerSpec& spec = c.layers[i];
        if (!spec.weighted()) continue;
        const EncodedLayer& layer = c.encoded[wi++];
        const int positions =
            spec.kind == LayerKind::Conv2D ? spec.out_h() * spec.out_w() : 1;
        const uint64_t macs =
            layer.encoded
                ? mac_count(layer.sparse, args.level, positions)
                : static_cast<uint64_t>(spec.weight_rows()) * spec.weight_cols() *
                      positions;
        report.layer_macs.push_back(macs);
        report.total_macs += macs;
        out << "  " << layer_label(static_cast<int>(i), spec) << ": " << macs
            << (layer.encoded ? "" : " (dense)") << "\n";
    }
    out << "  total: " << report.total_macs << "\n";
    out << "top-1 accuracy: " << g4(report.accuracy) << " (" << correct << "/" << x.rows
        << ") on " << args.data_path << "\n";
    return report;
}

BenchReport cmd_bench(const BenchArgs& args, std::ostream& out) {
    if (args.repeats < 1) throw UsageError("repeats must be >= 1");
    if (args.b_cols < 1) throw UsageError("columns must be >= 1");
    if (args.tile_m < 1) throw UsageError("tile must be >= 1");
    omp_set_num_threads(args.threads < 1 ? 1 : args.threads);

    NestedCSRMatrix layer;
    std::string label;
    if (args.synthetic_size > 0) {
        const int n = args.synthetic_size;
        const SparsityLevelSet levels = SparsityLevelSet::defaults();
        if (n % levels.block_n != 0)
            throw UsageError("synthetic size must be a multiple of " +
                             std::to_string(levels.block_n));
        Matrix w(n, n);
        Rng rng(derive_seed(args.seed, 41));
        for (float& v : w.data) v = rng.normal();
        layer = encode(w, get_nested_masks(w, levels));
        label = "synthetic " + std::to_string(n) + "x" + std::to_string(n);
    } else {
        if (args.path.empty())
            throw UsageError("bench needs an encoded model path or --synthetic N");
        const ModelContainer c = load_model(args.path);
        if (c.kind == ModelKind::Trained)
            throw UsageError("bench expects an encoded model; run encode first");
        size_t best = 0;
        bool found = false;
        for (size_t i = 0; i < c.encoded.size(); ++i) {
            if (!c.encoded[i].encoded) continue;
            if (!found || c.encoded[i].sparse.block_count() >
                              c.encoded[best].sparse.block_count())
                best = i;
            found = true;
        }
        if (!found) throw UsageError("model has no encoded layers");
        layer = c.encoded[best].sparse;
        label = std::to_string(layer.rows) + "x" + std::to_string(layer.cols) +
                " (largest encoded layer)";
    }

    Rng rng(derive_seed(args.seed, 42));
    Matrix b(layer.cols, args.b_cols);
    for (float& v : b.data) v = rng.normal();
    Int8Matrix bq(layer.cols, args.b_cols);
    for (int8_t& v : bq.data)
        v = static_cast<int8_t>(static_cast<int>(rng.below(255)) - 127);
    const bool int8_path = layer.dtype == ValueType::I8;

    // Level switching must reuse the encoded payload; record the storage
    // pointers so the claim is checked, not assumed.
    const float* values_ptr = layer.values_f32.data();
    const int8_t* values_i8_ptr = layer.values_i8.data();
    const uint32_t* jidx_ptr = layer.nz_jidx.data();
    const uint32_t* iidx_ptr = layer.nz_iidx.data();

    BenchReport report;
    volatile float sink = 0.0f;
    for (int level = 1; level <= layer.level_count(); ++level) {
        KernelConfig kcfg;
        kcfg.tile_M = args.tile_m;
        kcfg.selected_level = level;

        if (int8_path) sink = sink + static_cast<float>(spmm_q(layer, bq, kcfg).at(0, 0));
        else sink = sink + spmm(layer, b, kcfg).at(0, 0);

        std::vector<double> times;
        for (int r = 0; r < args.repeats; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            if (int8_path) {
                const Int32Matrix c32 = spmm_q(layer, bq, kcfg);
                sink = sink + static_cast<float>(c32.at(0, 0));
            } else {
                const Matrix c32 = spmm(layer, b, kcfg);
                sink = sink + c32.at(0, 0);
            }
            const auto t1 = std::chrono::steady_clock::now();
            times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        }

        BenchRow row;
        row.level = level;
        row.sparsity_pm = layer.levels_pm[level - 1];
        row.macs = mac_count(layer, level, args.b_cols);
        row.median_ms = median(times);
        report.rows.push_back(row);
    }
    (void)sink;

    report.storage_stable = values_ptr == layer.values_f32.data() &&
                            values_i8_ptr == layer.values_i8.data() &&
                            jidx_ptr == layer.nz_jidx.data() &&
                            iidx_ptr == layer.nz_iidx.data();

    for (BenchRow& row : report.rows) {
        row.mac_ratio = static_cast<double>(row.macs) /
                        static_cast<double>(report.rows.front().macs);
        row.normalized = row.median_ms / report.rows.front().median_ms;
    }

    out << "bench " << label << ", B " << layer.cols << "x" << args.b_cols << ", tile "
        << args.tile_m << ", " << (int8_path ? "int8" : "f32") << ", "
        << args.repeats << " repeats, " << (args.threads < 1 ? 1 : args.threads)
        << " thread(s):\n";
    out << "  level sparsity macs mac_ratio median_ms normalized\n";
    for (const BenchRow& row : report.rows) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "  %d %.3f %zu %.6f %.4f %.4f\n", row.level,
                      row.sparsity_pm / 1000.0, row.macs, row.mac_ratio, row.median_ms,
                      row.normalized);
        out << buf;
    }
    out << (report.storage_stable
                ? "  level switching reused the encoded payload (no re-encoding)\n"
                : "  WARNING: payload storage moved across level switches\n");
    return report;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    const bool have_magic = in.gcount() == 4;
    in.close();

    const auto print_ncsr = [&](const NestedCSRMatrix& m, const std::string& indent) {
        out << indent << "shape " << m.rows << "x" << m.cols << ", block " << m.block_m
            << "x" << m.block_n << ", "
            << (m.dtype == ValueType::I8 ? "int8" : "f32") << "\n";
        out << indent << "levels:";
        for (uint16_t pm : m.levels_pm) out << " " << level_str(pm / 1000.0f);
        out << "\n" << indent << "blocks per band:";
        for (int band = 1; band <= m.level_count(); ++band)
            out << " " << band_block_count(m, band);
        out << " (band 1 = sparsest core)\n";
    };

    if (have_magic && std::memcmp(magic, "NSCD", 4) == 0) {
        out << path << ": dataset\n";
        try {
            const Dataset d = load_dataset(path);
            out << "  " << d.sample_count() << " samples, shape " << shape_string(d.dims)
                << ", " << d.class_count << " classes\n";
        } catch (const FormatError& e) {
            out << "  FAILED: " << e.what() << "\n";
            return 2;
        }
        out << "  all checks passed\n";
        return 0;
    }

    if (have_magic && std::memcmp(magic, "NSCM", 4) == 0) {
        out << path << ": model container\n";
        ModelContainer c;
        try {
            c = load_model(path);
        } catch (const FormatError& e) {
            out << "  FAILED: " << e.what() << "\n";
            return 2;
        }
        out << "  kind " << model_kind_name(c.kind) << ", " << c.layers.size()
            << " layers\n";
        if (c.level_count() > 0) {
            out << "  levels:";
            for (float s : c.levels.levels) out << " " << level_str(s);
            out << ", block " << c.levels.block_m << "x" << c.levels.block_n << "\n";
        } else {
            out << "  no sparsity levels (dense-trained)\n";
        }
        int wi = 0;
        bool ok = true;
        for (size_t i = 0; i < c.layers.size(); ++i) {
            const LayerSpec& spec = c.layers[i];
            if (!spec.weighted()) continue;
            const std::string name = layer_label(static_cast<int>(i), spec);
            if (c.kind == ModelKind::Trained) {
                const NestedMaskSet& set = c.masks[wi];
                if (set.count() == 0) {
                    out << "  " << name << ": dense, not encoded\n";
                } else {
                    out << "  " << name << ": realized sparsity";
                    for (const BlockMask& mask : set.masks)
                        out << " " << g4(mask.sparsity);
                    if (masks_nested(set)) {
                        out << ", nesting ok\n";
                    } else {
                        out << "\n  FAILED: " << name << " masks are not nested\n";
                        ok = false;
                    }
                }
            } else {
                const EncodedLayer& layer = c.encoded[wi];
                if (!layer.encoded) {
                    out << "  " << name << ": dense, not encoded\n";
                } else {
                    out << "  " << name << ": encoded, exponent " << layer.exponent
                        << "\n";
                    print_ncsr(layer.sparse, "    ");
                }
            }
            ++wi;
        }
        if (!ok) return 2;
        out << "  all checks passed\n";
        return 0;
    }

    if (have_magic && std::memcmp(magic, "NCSR", 4) == 0) {
        out << path << ": NestedCSR stream\n";
        try {
            std::ifstream f(path, std::ios::binary);
            if (!f) throw IoError("cannot open " + path);
            const std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                             std::istreambuf_iterator<char>());
            if (f.bad()) throw IoError("read failed on " + path);
            const NestedCSRMatrix m = deserialize(bytes);
            print_ncsr(m, "  ");
        } catch (const FormatError& e) {
            out << "  FAILED: " << e.what() << "\n";
            return 2;
        }
        out << "  all checks passed\n";
        return 0;
    }

    out << path << ": FAILED: unrecognized file (no known magic)\n";
    return 2;
}

}  // namespace nsc
