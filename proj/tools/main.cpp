// tilevlm — tiled vision-language pipeline CLI.
// Subcommands: tile, gen, train, eval, cost, inspect-checkpoint.
// Exit codes: 0 ok, 2 config/usage, 3 contract violation, 4 I/O, 5 freeze
// contract violation.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "vlm/checkpoint.hpp"
#include "vlm/cost.hpp"
#include "vlm/eval.hpp"
#include "vlm/image_io.hpp"
#include "vlm/train.hpp"
#include "vlm/warmup.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace vlm;

namespace {

constexpr const char* kVersion = "tilevlm 0.1.0";

// ----------------------------- config plumbing -----------------------------

GridSpec parse_grid(const std::string& text, int view_side) {
    // forms: "1x1", "2x2", "3x3+g"
    GridSpec g;
    g.view_side = view_side;
    std::string body = text;
    if (body.size() > 2 && body.substr(body.size() - 2) == "+g") {
        g.include_global = true;
        body = body.substr(0, body.size() - 2);
    }
    auto x = body.find('x');
    if (x == std::string::npos) throw ConfigError("bad grid '" + text + "', expected RxC[+g]");
    try {
        g.rows = std::stoi(body.substr(0, x));
        g.cols = std::stoi(body.substr(x + 1));
    } catch (const std::exception&) {
        throw ConfigError("bad grid '" + text + "', expected RxC[+g]");
    }
    if (g.rows < 1 || g.cols < 1) throw ConfigError("bad grid '" + text + "'");
    return g;
}

std::string grid_label(const GridSpec& g) {
    return std::to_string(g.rows) + "x" + std::to_string(g.cols) + (g.include_global ? "+g" : "");
}

// Fill every omitted field with its default so the manifest records the full
// effective configuration, never hidden defaults.
json resolve_config(json in) {
    json d;
    d["seed"] = 0;
    d["threads"] = 1;
    d["grid"] = "2x2";
    d["task"] = "detail";
    d["encoder"] = {{"patch_size", 8}, {"embed_dim", 64},  {"depth", 4},
                    {"heads", 4},      {"mlp_ratio", 4.0}, {"view_side", 64}};
    d["decoder"] = {{"vocab_size", 256}, {"d_lm", 128}, {"depth", 4}, {"heads", 4}, {"max_seq", 2048}};
    d["norm"] = {{"mean", {0.5, 0.5, 0.5}}, {"std", {0.5, 0.5, 0.5}}};
    d["lora"] = {{"rank", 4}, {"alpha", 8.0}};
    d["data"] = {{"image_side", 256}, {"glyph_side", 8},  {"n_glyphs", 8},     {"rows", 3},
                 {"cols", 3},         {"marker_side", 24}, {"train_samples", 4000}};
    d["lm_warmup"] = {{"steps", 0}, {"batch_size", 8}, {"learning_rate", 1e-3}};
    d["phase1"] = {{"steps", 200}, {"batch_size", 16}, {"learning_rate", 0.0}};
    d["phase2"] = {{"steps", 500}, {"batch_size", 16}, {"learning_rate", 0.0}};
    d.merge_patch(in);
    return d;
}

EncoderConfig encoder_from(const json& cfg) {
    EncoderConfig e;
    e.patch_size = cfg.at("patch_size");
    e.embed_dim = cfg.at("embed_dim");
    e.depth = cfg.at("depth");
    e.heads = cfg.at("heads");
    e.mlp_ratio = cfg.at("mlp_ratio");
    e.view_side = cfg.at("view_side");
    return e;
}

DecoderConfig decoder_from(const json& cfg) {
    DecoderConfig dc;
    dc.vocab_size = cfg.at("vocab_size");
    dc.d_lm = cfg.at("d_lm");
    dc.depth = cfg.at("depth");
    dc.heads = cfg.at("heads");
    dc.max_seq = cfg.at("max_seq");
    return dc;
}

NormStats norm_from(const json& cfg) {
    NormStats n;
    n.mean = cfg.at("mean").get<std::vector<float>>();
    n.std = cfg.at("std").get<std::vector<float>>();
    return n;
}

VlmModel<float> model_from(const json& cfg, const GridSpec& grid) {
    LoraConfig lora;
    lora.rank = cfg.at("lora").at("rank");
    lora.alpha = cfg.at("lora").at("alpha");
    return build_pipeline<float>(grid, encoder_from(cfg.at("encoder")),
                                 decoder_from(cfg.at("decoder")), cfg.at("seed"),
                                 norm_from(cfg.at("norm")), lora);
}

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in " + path + ": " + e.what());
    }
    return j;
}

// Output root: --out is taken relative to $TILEVLM_OUT_ROOT when set.
fs::path resolve_out(const std::string& out) {
    fs::path p(out);
    const char* root = std::getenv("TILEVLM_OUT_ROOT");
    if (root && *root && p.is_relative()) p = fs::path(root) / p;
    return p;
}

// Manifests are written before any other output so partial runs are
// detectable.
struct ManifestWriter {
    fs::path dir;
    json manifest;

    ManifestWriter(const fs::path& out_dir, const std::string& command, const json& config) {
        dir = out_dir;
        fs::create_directories(dir);
        manifest["version"] = kVersion;
        manifest["command"] = command;
        manifest["config"] = config;
        manifest["started_at"] = timestamp();
        manifest["status"] = "running";
        write();
    }

    static std::string timestamp() {
        auto now = std::chrono::system_clock::now();
        std::time_t t = std::chrono::system_clock::to_time_t(now);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return buf;
    }

    void finish(json extra = {}) {
        manifest["status"] = "complete";
        manifest["finished_at"] = timestamp();
        if (!extra.empty()) manifest.update(extra);
        write();
    }

    void write() const {
        std::ofstream out(dir / "manifest.json");
        if (!out) throw IoError("cannot write manifest in " + dir.string());
        out << manifest.dump(2) << "\n";
    }
};

json report_to_json(const TrainReport& r) {
    json j;
    j["phase"] = r.phase;
    j["lr_used"] = r.lr_used;
    j["steps"] = r.loss_trace.size();
    j["loss_trace"] = r.loss_trace;
    if (!r.loss_trace.empty()) {
        j["loss_first"] = r.loss_trace.front();
        j["loss_last"] = r.loss_trace.back();
    }
    j["wall_seconds"] = r.wall_seconds;
    j["tokens_processed"] = r.tokens_processed;
    j["flops_estimate"] = r.flops_estimate;
    j["checkpoint"] = r.checkpoint_path;
    json digests;
    for (const auto& [prefix, pair] : r.prefix_digests) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%016llx -> %016llx",
                      static_cast<unsigned long long>(pair.first),
                      static_cast<unsigned long long>(pair.second));
        digests[prefix] = buf;
    }
    j["prefix_digests"] = digests;
    j["changed_prefixes"] = r.changed_prefixes;
    return j;
}

json eval_to_json(const EvalResult& r) {
    json j;
    j["task"] = r.task;
    j["n_samples"] = r.n_samples;
    j["accuracy"] = r.accuracy;
    if (r.prf) {
        j["precision"] = r.prf->precision;
        j["recall"] = r.prf->recall;
        j["f1"] = r.prf->f1;
        j["aggregate_f1"] = r.aggregate_f1;
    }
    return j;
}

json cost_to_json(const CostReport& r) {
    json j;
    j["label"] = r.label;
    j["text_len"] = r.text_len;
    j["visual_tokens"] = r.visual_tokens;
    j["encoder_flops"] = r.encoder_flops;
    j["projector_flops"] = r.projector_flops;
    j["decoder_flops"] = r.decoder_flops;
    j["forward_total"] = r.forward_total;
    j["train_total"] = r.train_total;
    j["overhead_vs_baseline"] = r.overhead_vs_baseline;
    j["formulas"] = CostReport::formula_notes();
    return j;
}

SampleFn make_stream(const json& data_cfg, TaskKind task, uint64_t seed, int64_t limit) {
    DetailTaskParams dp;
    dp.image_side = data_cfg.at("image_side");
    dp.glyph_side = data_cfg.at("glyph_side");
    dp.n_glyphs = data_cfg.at("n_glyphs");
    CoherenceTaskParams cp;
    cp.image_side = data_cfg.at("image_side");
    cp.rows = data_cfg.at("rows");
    cp.cols = data_cfg.at("cols");
    cp.marker_side = data_cfg.at("marker_side");
    switch (task) {
        case TaskKind::caption:
            return [dp, seed, limit](int64_t i) { return make_caption_sample(dp, seed, i % limit); };
        case TaskKind::detail:
            return [dp, seed, limit](int64_t i) { return make_detail_sample(dp, seed, i % limit); };
        case TaskKind::coherence:
            return
                [cp, seed, limit](int64_t i) { return make_coherence_sample(cp, seed, i % limit); };
        default:
            throw ConfigError("task has no generator");
    }
}

// ----------------------------- subcommands -----------------------------

int cmd_tile(const std::string& input, const std::string& grid_text, int side,
             const std::string& out) {
    GridSpec grid = parse_grid(grid_text, side);
    RasterImage img = load_image(input);
    json cfg = {{"input", input}, {"grid", grid_label(grid)}, {"view_side", side}};
    ManifestWriter mw(resolve_out(out), "tile", cfg);

    TileSet tiles = split_into_tiles(img, grid);
    json index;
    index["grid"] = grid_label(grid);
    index["view_side"] = side;
    json views = json::array();
    for (size_t t = 0; t < tiles.tiles.size(); ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "tile_%02zu.png", t);
        save_png(tiles.tiles[t], (mw.dir / name).string());
        views.push_back({{"file", name},
                         {"provenance", "tile:" + std::to_string(t)},
                         {"grid_row", static_cast<int>(t) / grid.cols},
                         {"grid_col", static_cast<int>(t) % grid.cols}});
    }
    if (tiles.global_view) {
        save_png(*tiles.global_view, (mw.dir / "global.png").string());
        views.push_back({{"file", "global.png"}, {"provenance", "global"}});
    }
    index["views"] = views;
    std::ofstream idx(mw.dir / "tiles.json");
    idx << index.dump(2) << "\n";
    mw.finish({{"views_written", views.size()}});
    std::printf("wrote %zu views to %s\n", views.size(), mw.dir.c_str());
    return 0;
}

int cmd_gen(const std::string& task_name_in, int n, uint64_t seed, const std::string& out,
            const json& data_cfg) {
    TaskKind task = task_from_name(task_name_in);
    json cfg = {{"task", task_name_in}, {"n", n}, {"seed", seed}, {"data", data_cfg}};
    ManifestWriter mw(resolve_out(out), "gen", cfg);
    SampleFn stream = make_stream(data_cfg, task, seed, n);

    std::ofstream idx(mw.dir / "index.jsonl");
    for (int i = 0; i < n; ++i) {
        SyntheticSample s = stream(i);
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%05d.png", i);
        save_png(s.image, (mw.dir / name).string());
        json line = {{"index", i},       {"file", name},          {"question", s.question},
                     {"answer", s.answer}, {"task", task_name(s.task)}};
        if (s.task == TaskKind::detail || s.task == TaskKind::caption) {
            line["glyph_id"] = s.glyph_id;
            line["glyph_row"] = s.glyph_row;
            line["glyph_col"] = s.glyph_col;
        } else if (s.task == TaskKind::coherence) {
            line["cell_a"] = s.cell_a;
            line["cell_b"] = s.cell_b;
            line["relation"] = std::string(1, s.relation);
            line["grid_rows"] = s.grid_rows;
            line["grid_cols"] = s.grid_cols;
        }
        idx << line.dump() << "\n";
    }
    mw.finish({{"samples_written", n}});
    std::printf("wrote %d samples to %s\n", n, mw.dir.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out, int threads_override,
              const std::string& init_checkpoint) {
    json cfg = resolve_config(load_json(config_path));
    if (threads_override > 0) cfg["threads"] = threads_override;
    ManifestWriter mw(resolve_out(out), "train", cfg);

    GridSpec grid = parse_grid(cfg.at("grid"), cfg.at("encoder").at("view_side"));
    auto model = model_from(cfg, grid);
    if (!init_checkpoint.empty()) load_checkpoint(model.params, init_checkpoint);

    uint64_t seed = cfg.at("seed");
    int64_t train_samples = cfg.at("data").at("train_samples");
    TaskKind task = task_from_name(cfg.at("task"));
    json reports = json::array();

    if (int steps = cfg.at("lm_warmup").at("steps"); steps > 0) {
        WarmupConfig wc;
        wc.steps = steps;
        wc.batch_size = cfg.at("lm_warmup").at("batch_size");
        wc.learning_rate = cfg.at("lm_warmup").at("learning_rate");
        wc.seed = sub_seed(seed, "warmup");
        wc.threads = cfg.at("threads");
        wc.prefix_tokens = static_cast<int>(visual_token_count(grid, model.enc_cfg));
        auto trace = pretrain_decoder_format(model, benchmark_templates(), wc);
        std::printf("lm warmup %d steps: loss %.4f -> %.4f\n", steps, trace.front(), trace.back());
        json wj = {{"phase", "lm_warmup"},
                   {"steps", steps},
                   {"loss_first", trace.front()},
                   {"loss_last", trace.back()}};
        reports.push_back(wj);
    }

    auto phase_cfg = [&](const json& pj, Phase phase) {
        TrainConfig tc;
        tc.phase = phase;
        tc.steps = pj.at("steps");
        tc.batch_size = pj.at("batch_size");
        tc.learning_rate = pj.at("learning_rate");
        tc.seed = seed;
        tc.threads = cfg.at("threads");
        return tc;
    };

    if (int steps = cfg.at("phase1").at("steps"); steps > 0) {
        TrainConfig tc = phase_cfg(cfg.at("phase1"), Phase::pretrain);
        SampleFn stream = make_stream(cfg.at("data"), TaskKind::caption,
                                      sub_seed(seed, "data.phase1"), train_samples);
        auto report = run_phase1(model, stream, tc, (mw.dir / "phase1").string());
        std::printf("phase1 %d steps: loss %.4f -> %.4f (%.1fs)\n", steps,
                    report.loss_trace.front(), report.loss_trace.back(), report.wall_seconds);
        reports.push_back(report_to_json(report));
    }
    if (int steps = cfg.at("phase2").at("steps"); steps > 0) {
        TrainConfig tc = phase_cfg(cfg.at("phase2"), Phase::finetune);
        SampleFn stream =
            make_stream(cfg.at("data"), task, sub_seed(seed, "data.phase2"), train_samples);
        auto report = run_phase2(model, stream, tc, (mw.dir / "phase2").string());
        std::printf("phase2 %d steps: loss %.4f -> %.4f (%.1fs)\n", steps,
                    report.loss_trace.front(), report.loss_trace.back(), report.wall_seconds);
        reports.push_back(report_to_json(report));
    }

    std::ofstream rf(mw.dir / "train_report.json");
    rf << reports.dump(2) << "\n";
    json digests;
    for (const char* prefix : {"vision.", "projector.", "lm.", "lora."}) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(model.params.digest(prefix)));
        digests[prefix] = buf;
    }
    mw.finish({{"reports", reports}, {"checkpoint_digests", digests}});
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint,
             const std::string& task_name_in, const std::string& sweep, int n, uint64_t seed,
             const std::string& out, int threads_override) {
    json cfg = resolve_config(config_path.empty() ? json::object() : load_json(config_path));
    if (threads_override > 0) cfg["threads"] = threads_override;
    TaskKind task = task_from_name(task_name_in);
    json run_cfg = {{"config", cfg},   {"checkpoint", checkpoint}, {"task", task_name_in},
                    {"sweep", sweep},  {"n", n},                   {"seed", seed}};
    ManifestWriter mw(resolve_out(out), "eval", run_cfg);

    std::vector<SyntheticSample> samples;
    SampleFn stream = make_stream(cfg.at("data"), task, seed, n);
    for (int i = 0; i < n; ++i) samples.push_back(stream(i));

    json results = json::array();
    std::printf("%-8s %8s %10s", "grid", "n", "accuracy");
    if (task == TaskKind::coherence) std::printf(" %10s %10s %10s", "precision", "recall", "f1");
    std::printf("\n");
    std::string item;
    std::stringstream ss(sweep);
    while (std::getline(ss, item, ',')) {
        GridSpec grid = parse_grid(item, cfg.at("encoder").at("view_side"));
        auto model = model_from(cfg, grid);
        if (!checkpoint.empty()) load_checkpoint(model.params, checkpoint);
        EvalResult r = evaluate_model(model, samples, cfg.at("threads"));
        std::printf("%-8s %8lld %10.4f", item.c_str(), static_cast<long long>(r.n_samples),
                    r.accuracy);
        if (r.prf) std::printf(" %10.4f %10.4f %10.4f", r.prf->precision, r.prf->recall, r.prf->f1);
        std::printf("\n");
        json rj = eval_to_json(r);
        rj["grid"] = item;
        results.push_back(rj);
    }
    std::ofstream rf(mw.dir / "eval_report.json");
    rf << results.dump(2) << "\n";
    mw.finish({{"results", results}});
    return 0;
}

int cmd_cost(const std::string& config_path, const std::string& sweep, int text_len,
             const std::string& out, const std::string& csv) {
    json cfg = resolve_config(config_path.empty() ? json::object() : load_json(config_path));
    EncoderConfig enc = encoder_from(cfg.at("encoder"));
    DecoderConfig dec = decoder_from(cfg.at("decoder"));

    std::vector<CostReport> reports;
    std::string item;
    std::stringstream ss(sweep);
    while (std::getline(ss, item, ',')) {
        GridSpec grid = parse_grid(item, enc.view_side);
        reports.push_back(estimate_cost(grid, enc, dec, text_len));
    }
    if (reports.empty()) throw ConfigError("empty sweep");
    for (auto& r : reports) r.overhead_vs_baseline = overhead_ratio(r, reports.front());

    std::printf("%-8s %8s %14s %14s %14s %14s %10s\n", "config", "tokens", "encoder", "projector",
                "decoder", "train_total", "vs_base");
    for (const auto& r : reports)
        std::printf("%-8s %8lld %14.4g %14.4g %14.4g %14.4g %+9.1f%%\n", r.label.c_str(),
                    static_cast<long long>(r.visual_tokens), r.encoder_flops, r.projector_flops,
                    r.decoder_flops, r.train_total, 100.0 * r.overhead_vs_baseline);

    if (!out.empty()) {
        json run_cfg = {{"config", cfg}, {"sweep", sweep}, {"text_len", text_len}};
        ManifestWriter mw(resolve_out(out), "cost", run_cfg);
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(cost_to_json(r));
        std::ofstream rf(mw.dir / "cost_report.json");
        rf << arr.dump(2) << "\n";
        if (!csv.empty()) {
            std::ofstream cf(mw.dir / csv);
            cf << "config,visual_tokens,encoder_flops,projector_flops,decoder_flops,forward_total,"
                  "train_total,overhead_vs_baseline\n";
            for (const auto& r : reports)
                cf << r.label << "," << r.visual_tokens << "," << r.encoder_flops << ","
                   << r.projector_flops << "," << r.decoder_flops << "," << r.forward_total << ","
                   << r.train_total << "," << r.overhead_vs_baseline << "\n";
        }
        mw.finish({{"results", arr}});
    }
    return 0;
}

int cmd_inspect(const std::string& base) {
    std::printf("%s\n", describe_checkpoint(base).c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) + " — tiled vision-language pipeline"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (1 = bit-reproducible)");

    // tile
    auto* tile = app.add_subcommand("tile", "split an image into grid views and dump PNGs");
    std::string tile_input, tile_grid = "2x2", tile_out = "tiles_out";
    int tile_side = 224;
    bool tile_global = false;
    tile->add_option("input", tile_input, "input image (PNG or PPM)")->required();
    tile->add_option("out", tile_out, "output directory")->required();
    tile->add_option("--grid", tile_grid, "grid RxC");
    tile->add_flag("--global", tile_global, "append the global view");
    tile->add_option("--side", tile_side, "view side length S");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic benchmark dataset");
    std::string gen_task = "detail", gen_out = "dataset_out";
    int gen_n = 100;
    uint64_t gen_seed = 0;
    int gen_image_side = 256, gen_glyph_side = 8, gen_n_glyphs = 8, gen_rows = 3, gen_cols = 3,
        gen_marker = 24;
    gen->add_option("--task", gen_task, "detail | coherence | caption");
    gen->add_option("--n", gen_n, "sample count");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--image-side", gen_image_side);
    gen->add_option("--glyph-side", gen_glyph_side);
    gen->add_option("--n-glyphs", gen_n_glyphs);
    gen->add_option("--rows", gen_rows);
    gen->add_option("--cols", gen_cols);
    gen->add_option("--marker-side", gen_marker);

    // train
    auto* train = app.add_subcommand("train", "run the two-phase training pipeline");
    std::string train_config, train_out = "train_out", train_init;
    train->add_option("--config", train_config, "JSON run config")->required();
    train->add_option("--out", train_out, "output directory");
    train->add_option("--init-checkpoint", train_init, "checkpoint to load before training");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint over a grid sweep");
    std::string eval_config, eval_ckpt, eval_task = "detail", eval_sweep = "1x1,2x2,2x2+g,3x3,3x3+g",
                eval_out = "eval_out";
    int eval_n = 200;
    uint64_t eval_seed = 9999;
    eval->add_option("--config", eval_config, "JSON run config (model dims)");
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint base path");
    eval->add_option("--task", eval_task, "detail | coherence");
    eval->add_option("--sweep", eval_sweep, "comma-separated grids");
    eval->add_option("--n", eval_n, "test samples");
    eval->add_option("--seed", eval_seed, "test-set seed");
    eval->add_option("--out", eval_out, "output directory");

    // cost
    auto* cost = app.add_subcommand("cost", "analytic FLOP cost across configs");
    std::string cost_config, cost_sweep = "1x1,2x2,2x2+g,3x3,3x3+g", cost_out, cost_csv;
    int cost_text_len = kFinetuneTextLen;
    cost->add_option("--config", cost_config, "JSON run config (model dims)");
    cost->add_option("--sweep", cost_sweep, "comma-separated grids");
    cost->add_option("--text-len", cost_text_len, "text length for the decoder term");
    cost->add_option("--out", cost_out, "output directory for JSON/CSV reports");
    cost->add_option("--csv", cost_csv, "CSV file name inside --out");

    // inspect-checkpoint
    auto* inspect = app.add_subcommand("inspect-checkpoint", "print a checkpoint manifest");
    std::string inspect_base;
    inspect->add_option("checkpoint", inspect_base, "checkpoint base path")->required();

    try {
        app.parse(argc, argv);
        if (*tile)
            return cmd_tile(tile_input, tile_grid + (tile_global ? "+g" : ""), tile_side, tile_out);
        if (*gen) {
            json data_cfg = {{"image_side", gen_image_side}, {"glyph_side", gen_glyph_side},
                             {"n_glyphs", gen_n_glyphs},     {"rows", gen_rows},
                             {"cols", gen_cols},             {"marker_side", gen_marker}};
            return cmd_gen(gen_task, gen_n, gen_seed, gen_out, data_cfg);
        }
        if (*train) return cmd_train(train_config, train_out, threads, train_init);
        if (*eval)
            return cmd_eval(eval_config, eval_ckpt, eval_task, eval_sweep, eval_n, eval_seed,
                            eval_out, threads);
        if (*cost) return cmd_cost(cost_config, cost_sweep, cost_text_len, cost_out, cost_csv);
        if (*inspect) return cmd_inspect(inspect_base);
        return 2;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const FreezeViolation& e) {
        std::fprintf(stderr, "freeze contract violation: %s\n", e.what());
        return 5;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "contract error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 4;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ShapeError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const CapacityError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
