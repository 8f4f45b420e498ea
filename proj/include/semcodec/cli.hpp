// Command-line front end. Kept in a header so tests can drive commands
// in-process through run_cli().
//
// Exit codes: 0 success, 1 I/O or backend failure, 2 strict-mode
// IllegalSymbol, 3 malformed container.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "semcodec/semcodec.hpp"

#ifndef SEMCODEC_DATA_DIR
#define SEMCODEC_DATA_DIR "data"
#endif

namespace semcodec::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kFailure = 1, kIllegalSymbol = 2, kBadContainer = 3 };

struct CliConfig {
    std::string backend = "mock";
    std::size_t words = 30;
    int reflect = 2;
    double reflect_threshold = 500.0;
    std::string policy = "repair";
    std::string prompts_dir;
    std::string out_dir = ".";
    int jobs = 1;
    std::string fixtures_dir = std::string(SEMCODEC_DATA_DIR) + "/fixtures";
    std::string wordlist = std::string(SEMCODEC_DATA_DIR) + "/wordlist.txt";
    bool wall_clock = false;

    PipelineConfig pipeline() const {
        PipelineConfig cfg;
        cfg.target_word_count = words;
        cfg.reflection_iterations = reflect;
        cfg.reflection_threshold_microbpp = reflect_threshold;
        cfg.repair_policy = parse_policy(policy);
        if (!prompts_dir.empty()) cfg.prompts = load_prompts(prompts_dir);
        cfg.timestamps = wall_clock ? TimestampMode::wall : TimestampMode::logical;
        cfg.validate();
        return cfg;
    }
};

inline std::unique_ptr<Backend> make_backend(const CliConfig &cfg) {
    if (cfg.backend == "mock") {
        return std::make_unique<MockBackend>(load_mock_fixtures(cfg.fixtures_dir), load_wordlist(cfg.wordlist));
    }
    if (cfg.backend == "http") return std::make_unique<HttpBackend>(HttpBackendConfig::from_env());
    throw InvalidArgument("unknown backend '" + cfg.backend + "'");
}

/// Maps an in-flight exception onto the exit-code taxonomy.
inline int classify_exception(std::exception_ptr ep, std::ostream &err) {
    try {
        std::rethrow_exception(ep);
    } catch (const IllegalSymbol &e) {
        err << "error: " << e.what() << '\n';
        return kIllegalSymbol;
    } catch (const ContainerError &e) {
        err << "error: " << e.what() << '\n';
        return kBadContainer;
    } catch (const LengthMismatch &e) {
        err << "error: " << e.what() << '\n';
        return kBadContainer;
    } catch (const DimensionOverflow &e) {
        err << "error: " << e.what() << '\n';
        return kBadContainer;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

/// Reads a PNG and brings it to 1024x1024 (centered square crop, resample).
inline ImageRef load_input_image(const fs::path &path, nlohmann::json *preprocess = nullptr) {
    const Image raw = read_png(path);
    CropInfo info;
    Image square = center_crop_square(raw, kCanonicalSide, &info);
    if (preprocess) {
        *preprocess = {{"source", path.filename().string()},
                       {"original", {info.original_width, info.original_height}},
                       {"crop", {{"x", info.x0}, {"y", info.y0}, {"side", info.side}}},
                       {"cropped", info.cropped},
                       {"resampled", info.resampled},
                       {"resample_filter", "triangle"},
                       {"output", {kCanonicalSide, kCanonicalSide}}};
    }
    return ImageRef(std::move(square));
}

inline std::string rate_report_text(const std::string &name, const SemanticContainer &c,
                                    const RegionThresholds &regions = {}) {
    const auto payload = payload_report(c, regions);
    const auto total = total_report(c, regions);
    std::ostringstream os;
    os << "file: " << name << '\n'
       << "dims: " << c.width << "x" << c.height << '\n'
       << "symbols: " << c.symbol_count() << '\n'
       << "payload bits: " << payload.bits << '\n'
       << "payload bpp: " << fmt::format("{:.6e}", payload.bpp) << " (" << payload.bpp_exact.num << "/"
       << payload.bpp_exact.den << ")\n"
       << "payload µbpp: " << format_microbpp(payload.microbpp) << " (" << approx_note(payload.microbpp) << ")\n"
       << "total bits (with 13-byte header): " << total.bits << '\n'
       << "total µbpp: " << format_microbpp(total.microbpp) << '\n'
       << "region: " << to_string(payload.region) << '\n';
    return os.str();
}

inline nlohmann::json rate_report_json(const std::string &name, const SemanticContainer &c,
                                       const RegionThresholds &regions = {}) {
    return {{"file", name},
            {"width", c.width},
            {"height", c.height},
            {"symbols", c.symbol_count()},
            {"payload", to_json(payload_report(c, regions))},
            {"total", to_json(total_report(c, regions))}};
}

inline void write_text(const fs::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ImageIoError("cannot write " + path.string());
    out << text;
}

/// Runs `work` over every item with at most `jobs` in flight; output and
/// the worst exit code are collected in input order.
inline int for_each_job(const std::vector<std::string> &items, int jobs, std::ostream &out, std::ostream &err,
                        const std::function<std::string(const std::string &)> &work) {
    struct Outcome {
        std::string out;
        std::string err;
        int code = kOk;
    };
    auto run_one = [&](const std::string &item) {
        Outcome o;
        try {
            o.out = work(item);
        } catch (...) {
            std::ostringstream es;
            es << item << ": ";
            o.code = classify_exception(std::current_exception(), es);
            o.err = es.str();
        }
        return o;
    };

    std::vector<Outcome> outcomes(items.size());
    const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
    for (std::size_t start = 0; start < items.size(); start += width) {
        const std::size_t stop = std::min(items.size(), start + width);
        if (width == 1) {
            outcomes[start] = run_one(items[start]);
            continue;
        }
        std::vector<std::future<Outcome>> batch;
        for (std::size_t i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, run_one, items[i]));
        for (std::size_t i = start; i < stop; ++i) outcomes[i] = batch[i - start].get();
    }

    int code = kOk;
    for (const auto &o : outcomes) {
        out << o.out;
        err << o.err;
        code = std::max(code, o.code);
    }
    return code;
}

/// Directories expand to their *.png (or *.smc) files, sorted.
inline std::vector<std::string> expand_inputs(const std::vector<std::string> &inputs, const std::string &ext) {
    std::vector<std::string> out;
    for (const auto &in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<std::string> found;
            for (const auto &e : fs::directory_iterator(in)) {
                if (e.is_regular_file() && e.path().extension() == ext) found.push_back(e.path().string());
            }
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else {
            out.push_back(in);
        }
    }
    return out;
}

struct EncodeArtifacts {
    fs::path smc;
    EncodeResult result;
};

inline EncodeArtifacts encode_to_disk(const fs::path &image_path, const CliConfig &cfg, const PipelineConfig &pcfg,
                                      Backend &backend) {
    nlohmann::json preprocess;
    const ImageRef image = load_input_image(image_path, &preprocess);
    const std::string stem = image_path.stem().string();
    const fs::path out = cfg.out_dir;

    EncodeResult result = encode_image(image, pcfg, backend);
    result.transcript.set_preprocess(preprocess);

    const fs::path smc = out / (stem + ".smc");
    write_file_bytes(smc, result.container);
    result.transcript.save(out / (stem + ".encode.transcript.json"));
    const auto container = decode_container(std::span<const std::uint8_t>(result.container));
    write_text(out / (stem + ".report.txt"), rate_report_text(smc.filename().string(), container, pcfg.regions));
    write_text(out / (stem + ".report.json"),
               rate_report_json(smc.filename().string(), container, pcfg.regions).dump(2) + "\n");
    return {smc, std::move(result)};
}

struct DecodeArtifacts {
    std::vector<fs::path> images;
    DecodeResult result;
};

inline DecodeArtifacts decode_to_disk(const fs::path &smc_path, const CliConfig &cfg, const PipelineConfig &pcfg,
                                      Backend &backend) {
    const auto bytes = read_file_bytes(smc_path);
    const std::string stem = smc_path.stem().string();
    const fs::path out = cfg.out_dir;

    DecodeArtifacts art;
    art.result = decode_container(std::span<const std::uint8_t>(bytes), pcfg, backend);

    nlohmann::json doc = art.result.transcript.to_json();
    if (art.result.reflection_trace) doc["reflection"] = art.result.reflection_trace->to_json();
    write_text(out / (stem + ".decode.transcript.json"), doc.dump(2) + "\n");

    const fs::path final_png = out / (stem + ".png");
    write_png(final_png, art.result.image.pixels());
    art.images.push_back(final_png);
    if (art.result.reflection_trace) {
        int i = 1;
        for (const auto &rec : art.result.reflection_trace->iterations) {
            const fs::path pre = out / fmt::format("{}.reflect_{}_pre.png", stem, i);
            const fs::path post = out / fmt::format("{}.reflect_{}_post.png", stem, i);
            write_png(pre, rec.generated_image.pixels());
            write_png(post, rec.regenerated_image.pixels());
            art.images.push_back(pre);
            art.images.push_back(post);
            ++i;
        }
    }
    return art;
}

inline std::string summary_line(const std::string &name, const SemanticContainer &c, const BitrateReport &r) {
    return fmt::format("{}: symbols={}, µbpp={}, region={}\n", name, c.symbol_count(), format_microbpp(r.microbpp),
                       to_string(r.region));
}

inline int cmd_inspect(const std::string &path, std::ostream &out, std::ostream &err) {
    try {
        const auto bytes = read_file_bytes(path);
        const auto c = decode_container(std::span<const std::uint8_t>(bytes));
        const auto payload = payload_report(c);
        const auto total = total_report(c);
        out << "magic: SMC1\n"
            << "version: " << int{kContainerVersion} << '\n'
            << "width: " << c.width << '\n'
            << "height: " << c.height << '\n'
            << "symbol_count: " << c.symbol_count() << '\n'
            << "text: \"" << from_symbols(c.symbols) << "\"\n"
            << "payload_bits: " << payload.bits << '\n'
            << "payload µbpp: " << format_microbpp(payload.microbpp) << '\n'
            << "total_bits: " << total.bits << '\n'
            << "total µbpp: " << format_microbpp(total.microbpp) << '\n'
            << "region: " << to_string(payload.region) << '\n';
        return kOk;
    } catch (...) {
        return classify_exception(std::current_exception(), err);
    }
}

struct ReportRow {
    std::string file;
    SemanticContainer container;
    BitrateReport report;
};

inline int cmd_report(const std::vector<std::string> &paths, const std::string &baseline, bool as_json,
                      std::ostream &out, std::ostream &err) {
    std::optional<std::uint64_t> baseline_bits;
    if (!baseline.empty()) {
        std::error_code ec;
        const auto size = fs::file_size(baseline, ec);
        if (ec) {
            err << "error: cannot read baseline " << baseline << ": " << ec.message() << '\n';
            return kFailure;
        }
        baseline_bits = size * 8;
    }

    std::vector<ReportRow> rows;
    for (const auto &p : paths) {
        try {
            const auto bytes = read_file_bytes(p);
            auto c = decode_container(std::span<const std::uint8_t>(bytes));
            auto r = payload_report(c);
            if (baseline_bits && r.bits > 0) r.baseline_ratio = baseline_ratio(r.bits, *baseline_bits);
            rows.push_back({fs::path(p).filename().string(), std::move(c), r});
        } catch (const std::exception &e) {
            err << "error: " << p << ": " << e.what() << '\n';
        }
    }
    if (rows.empty()) {
        err << "error: no valid containers\n";
        return kBadContainer;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow &a, const ReportRow &b) {
        // a.bits/a.pixels > b.bits/b.pixels, exactly
        return static_cast<unsigned __int128>(a.report.bits) * b.report.pixels >
               static_cast<unsigned __int128>(b.report.bits) * a.report.pixels;
    });

    if (as_json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &row : rows) {
            auto j = to_json(row.report);
            j["file"] = row.file;
            j["symbols"] = row.container.symbol_count();
            arr.push_back(std::move(j));
        }
        out << arr.dump(2) << '\n';
        return kOk;
    }

    std::size_t name_width = 4;
    for (const auto &row : rows) name_width = std::max(name_width, row.file.size());
    out << fmt::format("{:<{}}  {:>8}  {:>8}  {:>10}  {:>12}  {:<12}", "file", name_width, "symbols", "bits", "µbpp",
                       "approx", "region");
    if (baseline_bits) out << fmt::format("  {:>12}", "ratio");
    out << '\n';
    for (const auto &row : rows) {
        const auto &r = row.report;
        out << fmt::format("{:<{}}  {:>8}  {:>8}  {:>10}  {:>12}  {:<12}", row.file, name_width,
                           row.container.symbol_count(), r.bits, format_microbpp(r.microbpp),
                           approx_note(r.microbpp), to_string(r.region));
        if (baseline_bits) {
            out << fmt::format("  {:>12}", r.baseline_ratio ? fmt::format("{:.2f}x", r.baseline_ratio->value())
                                                            : std::string("n/a"));
        }
        out << '\n';
    }
    return kOk;
}

inline int run_cli(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr) {
    CLI::App app{"semcodec: text-based semantic image codec"};
    app.set_config("--config", "", "TOML/INI config file (flags override file values)");
    app.fallthrough();
    app.require_subcommand(1);

    CliConfig cfg;
    auto *backend_opt = app.add_option("--backend", cfg.backend, "Model backend (env: SEMCODEC_BACKEND)")
                            ->check(CLI::IsMember({"mock", "http"}))
                            ->capture_default_str();
    app.add_option("--words", cfg.words, "Target word count K for Word Select")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--reflect", cfg.reflect, "Reflection iterations R")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--reflect-threshold", cfg.reflect_threshold, "Reflection gate in µbpp")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app.add_option("--policy", cfg.policy, "Out-of-alphabet handling")
        ->check(CLI::IsMember({"strict", "repair"}))
        ->capture_default_str();
    app.add_option("--prompts", cfg.prompts_dir, "Prompt template directory (default: built-in)");
    app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", cfg.jobs, "Concurrent per-file pipelines")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--fixtures", cfg.fixtures_dir, "Mock backend fixture directory")->capture_default_str();
    app.add_option("--wordlist", cfg.wordlist, "Mock backend word list")->capture_default_str();
    app.add_flag("--wall-clock", cfg.wall_clock, "Wall-clock transcript timestamps (default: logical)");

    std::vector<std::string> inputs;
    std::string baseline;
    std::string description;
    bool report_json = false;

    auto *encode = app.add_subcommand("encode", "Encode PNG images into .smc containers");
    encode->add_option("images", inputs, "PNG files or directories")->required();
    auto *decode = app.add_subcommand("decode", "Decode .smc containers into images");
    decode->add_option("containers", inputs, ".smc files or directories")->required();
    auto *round = app.add_subcommand("roundtrip", "Encode then decode, printing a rate summary");
    round->add_option("images", inputs, "PNG files or directories")->required();
    auto *reflect = app.add_subcommand("reflect", "Run reflection on an existing image");
    reflect->add_option("image", inputs, "PNG image to refine")->required()->expected(1);
    reflect->add_option("--description", description, "Original description text or @file")->required();
    auto *report = app.add_subcommand("report", "Rate table across containers");
    report->add_option("containers", inputs, ".smc files")->required();
    report->add_option("--baseline", baseline, "Baseline file (e.g. a JPEG) for the ratio column");
    report->add_flag("--json", report_json, "Emit JSON instead of a table");
    auto *inspect = app.add_subcommand("inspect", "Print container header and payload text");
    inspect->add_option("container", inputs, ".smc file")->required()->expected(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e, out, err);
    }

    // CLI11 drops env values that fail validation; read it here so typos are errors.
    if (backend_opt->count() == 0) {
        if (const char *env = std::getenv("SEMCODEC_BACKEND"); env != nullptr && *env != '\0') cfg.backend = env;
    }

    if (*inspect) return cmd_inspect(inputs.front(), out, err);
    if (*report) return cmd_report(expand_inputs(inputs, ".smc"), baseline, report_json, out, err);

    PipelineConfig pcfg;
    std::unique_ptr<Backend> backend;
    try {
        pcfg = cfg.pipeline();
        fs::create_directories(cfg.out_dir);
        backend = make_backend(cfg);
    } catch (...) {
        return classify_exception(std::current_exception(), err);
    }

    if (*encode) {
        return for_each_job(expand_inputs(inputs, ".png"), cfg.jobs, out, err, [&](const std::string &p) {
            auto art = encode_to_disk(p, cfg, pcfg, *backend);
            const auto c = decode_container(std::span<const std::uint8_t>(art.result.container));
            std::string line = fmt::format("wrote {}\n", art.smc.string());
            if (art.result.word_budget_violation) {
                const auto &v = *art.result.word_budget_violation;
                line += fmt::format("warning: WordBudgetViolation target={} actual={} ({:.1f}%)\n", v.target,
                                    v.actual, 100.0 * v.deviation);
            }
            return line + summary_line(fs::path(p).filename().string(), c, art.result.report);
        });
    }
    if (*decode) {
        return for_each_job(expand_inputs(inputs, ".smc"), cfg.jobs, out, err, [&](const std::string &p) {
            auto art = decode_to_disk(p, cfg, pcfg, *backend);
            std::string lines;
            for (const auto &img : art.images) lines += fmt::format("wrote {}\n", img.string());
            if (art.result.reflection_skipped) {
                lines += fmt::format("reflection skipped: {}\n", to_string(*art.result.reflection_skipped));
            }
            return lines;
        });
    }
    if (*round) {
        return for_each_job(expand_inputs(inputs, ".png"), cfg.jobs, out, err, [&](const std::string &p) {
            auto enc = encode_to_disk(p, cfg, pcfg, *backend);
            auto dec = decode_to_disk(enc.smc, cfg, pcfg, *backend);
            const auto shared = shared_stage_texts(enc.result.transcript, dec.result.transcript,
                                                   enc.result.intermediate.compressed_text);
            const auto c = decode_container(std::span<const std::uint8_t>(enc.result.container));
            std::string lines;
            for (const auto &text : shared) lines += fmt::format("warning: decoder repeats encoder text \"{}\"\n", text);
            return lines + summary_line(fs::path(p).filename().string(), c, enc.result.report);
        });
    }
    if (*reflect) {
        try {
            std::string original = description;
            if (!original.empty() && original.front() == '@') {
                std::ifstream in(original.substr(1));
                if (!in) throw ImageIoError("cannot read " + original.substr(1));
                std::stringstream ss;
                ss << in.rdbuf();
                original = trim(ss.str());
            }
            const fs::path image_path = inputs.front();
            const ImageRef image(read_png(image_path));
            const std::string stem = image_path.stem().string();
            BackendSession session(session_id_for("reflect", image.content_hash()));
            // The image stands in for a previous generation in this session.
            session.append({Message::Role::assistant, "", image});
            SessionTranscript tr(session.id(), "reflect", pcfg.timestamps);
            tr.set_backend(backend->name(), backend->parameters());
            const auto trace = run_reflection(session, image, original, pcfg, *backend, &tr);
            nlohmann::json doc = tr.to_json();
            doc["reflection"] = trace.to_json();
            write_text(fs::path(cfg.out_dir) / (stem + ".reflect.transcript.json"), doc.dump(2) + "\n");
            int i = 1;
            for (const auto &rec : trace.iterations) {
                const auto pre = fs::path(cfg.out_dir) / fmt::format("{}.reflect_{}_pre.png", stem, i);
                const auto post = fs::path(cfg.out_dir) / fmt::format("{}.reflect_{}_post.png", stem, i);
                write_png(pre, rec.generated_image.pixels());
                write_png(post, rec.regenerated_image.pixels());
                out << "wrote " << pre.string() << "\nwrote " << post.string() << '\n';
                ++i;
            }
            out << "iterations=" << trace.iterations.size() << ", stop_reason=" << to_string(trace.stop_reason)
                << '\n';
            return kOk;
        } catch (...) {
            return classify_exception(std::current_exception(), err);
        }
    }
    return kFailure;
}

}  // namespace semcodec::cli
